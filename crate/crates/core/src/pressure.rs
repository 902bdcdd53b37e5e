//! Global-pressure solve: the primal form of the mixed finite volume scheme on the
//! immersed rotated-Q1 space, `Σ_Q ∫_Q β ∇p_h·∇χ = ∫ f̄_h χ` with `β = λ(S_h) K`.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

pub use crate::field::{DofMarker, EdgeScalarField};
use crate::error::{Error, Result};
use crate::fem::{segment_rule, ElementBasis, ElementQuadrature, ImmersedBasis};
use crate::field::VertexScalarField;
use crate::fluid::FluidModel;
use crate::linalg::{pcg, CsrMatrix, SolveStats, SolverSettings};
use crate::mesh::{Grid, Interface, Point, Side};

/// Pointwise coefficient `β(x) = λ(S_h(x)) K(side)` plus the frozen `β±` used by cut-element bases.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub k_plus: f64,
    pub k_minus: f64,
    pub fluid: FluidModel,
    saturation: VertexScalarField,
    cut_betas: Vec<(f64, f64)>,
}

impl CoefficientField {
    pub fn new(
        grid: &Grid,
        interface: &Interface,
        k_plus: f64,
        k_minus: f64,
        saturation: &VertexScalarField,
        fluid: &FluidModel,
    ) -> Self {
        let cut_betas = interface
            .cuts()
            .iter()
            .map(|cut| {
                let lambda = fluid.total_mobility(saturation.value_at(grid, cut.element, cut.g));
                (lambda * k_plus, lambda * k_minus)
            })
            .collect();
        CoefficientField {
            k_plus,
            k_minus,
            fluid: fluid.clone(),
            saturation: saturation.clone(),
            cut_betas,
        }
    }

    pub fn permeability(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.k_plus,
            Side::Minus => self.k_minus,
        }
    }

    pub fn saturation(&self) -> &VertexScalarField {
        &self.saturation
    }

    pub fn beta(&self, grid: &Grid, e: usize, p: Point, side: Side) -> f64 {
        self.fluid.total_mobility(self.saturation.value_at(grid, e, p)) * self.permeability(side)
    }

    /// `(β⁺, β⁻)` of the `k`-th cut element (in `Interface::cuts` order).
    pub fn cut_betas(&self, k: usize) -> (f64, f64) {
        self.cut_betas[k]
    }
}

static NEXT_TOKEN: AtomicU64 = AtomicU64::new(1);

/// Element bases, local stiffness matrices and averaged sources for one pressure solve.
///
/// Velocity recovery must use the same operator as the solve it post-processes; fields solved
/// with an operator carry its token.
#[derive(Clone, Debug)]
pub struct PressureOperator {
    token: u64,
    pub bases: Vec<ElementBasis>,
    /// `∫_Q β ∇φ_i · ∇φ_j`.
    pub stiffness: Vec<[[f64; 4]; 4]>,
    /// `(1/|Q|) ∫_Q q`.
    pub source_average: Vec<f64>,
    /// `∫_Q φ_i`.
    pub basis_integrals: Vec<[f64; 4]>,
}

impl PressureOperator {
    pub fn token(&self) -> u64 {
        self.token
    }

    /// Local load vector `f̄_Q ∫_Q φ_i`.
    pub fn load(&self, e: usize) -> [f64; 4] {
        self.basis_integrals[e].map(|v| v * self.source_average[e])
    }

    /// Value and gradient of the discrete pressure at a point of element `e`.
    pub fn eval_pressure(&self, grid: &Grid, p: &EdgeScalarField, e: usize, x: Point) -> (f64, Point) {
        let basis = &self.bases[e];
        basis.eval_combination(&p.local(grid, e), x, basis.side_of(x))
    }
}

/// Build element bases for the current coefficient and integrate the local operators.
pub fn build_operator(
    grid: &Grid,
    interface: &Interface,
    coefficient: &CoefficientField,
    source: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<PressureOperator> {
    let mut cut_index = vec![usize::MAX; grid.n_elements()];
    for (k, cut) in interface.cuts().iter().enumerate() {
        cut_index[cut.element] = k;
    }
    let locals: Vec<_> = (0..grid.n_elements())
        .into_par_iter()
        .map(|e| -> Result<_> {
            let basis = match interface.cut(e) {
                None => ElementBasis::standard(grid, e),
                Some(cut) => {
                    let (bp, bm) = coefficient.cut_betas(cut_index[e]);
                    ElementBasis::Immersed(Box::new(ImmersedBasis::build(grid, cut, bp, bm)?))
                }
            };
            let quad = ElementQuadrature::new(grid, interface, e);
            let mut k = [[0.0; 4]; 4];
            let mut integrals = [0.0; 4];
            let mut q_int = 0.0;
            for (p, w, side) in quad.iter() {
                let beta = coefficient.beta(grid, e, p, side);
                let vals: [(f64, Point); 4] = std::array::from_fn(|i| basis.eval_on(i, p, side));
                for i in 0..4 {
                    integrals[i] += w * vals[i].0;
                    for j in 0..4 {
                        k[i][j] += w * beta * (vals[i].1[0] * vals[j].1[0] + vals[i].1[1] * vals[j].1[1]);
                    }
                }
                q_int += w * source(p);
            }
            Ok((basis, k, integrals, q_int / grid.element_area()))
        })
        .collect();
    let mut op = PressureOperator {
        token: NEXT_TOKEN.fetch_add(1, Ordering::Relaxed),
        bases: Vec::with_capacity(grid.n_elements()),
        stiffness: Vec::with_capacity(grid.n_elements()),
        source_average: Vec::with_capacity(grid.n_elements()),
        basis_integrals: Vec::with_capacity(grid.n_elements()),
    };
    for local in locals {
        let (basis, k, integrals, fbar) = local?;
        op.bases.push(basis);
        op.stiffness.push(k);
        op.basis_integrals.push(integrals);
        op.source_average.push(fbar);
    }
    Ok(op)
}

/// Pressure boundary treatment.
pub enum PressureBoundary<'a> {
    /// Every boundary edge takes the edge average of the given data.
    Dirichlet(&'a (dyn Fn(Point) -> f64 + Sync)),
    /// No-flow boundary with a single DOF pinned to fix the constant.
    Pinned { edge: usize, value: f64 },
}

/// Reduced SPD system on the free edges.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub settings: SolverSettings,
    /// Values of constrained DOFs (others zero), full edge length.
    pub prescribed: Vec<f64>,
    pub markers: Vec<DofMarker>,
    /// Free-DOF number of each edge.
    pub free_index: Vec<Option<usize>>,
    pub free_edges: Vec<usize>,
    /// Constant subtracted from every DOF while solving (mean of the constrained values).
    pub shift: f64,
    token: u64,
}

/// Edge average of `f` over a grid edge, split at the interface crossing if there is one.
pub fn edge_average(grid: &Grid, interface: &Interface, edge: usize, f: &dyn Fn(Point) -> f64) -> f64 {
    let [a, b] = grid.edge_vertices(edge).map(|v| grid.vertex(v));
    let integral = match interface.edge_point(edge) {
        Some(m) => segment_rule(a, m).integrate(f) + segment_rule(m, b).integrate(f),
        None => segment_rule(a, b).integrate(f),
    };
    integral / grid.edge_length(edge)
}

pub fn assemble(
    grid: &Grid,
    interface: &Interface,
    op: &PressureOperator,
    boundary: &PressureBoundary<'_>,
    settings: SolverSettings,
) -> Result<SparseSystem> {
    if op.bases.len() != grid.n_elements() {
        return Err(Error::Contract("operator was built for a different grid".into()));
    }
    for cut in interface.cuts() {
        if !matches!(op.bases[cut.element], ElementBasis::Immersed(_)) {
            return Err(Error::MissingBasis(cut.element));
        }
    }
    let n_edges = grid.n_edges();
    let mut markers = vec![DofMarker::Free; n_edges];
    let mut prescribed = vec![0.0; n_edges];
    match boundary {
        PressureBoundary::Dirichlet(data) => {
            for edge in 0..n_edges {
                if grid.is_boundary_edge(edge) {
                    markers[edge] = DofMarker::Dirichlet;
                    prescribed[edge] = edge_average(grid, interface, edge, data);
                }
            }
        }
        PressureBoundary::Pinned { edge, value } => {
            let total: f64 = op.source_average.iter().sum::<f64>() * grid.element_area();
            let scale: f64 = op.source_average.iter().map(|v| v.abs()).sum::<f64>() * grid.element_area();
            if total.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::IncompatibleSource { integral: total });
            }
            markers[*edge] = DofMarker::Dirichlet;
            prescribed[*edge] = *value;
        }
    }
    // pressures carry large constant offsets; solving for p - shift keeps residuals at flux scale
    let constrained: Vec<f64> = (0..n_edges)
        .filter(|&e| markers[e] == DofMarker::Dirichlet)
        .map(|e| prescribed[e])
        .collect();
    let shift = if constrained.is_empty() {
        0.0
    } else {
        constrained.iter().sum::<f64>() / constrained.len() as f64
    };
    let mut free_index = vec![None; n_edges];
    let mut free_edges = Vec::new();
    for edge in 0..n_edges {
        if markers[edge] == DofMarker::Free {
            free_index[edge] = Some(free_edges.len());
            free_edges.push(edge);
        }
    }
    let mut triplets = Vec::with_capacity(16 * grid.n_elements());
    let mut rhs = vec![0.0; free_edges.len()];
    for e in 0..grid.n_elements() {
        let edges = grid.element_edges(e);
        let k = &op.stiffness[e];
        let load = op.load(e);
        for i in 0..4 {
            let Some(fi) = free_index[edges[i]] else { continue };
            rhs[fi] += load[i];
            for j in 0..4 {
                match free_index[edges[j]] {
                    Some(fj) => triplets.push((fi, fj, k[i][j])),
                    None => rhs[fi] -= k[i][j] * (prescribed[edges[j]] - shift),
                }
            }
        }
    }
    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(free_edges.len(), &triplets),
        rhs,
        settings,
        prescribed,
        markers,
        free_index,
        free_edges,
        shift,
        token: op.token,
    })
}

/// Solve the reduced system by Jacobi-preconditioned CG, optionally warm-started.
pub fn solve(system: &SparseSystem, guess: Option<&EdgeScalarField>) -> Result<(EdgeScalarField, SolveStats)> {
    let mut x: Vec<f64> = match guess {
        Some(g) => system.free_edges.iter().map(|&e| g.values[e] - system.shift).collect(),
        None => vec![0.0; system.free_edges.len()],
    };
    let stats = if x.is_empty() {
        SolveStats::default()
    } else {
        pcg(&system.matrix, &system.rhs, &mut x, &system.settings)?
    };
    let mut deviation: Vec<f64> = system.prescribed.iter().map(|v| v - system.shift).collect();
    for (k, &edge) in system.free_edges.iter().enumerate() {
        deviation[edge] = x[k];
    }
    Ok((
        EdgeScalarField {
            values: deviation.iter().map(|d| d + system.shift).collect(),
            deviation,
            offset: system.shift,
            markers: system.markers.clone(),
            operator: system.token,
        },
        stats,
    ))
}

/// Targets of [`refine`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineSettings {
    /// Largest interior flux mismatch accepted, relative to the largest element flux.
    pub target: f64,
    /// Residual reduction asked of each correction solve.
    pub sweep_tol: f64,
    pub max_sweeps: usize,
}

impl Default for RefineSettings {
    fn default() -> Self {
        RefineSettings {
            target: 1e-10,
            sweep_tol: 1e-3,
            max_sweeps: 4,
        }
    }
}

/// Element-by-element residual on the free DOFs (the sum of the outward fluxes each edge receives
/// from its elements) and the largest single element flux.
fn flux_residual(grid: &Grid, op: &PressureOperator, system: &SparseSystem, deviation: &[f64]) -> (Vec<f64>, f64) {
    let mut r = vec![0.0; system.free_edges.len()];
    let mut scale: f64 = 0.0;
    for e in 0..grid.n_elements() {
        let edges = grid.element_edges(e);
        let p = edges.map(|k| deviation[k]);
        let mean = p.iter().sum::<f64>() / 4.0;
        let load = op.load(e);
        let k = &op.stiffness[e];
        for i in 0..4 {
            let flux = load[i] - (0..4).map(|j| k[i][j] * (p[j] - mean)).sum::<f64>();
            scale = scale.max(flux.abs());
            if let Some(fi) = system.free_index[edges[i]] {
                r[fi] += flux;
            }
        }
    }
    (r, scale)
}

/// Iterative refinement of a solved field against the element-local residual.
///
/// The global matrix-vector product loses about `eps · |p|` per row, which for large pressure levels
/// is not small next to the fluxes; the local residual subtracts each element's mean first and
/// stays accurate. Returns the correction iterations and the final mismatch relative to the
/// largest element flux.
pub fn refine(
    grid: &Grid,
    op: &PressureOperator,
    system: &SparseSystem,
    field: &mut EdgeScalarField,
    settings: &RefineSettings,
) -> Result<SolveStats> {
    if field.operator != system.token || op.token != system.token {
        return Err(Error::Contract("refinement needs the field, system and operator of one solve".into()));
    }
    let mut stats = SolveStats::default();
    let inner = SolverSettings {
        rel_tol: settings.sweep_tol,
        max_iter: system.settings.max_iter,
    };
    for sweep in 0..=settings.max_sweeps {
        let (r, scale) = flux_residual(grid, op, system, &field.deviation);
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        stats.residual = if scale > 0.0 { worst / scale } else { 0.0 };
        if stats.residual <= settings.target || sweep == settings.max_sweeps {
            break;
        }
        let mut d = vec![0.0; r.len()];
        stats.iterations += pcg(&system.matrix, &r, &mut d, &inner)?.iterations;
        for (k, &edge) in system.free_edges.iter().enumerate() {
            field.deviation[edge] += d[k];
            field.values[edge] = field.deviation[edge] + field.offset;
        }
    }
    Ok(stats)
}
