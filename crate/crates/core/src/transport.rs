//! Explicit saturation update on vertex-centred dual volumes.
//!
//! The trial space is the bilinear conforming space on the primal grid and the test space is
//! piecewise constant on dual volumes, so one step solves `M S^{l+1} = b` with the dual mass
//! matrix `M_{P,j} = ∫_{Q_P*} ψ_j`. Fluxes through the dual faces use the upwinded fractional flow.

use rayon::prelude::*;

pub use crate::field::{DofMarker, VertexScalarField};
use crate::error::{Error, Result};
use crate::fem::rectangle_rule;
use crate::fluid::FluidModel;
use crate::linalg::{gauss_seidel, CsrMatrix, SolveStats, SolverSettings};
use crate::mesh::{DualSegment, DualVolume, Grid, LevelSet, Point, Side};
use crate::velocity::{eval_velocity, EdgeFluxField};

/// Saturations outside `[-MONOTONE_SLACK, 1 + MONOTONE_SLACK]` are reported by the time loop.
pub const MONOTONE_SLACK: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct DualMassMatrix {
    /// `∫_{Q_P*} ψ_j` for every vertex pair, no boundary modification.
    pub raw: CsrMatrix,
    /// Matrix actually solved: Dirichlet rows replaced by identity rows.
    pub system: CsrMatrix,
    /// `|Q_P*|`.
    pub areas: Vec<f64>,
    pub markers: Vec<DofMarker>,
    pub lumped: bool,
}

impl DualMassMatrix {
    /// `Σ_P (M S)_P = ∫_Ω S_h` (or its lumped counterpart).
    pub fn total(&self, s: &[f64]) -> f64 {
        self.raw.mul(s).iter().sum()
    }
}

/// Dual mass matrix on a uniform grid. With `lumped`, each row is collapsed onto its diagonal.
pub fn assemble_dual_mass(grid: &Grid, markers: &[DofMarker], lumped: bool) -> DualMassMatrix {
    let (hx, hy) = (grid.hx(), grid.hy());
    // quarter cell of a corner: own hat integrates to 3h/8 per direction, the neighbour's to h/8
    let own = [3.0 * hx / 8.0, 3.0 * hy / 8.0];
    let other = [hx / 8.0, hy / 8.0];
    let mut triplets = Vec::with_capacity(16 * grid.n_elements());
    for e in 0..grid.n_elements() {
        let verts = grid.element_vertices(e);
        for (a, &p) in verts.iter().enumerate() {
            for (b, &q) in verts.iter().enumerate() {
                // corners 0..3 are counter-clockwise from the bottom-left
                let same_x = matches!((a, b), (0, 0) | (0, 3) | (3, 0) | (3, 3) | (1, 1) | (1, 2) | (2, 1) | (2, 2));
                let same_y = matches!((a, b), (0, 0) | (0, 1) | (1, 0) | (1, 1) | (2, 2) | (2, 3) | (3, 2) | (3, 3));
                let wx = if same_x { own[0] } else { other[0] };
                let wy = if same_y { own[1] } else { other[1] };
                let col = if lumped { p } else { q };
                triplets.push((p, col, wx * wy));
            }
        }
    }
    let raw = CsrMatrix::from_triplets(grid.n_vertices(), &triplets);
    let system_triplets: Vec<_> = triplets
        .iter()
        .filter(|&&(r, _, _)| markers[r] == DofMarker::Free)
        .copied()
        .chain((0..grid.n_vertices()).filter(|&v| markers[v] == DofMarker::Dirichlet).map(|v| (v, v, 1.0)))
        .collect();
    let areas = raw.mul(&vec![1.0; grid.n_vertices()]);
    DualMassMatrix {
        system: CsrMatrix::from_triplets(grid.n_vertices(), &system_triplets),
        raw,
        areas,
        markers: markers.to_vec(),
        lumped,
    }
}

/// Read-only data needed to evaluate fluxes through dual faces.
pub struct FluxContext<'a> {
    pub grid: &'a Grid,
    pub level_set: &'a LevelSet,
    pub k_plus: f64,
    pub k_minus: f64,
    pub fluid: &'a FluidModel,
    pub velocity: &'a EdgeFluxField,
    pub saturation: &'a VertexScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentFlux {
    /// `|γ| f_w(S*) v_n`.
    pub flux: f64,
    /// Normal velocity `v_n` at the segment midpoint.
    pub normal_velocity: f64,
}

impl FluxContext<'_> {
    fn permeability(&self, p: Point) -> f64 {
        match self.level_set.side(p) {
            Side::Plus => self.k_plus,
            Side::Minus => self.k_minus,
        }
    }
}

/// Upwinded flux out of the dual volume of `vertex` through an interior segment.
pub fn upwind_flux(ctx: &FluxContext<'_>, vertex: usize, seg: &DualSegment) -> SegmentFlux {
    let m = seg.midpoint();
    let e = seg.element;
    let u = eval_velocity(ctx.grid, e, &ctx.velocity.local[e], m);
    let mut v = u;
    if ctx.fluid.has_capillarity() {
        let (s, grad) = ctx.saturation.eval(ctx.grid, e, m);
        let c = ctx.permeability(m) * ctx.fluid.lambda_n(s) * ctx.fluid.dcapillary_pressure(s);
        v = [u[0] + c * grad[0], u[1] + c * grad[1]];
    }
    let vn = v[0] * seg.normal[0] + v[1] * seg.normal[1];
    let donor = match (vn >= 0.0, seg.neighbor) {
        (true, _) | (false, None) => vertex,
        (false, Some(j)) => j,
    };
    SegmentFlux {
        flux: seg.length * ctx.fluid.frac_w(ctx.saturation.values[donor]) * vn,
        normal_velocity: vn,
    }
}

/// Boundary data for the saturation step.
#[derive(Clone, Copy, Default)]
pub struct TransportBoundary<'a> {
    /// Saturation imposed at `Dirichlet` vertices at the new time level.
    pub dirichlet: Option<&'a (dyn Fn(Point) -> f64 + Sync)>,
    /// Outward wetting flux density `U_w·n` on boundary faces; `None` means no flow.
    pub flux: Option<&'a (dyn Fn(Point) -> f64 + Sync)>,
}

/// Wetting source density evaluated at a point with the current saturation interpolant value.
pub type WettingSource<'a> = &'a (dyn Fn(Point, f64) -> f64 + Sync);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportSettings {
    pub solver: SolverSettings,
    /// Warn when `max|v_n| Δt / h` exceeds this value.
    pub cfl_warning: f64,
}

impl Default for TransportSettings {
    fn default() -> Self {
        TransportSettings {
            solver: SolverSettings {
                rel_tol: 1e-12,
                max_iter: 10_000,
            },
            cfl_warning: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransportDiagnostics {
    pub solve: SolveStats,
    pub cfl: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// `Σ_P (M S)_P` before and after the step.
    pub mass_before: f64,
    pub mass_after: f64,
    /// `(Δt/Φ) Σ_P ∫_{Q_P*} q_w` over free vertices.
    pub source: f64,
    /// `(Δt/Φ)` times the net flux through boundary faces of free vertices.
    pub boundary_outflow: f64,
}

impl TransportDiagnostics {
    /// `mass_after - mass_before - source + boundary_outflow`; zero up to the solver tolerance
    /// when no vertex is Dirichlet.
    pub fn budget_defect(&self) -> f64 {
        self.mass_after - self.mass_before - self.source + self.boundary_outflow
    }
}

pub struct SaturationStep<'a> {
    pub flux: FluxContext<'a>,
    pub duals: &'a [DualVolume],
    pub mass: &'a DualMassMatrix,
    pub wetting_source: WettingSource<'a>,
    pub boundary: TransportBoundary<'a>,
    pub dt: f64,
}

struct VertexBalance {
    source: f64,
    interior: f64,
    boundary: f64,
    max_vn: f64,
}

fn vertex_balance(step: &SaturationStep<'_>, vol: &DualVolume) -> VertexBalance {
    let ctx = &step.flux;
    let grid = ctx.grid;
    let p = grid.vertex(vol.vertex);
    let mut source = 0.0;
    for &(e, c) in &vol.pieces {
        let lo = [p[0].min(c[0]), p[1].min(c[1])];
        let hi = [p[0].max(c[0]), p[1].max(c[1])];
        source += rectangle_rule(lo, hi).integrate(|x| (step.wetting_source)(x, ctx.saturation.value_at(grid, e, x)));
    }
    let mut interior = 0.0;
    let mut boundary = 0.0;
    let mut max_vn: f64 = 0.0;
    for seg in &vol.segments {
        if seg.is_boundary() {
            if let Some(f) = step.boundary.flux {
                boundary += seg.length * f(seg.midpoint());
            }
        } else {
            let sf = upwind_flux(ctx, vol.vertex, seg);
            interior += sf.flux;
            max_vn = max_vn.max(sf.normal_velocity.abs());
        }
    }
    VertexBalance {
        source,
        interior,
        boundary,
        max_vn,
    }
}

/// Advance the saturation by one step of length `dt`.
pub fn step_saturation(
    step: &SaturationStep<'_>,
    settings: &TransportSettings,
) -> Result<(VertexScalarField, TransportDiagnostics)> {
    let ctx = &step.flux;
    let grid = ctx.grid;
    let old = ctx.saturation;
    if step.dt <= 0.0 {
        return Err(Error::Contract(format!("time step must be positive, got {}", step.dt)));
    }
    if step.duals.len() != grid.n_vertices() || step.mass.markers.len() != grid.n_vertices() {
        return Err(Error::Contract("dual volumes or mass matrix built for a different grid".into()));
    }
    let scale = step.dt / ctx.fluid.porosity;
    let balances: Vec<VertexBalance> = step.duals.par_iter().map(|vol| vertex_balance(step, vol)).collect();
    let m_old = step.mass.raw.mul(&old.values);
    let mut rhs = vec![0.0; grid.n_vertices()];
    let mut diag = TransportDiagnostics {
        mass_before: m_old.iter().sum(),
        ..TransportDiagnostics::default()
    };
    for (v, bal) in balances.iter().enumerate() {
        diag.cfl = diag.cfl.max(bal.max_vn * step.dt / grid.h());
        match step.mass.markers[v] {
            DofMarker::Free => {
                rhs[v] = m_old[v] + scale * (bal.source - bal.interior - bal.boundary);
                diag.source += scale * bal.source;
                diag.boundary_outflow += scale * bal.boundary;
            }
            DofMarker::Dirichlet => {
                let data = step
                    .boundary
                    .dirichlet
                    .ok_or_else(|| Error::Contract("Dirichlet saturation vertex without boundary data".into()))?;
                rhs[v] = data(grid.vertex(v));
            }
        }
    }
    if diag.cfl > settings.cfl_warning {
        log::warn!("saturation step CFL estimate {:.3} exceeds {}", diag.cfl, settings.cfl_warning);
    }
    let mut values = old.values.clone();
    diag.solve = if step.mass.lumped {
        for (v, x) in values.iter_mut().enumerate() {
            *x = rhs[v] / step.mass.system.get(v, v);
        }
        SolveStats::default()
    } else {
        gauss_seidel(&step.mass.system, &rhs, &mut values, &settings.solver)?
    };
    let new = VertexScalarField {
        values,
        markers: old.markers.clone(),
    };
    (diag.s_min, diag.s_max) = new.min_max();
    diag.mass_after = step.mass.total(&new.values);
    Ok((new, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_dual_volumes;

    fn no_velocity(grid: &Grid) -> EdgeFluxField {
        EdgeFluxField {
            local: vec![[0.0; 4]; grid.n_elements()],
            edge: vec![0.0; grid.n_edges()],
            max_mismatch: 0.0,
            relative_mismatch: 0.0,
        }
    }

    /// Uniform velocity `(a, b)` written as RT0 fluxes.
    fn uniform_velocity(grid: &Grid, a: f64, b: f64) -> EdgeFluxField {
        let (hx, hy) = (grid.hx(), grid.hy());
        EdgeFluxField {
            local: vec![[-b * hx, a * hy, b * hx, -a * hy]; grid.n_elements()],
            edge: vec![0.0; grid.n_edges()],
            max_mismatch: 0.0,
            relative_mismatch: 0.0,
        }
    }

    #[test]
    fn interior_entries_match_closed_form() {
        let g = Grid::square(4, 0.0, 2.0).unwrap();
        let h: f64 = 0.5;
        let m = assemble_dual_mass(&g, &vec![DofMarker::Free; g.n_vertices()], false);
        let p = g.vertex_id(2, 2);
        assert!((m.raw.get(p, p) - 9.0 * h * h / 16.0).abs() < 1e-15);
        assert!((m.raw.get(p, g.vertex_id(3, 2)) - 3.0 * h * h / 32.0).abs() < 1e-15);
        assert!((m.raw.get(p, g.vertex_id(2, 1)) - 3.0 * h * h / 32.0).abs() < 1e-15);
        assert!((m.raw.get(p, g.vertex_id(3, 3)) - h * h / 64.0).abs() < 1e-15);
        assert!((m.raw.get(0, 0) - 9.0 * h * h / 64.0).abs() < 1e-15);
        assert_eq!(m.raw.row(p).count(), 9);
    }

    #[test]
    fn row_sums_are_dual_areas() {
        let g = Grid::new(5, 3, [0.0, 0.0], [1.0, 0.9]).unwrap();
        let m = assemble_dual_mass(&g, &vec![DofMarker::Free; g.n_vertices()], false);
        let duals = build_dual_volumes(&g);
        for (v, vol) in duals.iter().enumerate() {
            assert!((m.areas[v] - vol.area).abs() < 1e-12 * vol.area);
        }
        assert!((m.areas.iter().sum::<f64>() - g.area()).abs() < 1e-12 * g.area());
        assert!((m.areas[0] - 0.25 * g.element_area()).abs() < 1e-15);
        for r in 0..g.n_vertices() {
            let off: f64 = m.raw.row(r).filter(|&(c, _)| c != r).map(|(_, v)| v.abs()).sum();
            assert!(m.raw.get(r, r) > off);
        }
    }

    #[test]
    fn lumped_matrix_is_diagonal_with_same_row_sums() {
        let g = Grid::square(4, 0.0, 1.0).unwrap();
        let free = vec![DofMarker::Free; g.n_vertices()];
        let m = assemble_dual_mass(&g, &free, false);
        let l = assemble_dual_mass(&g, &free, true);
        for r in 0..g.n_vertices() {
            assert_eq!(l.raw.row(r).count(), 1);
            assert!((l.raw.get(r, r) - m.areas[r]).abs() < 1e-15);
        }
    }

    #[test]
    fn dirichlet_rows_become_identity() {
        let g = Grid::square(3, 0.0, 1.0).unwrap();
        let s = VertexScalarField::constant(&g, 0.0).with_dirichlet_boundary(&g);
        let m = assemble_dual_mass(&g, &s.markers, false);
        assert_eq!(m.system.row(0).collect::<Vec<_>>(), vec![(0, 1.0)]);
        let inner = g.vertex_id(1, 1);
        assert_eq!(m.system.row(inner).count(), 9);
    }

    fn context<'a>(
        g: &'a Grid,
        ls: &'a LevelSet,
        fluid: &'a FluidModel,
        u: &'a EdgeFluxField,
        s: &'a VertexScalarField,
    ) -> FluxContext<'a> {
        FluxContext {
            grid: g,
            level_set: ls,
            k_plus: 1.0,
            k_minus: 1.0,
            fluid,
            velocity: u,
            saturation: s,
        }
    }

    #[test]
    fn uniform_flow_flux_takes_upstream_value() {
        let g = Grid::square(4, 0.0, 1.0).unwrap();
        let ls = LevelSet::new(|_, _| 1.0);
        let fluid = FluidModel::default();
        let u = uniform_velocity(&g, 1.0, 0.0);
        let s = VertexScalarField::constant(&g, 0.5);
        let ctx = context(&g, &ls, &fluid, &u, &s);
        let duals = build_dual_volumes(&g);
        let vol = &duals[g.vertex_id(2, 2)];
        for seg in vol.segments.iter().filter(|s| !s.is_boundary()) {
            let f = upwind_flux(&ctx, vol.vertex, seg);
            let expect = seg.length * fluid.frac_w(0.5) * seg.normal[0];
            assert!((f.flux - expect).abs() < 1e-15);
        }
        let zero = no_velocity(&g);
        let ctx = context(&g, &ls, &fluid, &zero, &s);
        assert!(vol.segments.iter().all(|seg| upwind_flux(&ctx, vol.vertex, seg).flux == 0.0));
    }

    #[test]
    fn shared_segment_fluxes_are_exact_negatives() {
        let g = Grid::square(6, 0.0, 1.0).unwrap();
        let ls = LevelSet::new(|x, y| x - y + 0.1);
        let fluid = FluidModel {
            mu_n: 3.0,
            entry_pressure: 0.3,
            ..FluidModel::default()
        };
        let u = uniform_velocity(&g, 0.7, -0.4);
        let s = VertexScalarField::from_fn(&g, |p| 0.2 + 0.6 * p[0] * p[1]);
        let mut ctx = context(&g, &ls, &fluid, &u, &s);
        ctx.k_minus = 0.01;
        let duals = build_dual_volumes(&g);
        for vol in &duals {
            for seg in &vol.segments {
                let Some(j) = seg.neighbor else { continue };
                let twin = duals[j]
                    .segments
                    .iter()
                    .find(|t| t.element == seg.element && t.neighbor == Some(vol.vertex))
                    .unwrap();
                let a = upwind_flux(&ctx, vol.vertex, seg).flux;
                let b = upwind_flux(&ctx, j, twin).flux;
                assert_eq!(a, -b);
            }
        }
    }

    fn run_steps(g: &Grid, s0: VertexScalarField, u: &EdgeFluxField, fluid: &FluidModel, steps: usize) -> Vec<TransportDiagnostics> {
        let ls = LevelSet::new(|_, _| 1.0);
        let duals = build_dual_volumes(g);
        let mass = assemble_dual_mass(g, &s0.markers, false);
        let mut s = s0;
        let mut out = Vec::new();
        for _ in 0..steps {
            let step = SaturationStep {
                flux: context(g, &ls, fluid, u, &s),
                duals: &duals,
                mass: &mass,
                wetting_source: &|_, _| 0.0,
                boundary: TransportBoundary::default(),
                dt: 0.2 * g.h(),
            };
            let (next, diag) = step_saturation(&step, &TransportSettings::default()).unwrap();
            out.push(diag);
            s = next;
        }
        out
    }

    #[test]
    fn steady_constant_state_is_preserved() {
        let g = Grid::square(5, 0.0, 1.0).unwrap();
        let s = VertexScalarField::constant(&g, 0.4).with_dirichlet_boundary(&g);
        let ls = LevelSet::new(|_, _| 1.0);
        let fluid = FluidModel::default();
        let u = no_velocity(&g);
        let duals = build_dual_volumes(&g);
        let mass = assemble_dual_mass(&g, &s.markers, false);
        let step = SaturationStep {
            flux: context(&g, &ls, &fluid, &u, &s),
            duals: &duals,
            mass: &mass,
            wetting_source: &|_, _| 0.0,
            boundary: TransportBoundary {
                dirichlet: Some(&|_| 0.4),
                flux: None,
            },
            dt: 0.1,
        };
        let (next, _) = step_saturation(&step, &TransportSettings::default()).unwrap();
        assert!(next.values.iter().all(|v| (v - 0.4).abs() < 1e-13));
    }

    #[test]
    fn mass_is_conserved_without_sources() {
        let g = Grid::square(16, 0.0, 1.0).unwrap();
        let s0 = VertexScalarField::from_fn(&g, |p| if p[0] < 0.4 { 0.9 } else { 0.1 });
        let u = circulation(&g);
        for d in run_steps(&g, s0, &u, &FluidModel::default(), 100) {
            assert!(d.budget_defect().abs() <= 1e-10 * d.mass_before, "{d:?}");
        }
    }

    /// RT0 field of the stream function `sin(πx) sin(πy)`: zero normal flux on the unit-square boundary.
    fn circulation(g: &Grid) -> EdgeFluxField {
        use std::f64::consts::PI;
        let psi = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let mut local = Vec::with_capacity(g.n_elements());
        for e in 0..g.n_elements() {
            let c = g.element_corners(e);
            // flux through an edge a -> b (counter-clockwise) is psi(b) - psi(a) with u = curl psi
            local.push(std::array::from_fn(|k| psi(c[(k + 1) % 4]) - psi(c[k])));
        }
        EdgeFluxField {
            local,
            edge: vec![0.0; g.n_edges()],
            max_mismatch: 0.0,
            relative_mismatch: 0.0,
        }
    }

    #[test]
    fn small_problem_matches_dense_solve() {
        let g = Grid::square(2, 0.0, 1.0).unwrap();
        let mut s = VertexScalarField::from_fn(&g, |p| 0.3 + p[0] - 0.5 * p[1]).with_dirichlet_boundary(&g);
        s.values[g.vertex_id(1, 1)] = 0.8;
        let ls = LevelSet::new(|_, _| 1.0);
        let fluid = FluidModel::default();
        let u = no_velocity(&g);
        let duals = build_dual_volumes(&g);
        let mass = assemble_dual_mass(&g, &s.markers, false);
        let step = SaturationStep {
            flux: context(&g, &ls, &fluid, &u, &s),
            duals: &duals,
            mass: &mass,
            wetting_source: &|_, _| 0.0,
            boundary: TransportBoundary {
                dirichlet: Some(&|_| 0.0),
                flux: None,
            },
            dt: 0.1,
        };
        let (next, _) = step_saturation(&step, &TransportSettings::default()).unwrap();
        let dense = nalgebra::DMatrix::from_fn(9, 9, |r, c| mass.system.get(r, c));
        let m_old = mass.raw.mul(&s.values);
        let rhs = nalgebra::DVector::from_fn(9, |r, _| if s.markers[r] == DofMarker::Free { m_old[r] } else { 0.0 });
        let x = dense.lu().solve(&rhs).unwrap();
        for v in 0..9 {
            assert!((next.values[v] - x[v]).abs() < 1e-12);
        }
    }
}
