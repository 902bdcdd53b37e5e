//! The sequential IMPES loop: pressure from the old saturation, local velocity recovery, then
//! one explicit saturation step.

use crate::error::{Error, Result};
use crate::field::{EdgeScalarField, VertexScalarField};
use crate::fluid::FluidModel;
use crate::linalg::{SolveStats, SolverSettings};
use crate::mesh::{build_dual_volumes, classify_elements, DualVolume, Grid, Interface, LevelSet, Point};
use crate::pressure::{
    assemble, build_operator, refine, solve, CoefficientField, PressureBoundary, PressureOperator, RefineSettings,
};
use crate::transport::{
    assemble_dual_mass, step_saturation, DualMassMatrix, FluxContext, SaturationStep, TransportBoundary,
    TransportDiagnostics, TransportSettings, MONOTONE_SLACK,
};
use crate::velocity::{recover, EdgeFluxField};

/// How the pressure is fixed on the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PressureCondition {
    /// Edge averages of [`TwoPhaseProblem::pressure_dirichlet`] on every boundary edge.
    Dirichlet,
    /// No flow everywhere, one edge pinned.
    Pinned { edge: usize, value: f64 },
}

/// Sources and boundary data of a two-phase problem. Times are absolute.
pub trait TwoPhaseProblem: Sync {
    /// `q_w + q_n`.
    fn total_source(&self, x: Point, t: f64) -> f64;
    /// `q_w`, given the current saturation interpolant value at `x`.
    fn wetting_source(&self, x: Point, t: f64, s: f64) -> f64;
    fn pressure_condition(&self) -> PressureCondition {
        PressureCondition::Dirichlet
    }
    fn pressure_dirichlet(&self, _x: Point, _t: f64) -> f64 {
        0.0
    }
    /// Saturation at Dirichlet-marked vertices.
    fn saturation_dirichlet(&self, _x: Point, _t: f64) -> f64 {
        0.0
    }
    /// Outward wetting flux density on boundary faces; `None` means no flow.
    fn wetting_boundary_flux(&self, _x: Point, _t: f64) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub grid: Grid,
    pub level_set: LevelSet,
    pub k_plus: f64,
    pub k_minus: f64,
    pub fluid: FluidModel,
    /// Initial saturation; its markers select the Dirichlet vertices.
    pub initial: VertexScalarField,
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub pressure_solver: SolverSettings,
    pub transport: TransportSettings,
    pub lumped_mass: bool,
}

impl SimulationConfig {
    /// Number of steps covering `[t0, t0 + duration]`; `duration / dt` must be an integer to 1e-9.
    pub fn steps_for(duration: f64, dt: f64) -> Result<usize> {
        if !(dt > 0.0) || !(duration >= 0.0) {
            return Err(Error::Config(format!("need dt > 0 and T >= 0, got dt = {dt}, T = {duration}")));
        }
        let n = (duration / dt).round();
        if (n * dt - duration).abs() > 1e-9 * duration.max(dt) {
            return Err(Error::Config(format!("T = {duration} is not a multiple of dt = {dt}")));
        }
        Ok(n as usize)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub pressure: SolveStats,
    /// Correction iterations and the relative mismatch left after refinement.
    pub refinement: SolveStats,
    /// Largest interior-edge flux disagreement relative to the largest flux.
    pub flux_mismatch: f64,
    /// Largest `|Σ_i F_i - f̄ |Q||` relative to the largest element flux magnitude.
    pub balance_defect: f64,
    pub transport: TransportDiagnostics,
}

/// Everything known at time level `l`.
#[derive(Clone, Debug)]
pub struct SimulationState {
    pub level: usize,
    pub time: f64,
    pub saturation: VertexScalarField,
    /// Pressure, operator and fluxes of the most recent step (`None` before the first step).
    pub pressure: Option<EdgeScalarField>,
    pub operator: Option<PressureOperator>,
    pub flux: Option<EdgeFluxField>,
    pub diagnostics: StepDiagnostics,
}

/// Thinned record of the run.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub level: usize,
    pub time: f64,
    pub saturation: VertexScalarField,
    pub diagnostics: StepDiagnostics,
}

pub struct Simulation<'a, P: TwoPhaseProblem> {
    config: &'a SimulationConfig,
    problem: &'a P,
    interface: Interface,
    duals: Vec<DualVolume>,
    mass: DualMassMatrix,
    state: SimulationState,
    previous_pressure: Option<EdgeScalarField>,
    range_reported: bool,
}

impl<'a, P: TwoPhaseProblem> Simulation<'a, P> {
    pub fn new(config: &'a SimulationConfig, problem: &'a P) -> Result<Self> {
        config.fluid.validate()?;
        if !(config.dt > 0.0) || !(config.k_plus > 0.0) || !(config.k_minus > 0.0) {
            return Err(Error::Config("dt and permeabilities must be positive".into()));
        }
        if config.initial.values.len() != config.grid.n_vertices() {
            return Err(Error::Config("initial saturation does not match the grid".into()));
        }
        let interface = classify_elements(&config.grid, &config.level_set)?;
        let duals = build_dual_volumes(&config.grid);
        let mass = assemble_dual_mass(&config.grid, &config.initial.markers, config.lumped_mass);
        Ok(Simulation {
            config,
            problem,
            interface,
            duals,
            mass,
            state: SimulationState {
                level: 0,
                time: config.t0,
                saturation: config.initial.clone(),
                pressure: None,
                operator: None,
                flux: None,
                diagnostics: StepDiagnostics::default(),
            },
            previous_pressure: None,
            range_reported: false,
        })
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn into_state(self) -> SimulationState {
        self.state
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn mass_matrix(&self) -> &DualMassMatrix {
        &self.mass
    }

    pub fn is_finished(&self) -> bool {
        self.state.level >= self.config.steps
    }

    /// Advance one time level.
    pub fn step(&mut self) -> Result<()> {
        let level = self.state.level;
        self.advance().map_err(|e| Error::AtTimeLevel {
            level: level + 1,
            source: Box::new(e),
        })
    }

    fn advance(&mut self) -> Result<()> {
        let cfg = self.config;
        let grid = &cfg.grid;
        let problem = self.problem;
        let t1 = cfg.t0 + (self.state.level + 1) as f64 * cfg.dt;
        let s_old = &self.state.saturation;

        let clock = std::time::Instant::now();
        let mut phases = [0.0f64; 4];
        let coefficient = CoefficientField::new(grid, &self.interface, cfg.k_plus, cfg.k_minus, s_old, &cfg.fluid);
        let op = build_operator(grid, &self.interface, &coefficient, &|x| problem.total_source(x, t1))?;
        let dirichlet = |x: Point| problem.pressure_dirichlet(x, t1);
        let boundary = match problem.pressure_condition() {
            PressureCondition::Dirichlet => PressureBoundary::Dirichlet(&dirichlet),
            PressureCondition::Pinned { edge, value } => PressureBoundary::Pinned { edge, value },
        };
        let system = assemble(grid, &self.interface, &op, &boundary, cfg.pressure_solver)?;
        phases[0] = clock.elapsed().as_secs_f64();
        // pressure moves smoothly in time, so a linear extrapolation is a good starting point
        let guess = match (&self.state.pressure, &self.previous_pressure) {
            (Some(p1), Some(p0)) => Some(EdgeScalarField::new(
                p1.values.iter().zip(&p0.values).map(|(a, b)| 2.0 * a - b).collect(),
                p1.markers.clone(),
            )),
            (Some(p1), None) => Some(p1.clone()),
            _ => None,
        };
        let (mut pressure, pstats) = solve(&system, guess.as_ref())?;
        let rstats = refine(grid, &op, &system, &mut pressure, &RefineSettings::default())?;
        phases[1] = clock.elapsed().as_secs_f64();
        let flux = recover(grid, &op, &pressure)?;

        let mut balance: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for e in 0..grid.n_elements() {
            let net: f64 = flux.local[e].iter().sum();
            balance = balance.max((net - op.source_average[e] * grid.element_area()).abs());
            scale = scale.max(flux.local[e].iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }

        let s_dirichlet = |x: Point| problem.saturation_dirichlet(x, t1);
        let s_flux = |x: Point| problem.wetting_boundary_flux(x, t1).unwrap_or(0.0);
        let has_flux = problem.wetting_boundary_flux(grid.origin(), t1).is_some();
        let step = SaturationStep {
            flux: FluxContext {
                grid,
                level_set: &cfg.level_set,
                k_plus: cfg.k_plus,
                k_minus: cfg.k_minus,
                fluid: &cfg.fluid,
                velocity: &flux,
                saturation: s_old,
            },
            duals: &self.duals,
            mass: &self.mass,
            wetting_source: &|x, s| problem.wetting_source(x, t1, s),
            boundary: TransportBoundary {
                dirichlet: Some(&s_dirichlet),
                flux: has_flux.then_some(&s_flux as &(dyn Fn(Point) -> f64 + Sync)),
            },
            dt: cfg.dt,
        };
        phases[2] = clock.elapsed().as_secs_f64();
        let (saturation, tdiag) = step_saturation(&step, &cfg.transport)?;
        phases[3] = clock.elapsed().as_secs_f64();
        log::trace!(
            "level {} timings: operator {:.3e} s, pressure solve {:.3e} s, recovery {:.3e} s, saturation {:.3e} s",
            self.state.level + 1,
            phases[0],
            phases[1] - phases[0],
            phases[2] - phases[1],
            phases[3] - phases[2]
        );

        let diagnostics = StepDiagnostics {
            pressure: pstats,
            refinement: rstats,
            flux_mismatch: flux.relative_mismatch,
            balance_defect: if scale > 0.0 { balance / scale } else { 0.0 },
            transport: tdiag,
        };
        log::debug!(
            "level {} t={:.6e} cg_iter={}+{} mismatch={:.2e} cg_res={:.2e} S=[{:.4}, {:.4}] mass={:.6e} budget={:.2e} cfl={:.3}",
            self.state.level + 1,
            t1,
            pstats.iterations,
            rstats.iterations,
            rstats.residual,
            pstats.residual,
            diagnostics.transport.s_min,
            diagnostics.transport.s_max,
            diagnostics.transport.mass_after,
            diagnostics.transport.budget_defect(),
            diagnostics.transport.cfl,
        );
        let (lo, hi) = (diagnostics.transport.s_min, diagnostics.transport.s_max);
        if !self.range_reported && (lo < -MONOTONE_SLACK || hi > 1.0 + MONOTONE_SLACK) {
            log::warn!(
                "saturation left [0, 1] at level {}: range [{lo:.4}, {hi:.4}] (later levels at debug level)",
                self.state.level + 1
            );
            self.range_reported = true;
        }
        self.previous_pressure = self.state.pressure.take();
        self.state = SimulationState {
            level: self.state.level + 1,
            time: t1,
            saturation,
            pressure: Some(pressure),
            operator: Some(op),
            flux: Some(flux),
            diagnostics,
        };
        Ok(())
    }
}

/// Result of [`run`]: the final state and every `stride`-th level (always including the last).
#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: SimulationState,
    pub history: Vec<Snapshot>,
}

fn snapshot(s: &SimulationState) -> Snapshot {
    Snapshot {
        level: s.level,
        time: s.time,
        saturation: s.saturation.clone(),
        diagnostics: s.diagnostics.clone(),
    }
}

/// Run all configured steps, calling `observer` after every level (including level 0).
pub fn run_with<P: TwoPhaseProblem>(
    config: &SimulationConfig,
    problem: &P,
    observer: &mut dyn FnMut(&Simulation<'_, P>) -> Result<()>,
) -> Result<SimulationState> {
    let mut sim = Simulation::new(config, problem)?;
    observer(&sim)?;
    while !sim.is_finished() {
        sim.step()?;
        observer(&sim)?;
    }
    Ok(sim.into_state())
}

pub fn run<P: TwoPhaseProblem>(config: &SimulationConfig, problem: &P, stride: usize) -> Result<RunResult> {
    let stride = stride.max(1);
    let mut history = Vec::new();
    let state = run_with(config, problem, &mut |sim| {
        let s = sim.state();
        if s.level % stride == 0 || s.level == config.steps {
            history.push(snapshot(s));
        }
        Ok(())
    })?;
    Ok(RunResult { state, history })
}

/// Run `f` on a dedicated pool of `workers` threads, or on the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
