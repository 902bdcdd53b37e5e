//! Convergence tables over a sequence of uniformly refined meshes.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::impes::{with_workers, Simulation};

use super::cases::ManufacturedCase;
use super::norms::{error_norms, FieldErrors};

/// Pressure tolerance for studies; flux refinement after each solve handles the rest.
pub const STUDY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyOptions {
    /// Time step; `None` uses `16 / n²`.
    pub dt: Option<f64>,
    /// Final time; `None` uses the case's own.
    pub final_time: Option<f64>,
    pub tol: f64,
    pub lumped_mass: bool,
    pub workers: Option<usize>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            dt: None,
            final_time: None,
            tol: STUDY_TOLERANCE,
            lumped_mass: false,
            workers: None,
        }
    }
}

/// Worst values of the per-step checks seen during one run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub max_cg_iterations: usize,
    pub max_flux_mismatch: f64,
    pub max_balance_defect: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub errors: FieldErrors,
    pub summary: RunSummary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    SaturationL2,
    PressureL2,
    VelocityL2,
    SaturationH1,
    PressureH1,
}

impl Column {
    pub const ALL: [Column; 5] = [
        Column::SaturationL2,
        Column::PressureL2,
        Column::VelocityL2,
        Column::SaturationH1,
        Column::PressureH1,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Column::SaturationL2 => "err_S_L2",
            Column::PressureL2 => "err_p_L2",
            Column::VelocityL2 => "err_u_L2",
            Column::SaturationH1 => "err_S_H1",
            Column::PressureH1 => "err_p_H1",
        }
    }

    pub fn of(self, e: &FieldErrors) -> f64 {
        match self {
            Column::SaturationL2 => e.s_l2,
            Column::PressureL2 => e.p_l2,
            Column::VelocityL2 => e.u_l2,
            Column::SaturationH1 => e.s_h1,
            Column::PressureH1 => e.p_h1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub case: String,
    /// Domain length, used to turn `n` into `h`.
    pub length: f64,
    pub rows: Vec<ErrorRow>,
}

fn order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

impl ErrorReport {
    fn h(&self, n: usize) -> f64 {
        self.length / n as f64
    }

    /// Order between each row and the previous one (`None` for the first row).
    pub fn orders(&self, col: Column) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            out.push(Some(order(col.of(&w[0].errors), col.of(&w[1].errors), self.h(w[0].n), self.h(w[1].n))));
        }
        out.truncate(self.rows.len());
        out
    }

    /// Order between the last two rows.
    pub fn finest_order(&self, col: Column) -> Option<f64> {
        self.orders(col).last().copied().flatten()
    }

    /// Order between the first and the last row, `log(e_first/e_last) / log(h_first/h_last)`.
    pub fn average_order(&self, col: Column) -> Option<f64> {
        let (a, b) = (self.rows.first()?, self.rows.last()?);
        (self.rows.len() > 1).then(|| order(col.of(&a.errors), col.of(&b.errors), self.h(a.n), self.h(b.n)))
    }

    pub fn row(&self, n: usize) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// CSV with columns `n, err_S_L2, ord, err_p_L2, ord, ...` and an `avg` footer of average orders.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n");
        for col in Column::ALL {
            let _ = write!(out, ",{},ord", col.header());
        }
        out.push('\n');
        let orders: Vec<Vec<Option<f64>>> = Column::ALL.iter().map(|&c| self.orders(c)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{}", row.n);
            for (k, col) in Column::ALL.iter().enumerate() {
                let _ = write!(out, ",{:.6e},", col.of(&row.errors));
                if let Some(o) = orders[k][i] {
                    let _ = write!(out, "{o:.3}");
                }
            }
            out.push('\n');
        }
        out.push_str("avg");
        for col in Column::ALL {
            out.push_str(",,");
            if let Some(o) = self.average_order(col) {
                let _ = write!(out, "{o:.3}");
            }
        }
        out.push('\n');
        out
    }
}

/// Run one mesh to the final time and measure the errors there.
pub fn run_case(case: &ManufacturedCase, n: usize, opts: &StudyOptions) -> Result<ErrorRow> {
    let dt = opts.dt.unwrap_or_else(|| ManufacturedCase::default_dt(n));
    let final_time = opts.final_time.unwrap_or(case.final_time);
    let config = case.simulation_config(n, dt, final_time, opts.tol, opts.lumped_mass)?;
    let started = Instant::now();
    with_workers(opts.workers, || -> Result<ErrorRow> {
        let mut sim = Simulation::new(&config, case)?;
        let mut summary = RunSummary {
            s_min: f64::INFINITY,
            s_max: f64::NEG_INFINITY,
            ..RunSummary::default()
        };
        while !sim.is_finished() {
            sim.step()?;
            let d = &sim.state().diagnostics;
            summary.steps += 1;
            summary.max_cg_iterations = summary.max_cg_iterations.max(d.pressure.iterations + d.refinement.iterations);
            summary.max_flux_mismatch = summary.max_flux_mismatch.max(d.flux_mismatch);
            summary.max_balance_defect = summary.max_balance_defect.max(d.balance_defect);
            summary.s_min = summary.s_min.min(d.transport.s_min);
            summary.s_max = summary.s_max.max(d.transport.s_max);
        }
        let errors = error_norms(&config.grid, sim.interface(), case, sim.state(), sim.state().time)?;
        summary.seconds = started.elapsed().as_secs_f64();
        log::info!(
            "{} n={} steps={} err_S_L2={:.3e} err_p_L2={:.3e} err_u_L2={:.3e} ({:.1} s)",
            case.id,
            n,
            summary.steps,
            errors.s_l2,
            errors.p_l2,
            errors.u_l2,
            summary.seconds
        );
        Ok(ErrorRow { n, errors, summary })
    })?
}

/// Meshes must refine by exactly a factor of two.
pub fn validate_meshes(meshes: &[usize]) -> Result<()> {
    if meshes.is_empty() {
        return Err(Error::Config("mesh list is empty".into()));
    }
    if meshes[0] < 2 {
        return Err(Error::Config("meshes need at least 2 elements per side".into()));
    }
    if meshes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Config(format!("meshes must refine by a factor of 2, got {meshes:?}")));
    }
    Ok(())
}

pub fn convergence_study(case: &ManufacturedCase, meshes: &[usize], opts: &StudyOptions) -> Result<ErrorReport> {
    validate_meshes(meshes)?;
    let rows = meshes.iter().map(|&n| run_case(case, n, opts)).collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport {
        case: case.id.to_string(),
        length: case.length,
        rows,
    })
}
