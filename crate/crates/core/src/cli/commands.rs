//! Argument parsing and the `convergence` / `fivespot` subcommands.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use crate::error::Result;
use crate::impes::with_workers;
use crate::verify::{convergence_checks, convergence_study, ManufacturedCase, StudyOptions};

use super::config::{Config, Subcommand};
use super::fivespot::{run_fivespot, FiveSpotCase, FiveSpotSummary, OUTPUT_DAYS};
use super::output::{fields_csv, time_label, vtk_structured_points, write_text};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Saturation window monitored in the five-spot.
pub const FIVESPOT_S_BOUNDS: [f64; 2] = [-0.02, 1.02];
pub const FIVESPOT_BUDGET_LIMIT: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "impes", version, about = "Immersed FEM / IMPES two-phase flow driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Convergence table for a manufactured case.
    Convergence(Overrides),
    /// Quarter five-spot waterflood around a low-permeability disk.
    Fivespot(Overrides),
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ex1, ex2, ex3a or ex3b.
    #[arg(long)]
    case: Option<String>,
    /// Comma-separated mesh sizes, each twice the previous.
    #[arg(long, value_delimiter = ',')]
    meshes: Option<Vec<usize>>,
    /// Five-spot mesh size.
    #[arg(long)]
    n: Option<usize>,
    /// Time step (days for the five-spot).
    #[arg(long)]
    dt: Option<f64>,
    /// Final time (days for the five-spot).
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// Relative residual tolerance of the pressure solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 unless the acceptance thresholds hold.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    lumped_mass: bool,
    /// Write VTK snapshots (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    vtk: Option<bool>,
    /// Extra five-spot snapshots every this many steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Five-spot injection rate (m²/day).
    #[arg(long)]
    inject_rate: Option<f64>,
    /// Five-spot capillary entry pressure (Pa).
    #[arg(long)]
    entry_pressure: Option<f64>,
}

impl Overrides {
    fn into_config(self, command: Subcommand) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_key_values(&std::fs::read_to_string(path)?)?,
            None => Config::new(command),
        };
        cfg.command = command;
        if let Some(case) = &self.case {
            cfg.case = case.parse()?;
        }
        if let Some(m) = self.meshes {
            cfg.meshes = m;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        cfg.dt = self.dt.or(cfg.dt);
        cfg.final_time = self.final_time.or(cfg.final_time);
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        cfg.workers = self.workers.or(cfg.workers);
        if let Some(o) = self.out {
            cfg.out = o;
        }
        cfg.check |= self.check;
        cfg.lumped_mass |= self.lumped_mass;
        if let Some(v) = self.vtk {
            cfg.vtk = v;
        }
        if let Some(s) = self.stride {
            cfg.stride = s;
        }
        if let Some(r) = self.inject_rate {
            cfg.inject_rate = r;
        }
        if let Some(p) = self.entry_pressure {
            cfg.entry_pressure = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse arguments into a validated config. Usage problems come back as `Err(exit code)` after
/// the message has been printed.
pub fn parse_args<I, T>(args: I) -> std::result::Result<Config, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Err(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let (command, overrides) = match cli.command {
        Command::Convergence(o) => (Subcommand::Convergence, o),
        Command::Fivespot(o) => (Subcommand::FiveSpot, o),
    };
    overrides.into_config(command).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let outcome = match cfg.command {
        Subcommand::Convergence => cmd_convergence(&cfg),
        Subcommand::FiveSpot => cmd_fivespot(&cfg).map(|(_, ok)| ok),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Run the study, write `errors_<case>.csv`, print the table; `Ok(false)` if `--check` failed.
pub fn cmd_convergence(cfg: &Config) -> Result<bool> {
    let case = ManufacturedCase::new(cfg.case);
    let opts = StudyOptions {
        dt: cfg.dt,
        final_time: cfg.final_time,
        tol: cfg.tol,
        lumped_mass: cfg.lumped_mass,
        workers: cfg.workers,
    };
    let report = convergence_study(&case, &cfg.meshes, &opts)?;
    let csv = report.to_csv();
    let path = cfg.out.join(format!("errors_{}.csv", cfg.case));
    write_text(&path, &csv)?;
    print!("{csv}");
    log::info!("wrote {}", path.display());
    if !cfg.check {
        return Ok(true);
    }
    let checks = convergence_checks(cfg.case, &report);
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.passed()))
}

/// Run the five-spot, writing `sat_<day>.vtk` and `fields_<day>.csv` at each output level.
/// The flag is `false` when `--check` is set and the saturation window or mass budget is violated.
pub fn cmd_fivespot(cfg: &Config) -> Result<(FiveSpotSummary, bool)> {
    let case = FiveSpotCase::new(cfg.n, cfg.inject_rate, cfg.entry_pressure)?;
    let dt = cfg.dt.unwrap_or_else(|| FiveSpotCase::default_dt_days(cfg.n));
    let final_days = cfg.final_time.unwrap_or(OUTPUT_DAYS[OUTPUT_DAYS.len() - 1]);
    let config = case.simulation_config(dt, final_days, cfg.tol, cfg.lumped_mass)?;
    let levels: Vec<usize> = FiveSpotCase::output_levels(&OUTPUT_DAYS, dt)
        .into_iter()
        .filter(|&l| l <= config.steps)
        .chain(std::iter::once(config.steps))
        .collect();
    let mut nominal: Vec<(usize, f64)> = FiveSpotCase::output_levels(&OUTPUT_DAYS, dt)
        .into_iter()
        .zip(OUTPUT_DAYS)
        .collect();
    nominal.push((config.steps, config.steps as f64 * dt));
    let grid = config.grid.clone();
    let summary = with_workers(cfg.workers, || {
        run_fivespot(&case, &config, &levels, cfg.stride, &mut |rec, sim| {
            let day = nominal
                .iter()
                .find(|(l, _)| *l == rec.level)
                .map_or(rec.day, |(_, d)| *d);
            let label = time_label(day);
            let state = sim.state();
            if cfg.vtk {
                let title = format!("five-spot S at day {:.4} (level {})", rec.day, rec.level);
                write_text(&cfg.out.join(format!("sat_{label}.vtk")), &vtk_structured_points(&grid, state, &title))?;
            }
            if let Some(csv) = fields_csv(&grid, state) {
                write_text(&cfg.out.join(format!("fields_{label}.csv")), &csv)?;
            }
            Ok(())
        })
    })??;
    let (lo, hi) = (FIVESPOT_S_BOUNDS[0], FIVESPOT_S_BOUNDS[1]);
    let in_range = summary.s_min >= lo && summary.s_max <= hi;
    let budget_ok = summary.max_budget_defect <= FIVESPOT_BUDGET_LIMIT;
    println!(
        "steps={} S in [{:.4}, {:.4}] max budget defect {:.2e} net injected {:.4e} m² max CG {} max CFL {:.3}",
        summary.steps,
        summary.s_min,
        summary.s_max,
        summary.max_budget_defect,
        summary.net_injected,
        summary.max_cg_iterations,
        summary.max_cfl
    );
    for rec in &summary.outputs {
        println!(
            "day {:>8.3}  S [{:.4}, {:.4}]  volume {:.4e}  disk {:.4}  ring {:.4}",
            rec.day, rec.s_min, rec.s_max, rec.wetting_volume, rec.disk_mean, rec.annulus_mean
        );
    }
    if !cfg.check {
        return Ok((summary, true));
    }
    println!("{} saturation within [{lo}, {hi}]", if in_range { "PASS" } else { "FAIL" });
    println!("{} mass budget defect <= {FIVESPOT_BUDGET_LIMIT:e}", if budget_ok { "PASS" } else { "FAIL" });
    Ok((summary, in_range && budget_ok))
}
