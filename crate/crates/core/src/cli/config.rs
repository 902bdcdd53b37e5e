//! Run configuration: defaults, a flat `key = value` file format and validation.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::verify::{validate_meshes, CaseId, STUDY_TOLERANCE};

use super::fivespot::DEFAULT_INJECTION_RATE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Convergence,
    FiveSpot,
}

impl Subcommand {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcommand::Convergence => "convergence",
            Subcommand::FiveSpot => "fivespot",
        }
    }
}

impl FromStr for Subcommand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(Subcommand::Convergence),
            "fivespot" => Ok(Subcommand::FiveSpot),
            other => Err(Error::Config(format!("unknown command '{other}'"))),
        }
    }
}

/// Everything a run needs. Times are in the case's own unit (days for the five-spot).
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub command: Subcommand,
    pub case: CaseId,
    pub meshes: Vec<usize>,
    /// Five-spot mesh size.
    pub n: usize,
    /// `None` uses the case's time-step rule.
    pub dt: Option<f64>,
    /// `None` uses the case's final time.
    pub final_time: Option<f64>,
    pub tol: f64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub check: bool,
    pub lumped_mass: bool,
    pub vtk: bool,
    /// Extra five-spot snapshots every `stride` steps; 0 writes only the standard output times.
    pub stride: usize,
    /// Five-spot injection rate (m²/day).
    pub inject_rate: f64,
    /// Five-spot capillary entry pressure (Pa).
    pub entry_pressure: f64,
}

impl Config {
    pub fn new(command: Subcommand) -> Self {
        Config {
            command,
            case: CaseId::Ex1,
            meshes: vec![8, 16, 32, 64, 128],
            n: 64,
            dt: None,
            final_time: None,
            tol: STUDY_TOLERANCE,
            workers: None,
            out: PathBuf::from("out"),
            check: false,
            lumped_mass: false,
            vtk: true,
            stride: 0,
            inject_rate: DEFAULT_INJECTION_RATE,
            entry_pressure: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.command == Subcommand::Convergence {
            validate_meshes(&self.meshes)?;
        }
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.final_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("T must be positive, got {t}")));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.inject_rate >= 0.0 && self.inject_rate.is_finite()) {
            return Err(Error::Config(format!("inject-rate must be non-negative, got {}", self.inject_rate)));
        }
        if !(self.entry_pressure >= 0.0 && self.entry_pressure.is_finite()) {
            return Err(Error::Config(format!("entry-pressure must be non-negative, got {}", self.entry_pressure)));
        }
        Ok(())
    }

    /// `key = value` lines; unset optional values are left out.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let meshes: Vec<String> = self.meshes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "command = {}", self.command.as_str());
        let _ = writeln!(out, "case = {}", self.case);
        let _ = writeln!(out, "meshes = {}", meshes.join(","));
        let _ = writeln!(out, "n = {}", self.n);
        if let Some(dt) = self.dt {
            let _ = writeln!(out, "dt = {dt:e}");
        }
        if let Some(t) = self.final_time {
            let _ = writeln!(out, "T = {t:e}");
        }
        let _ = writeln!(out, "tol = {:e}", self.tol);
        if let Some(w) = self.workers {
            let _ = writeln!(out, "workers = {w}");
        }
        let _ = writeln!(out, "out = {}", self.out.display());
        let _ = writeln!(out, "check = {}", self.check);
        let _ = writeln!(out, "lumped_mass = {}", self.lumped_mass);
        let _ = writeln!(out, "vtk = {}", self.vtk);
        let _ = writeln!(out, "stride = {}", self.stride);
        let _ = writeln!(out, "inject_rate = {:e}", self.inject_rate);
        let _ = writeln!(out, "entry_pressure = {:e}", self.entry_pressure);
        out
    }

    /// Parse a config file. Blank lines and `#` comments are skipped; keys absent from the file keep
    /// their defaults for the file's `command` (convergence if none is given).
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{raw}'", lineno + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        let command = match pairs.iter().find(|(k, _)| k == "command") {
            Some((_, v)) => v.parse()?,
            None => Subcommand::Convergence,
        };
        let mut cfg = Config::new(command);
        for (key, value) in &pairs {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Set one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
        }
        match key {
            "command" => self.command = value.parse()?,
            "case" => self.case = value.parse()?,
            "meshes" => {
                self.meshes = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<Vec<usize>>>()?
            }
            "n" => self.n = num(key, value)?,
            "dt" => self.dt = Some(num(key, value)?),
            "T" => self.final_time = Some(num(key, value)?),
            "tol" => self.tol = num(key, value)?,
            "workers" => self.workers = Some(num(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "check" => self.check = num(key, value)?,
            "lumped_mass" => self.lumped_mass = num(key, value)?,
            "vtk" => self.vtk = num(key, value)?,
            "stride" => self.stride = num(key, value)?,
            "inject_rate" => self.inject_rate = num(key, value)?,
            "entry_pressure" => self.entry_pressure = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_validate() {
        Config::new(Subcommand::Convergence).validate().unwrap();
        Config::new(Subcommand::FiveSpot).validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = Config::new(Subcommand::Convergence);
        let mut c = base.clone();
        c.meshes = vec![8, 12];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.dt = Some(-1.0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.workers = Some(0);
        assert!(c.validate().is_err());
        assert!(Config::from_key_values("case = bogus").is_err());
        assert!(Config::from_key_values("colour = red").is_err());
        assert!(Config::from_key_values("n 64").is_err());
    }

    #[test]
    fn parses_comments_and_partial_files() {
        let c = Config::from_key_values("# five-spot\ncommand = fivespot\nn = 32 # coarse\n\ninject_rate = 15\n").unwrap();
        assert_eq!(c.command, Subcommand::FiveSpot);
        assert_eq!(c.n, 32);
        assert_eq!(c.inject_rate, 15.0);
        assert_eq!(c.tol, STUDY_TOLERANCE);
    }

    fn arb_config() -> impl Strategy<Value = Config> {
        (
            prop::bool::ANY,
            0usize..4,
            1usize..5,
            2usize..300,
            prop::option::of(1e-6f64..10.0),
            prop::option::of(1e-3f64..1e3),
            1e-15f64..1e-3,
            prop::option::of(1usize..64),
            prop::collection::vec(prop::bool::ANY, 3),
            0usize..100,
            0.0f64..1e3,
            0.0f64..1e5,
        )
            .prop_map(|(five, case, levels, n, dt, t, tol, workers, flags, stride, rate, pd)| Config {
                command: if five { Subcommand::FiveSpot } else { Subcommand::Convergence },
                case: CaseId::ALL[case],
                meshes: (0..levels).map(|k| 4 << k).collect(),
                n,
                dt,
                final_time: t,
                tol,
                workers,
                out: PathBuf::from(format!("runs/n{n}")),
                check: flags[0],
                lumped_mass: flags[1],
                vtk: flags[2],
                stride,
                inject_rate: rate,
                entry_pressure: pd,
            })
    }

    proptest! {
        #[test]
        fn key_value_round_trip(cfg in arb_config()) {
            let text = cfg.to_key_values();
            prop_assert_eq!(Config::from_key_values(&text).unwrap(), cfg);
        }
    }
}
