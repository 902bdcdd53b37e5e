//! Pass/fail thresholds for convergence tables.

use std::fmt;

use super::cases::CaseId;
use super::study::{Column, ErrorReport};

/// Errors at n = 32 for the first case, in column order S, p, u, S(H¹), p(H¹).
pub const EX1_REFERENCE_N32: [(Column, f64); 5] = [
    (Column::SaturationL2, 7.252e-5),
    (Column::PressureL2, 4.012e-3),
    (Column::VelocityL2, 4.534e-5),
    (Column::SaturationH1, 3.151e-3),
    (Column::PressureH1, 4.503e-2),
];

pub const FLUX_MISMATCH_LIMIT: f64 = 1e-9;
pub const BALANCE_LIMIT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtLeast(f64),
    AtMost(f64),
    /// Ratio to a reference value must lie in `[1/f, f]`.
    WithinFactor { reference: f64, factor: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    /// `None` when the table is too short to compute the quantity.
    pub value: Option<f64>,
    pub bound: Bound,
}

impl Check {
    pub fn new(name: impl Into<String>, value: Option<f64>, bound: Bound) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        let Some(v) = self.value else { return false };
        match self.bound {
            Bound::AtLeast(t) => v >= t,
            Bound::AtMost(t) => v <= t,
            Bound::WithinFactor { reference, factor } => {
                let r = v / reference;
                r >= 1.0 / factor && r <= factor
            }
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let value = match self.value {
            Some(v) => format!("{v:.4e}"),
            None => "n/a".into(),
        };
        let bound = match self.bound {
            Bound::AtLeast(t) => format!(">= {t}"),
            Bound::AtMost(t) => format!("<= {t:e}"),
            Bound::WithinFactor { reference, factor } => format!("within x{factor} of {reference:e}"),
        };
        write!(f, "{status} {}: {value} ({bound})", self.name)
    }
}

fn finest(report: &ErrorReport, col: Column, min: f64) -> Check {
    Check::new(format!("finest-pair order {}", col.header()), report.finest_order(col), Bound::AtLeast(min))
}

fn average(report: &ErrorReport, col: Column, min: f64) -> Check {
    Check::new(format!("average order {}", col.header()), report.average_order(col), Bound::AtLeast(min))
}

/// Order thresholds and conservation limits together.
pub fn convergence_checks(id: CaseId, report: &ErrorReport) -> Vec<Check> {
    let mut checks = order_checks(id, report);
    checks.extend(conservation_checks(report));
    checks
}

/// Order thresholds for the report's case and the n = 32 magnitudes for the first case.
pub fn order_checks(id: CaseId, report: &ErrorReport) -> Vec<Check> {
    use Column::*;
    let mut checks = match id {
        CaseId::Ex1 => vec![
            finest(report, PressureL2, 1.8),
            finest(report, PressureH1, 0.9),
            finest(report, VelocityL2, 0.9),
            finest(report, SaturationL2, 1.5),
            finest(report, SaturationH1, 0.85),
        ],
        CaseId::Ex2 => vec![
            finest(report, PressureL2, 1.8),
            finest(report, VelocityL2, 0.9),
            finest(report, SaturationL2, 1.3),
            finest(report, SaturationH1, 0.85),
        ],
        CaseId::Ex3a => vec![
            finest(report, PressureL2, 1.8),
            average(report, SaturationL2, 1.2),
            average(report, SaturationH1, 0.35),
        ],
        CaseId::Ex3b => vec![average(report, SaturationL2, 1.2), average(report, SaturationH1, 0.35)],
    };
    if id == CaseId::Ex1 {
        if let Some(row) = report.row(32) {
            for (col, reference) in EX1_REFERENCE_N32 {
                checks.push(Check::new(
                    format!("{} at n=32", col.header()),
                    Some(col.of(&row.errors)),
                    Bound::WithinFactor { reference, factor: 3.0 },
                ));
            }
        }
    }
    checks
}

/// Worst interior flux mismatch and element balance defect over every solve of the study.
pub fn conservation_checks(report: &ErrorReport) -> Vec<Check> {
    let mismatch = report.rows.iter().map(|r| r.summary.max_flux_mismatch).fold(None, max_opt);
    let balance = report.rows.iter().map(|r| r.summary.max_balance_defect).fold(None, max_opt);
    vec![
        Check::new("interior flux mismatch (relative)", mismatch, Bound::AtMost(FLUX_MISMATCH_LIMIT)),
        Check::new("element balance defect (relative)", balance, Bound::AtMost(BALANCE_LIMIT)),
    ]
}

fn max_opt(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.max(v)))
}
