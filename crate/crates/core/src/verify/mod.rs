//! Manufactured-solution verification: exact cases, error norms and convergence tables.

pub mod cases;
pub mod checks;
pub mod norms;
pub mod study;

pub use checks::{conservation_checks, convergence_checks, order_checks, Bound, Check, BALANCE_LIMIT, FLUX_MISMATCH_LIMIT};
pub use cases::{CaseId, Jet, ManufacturedCase};
pub use norms::{error_norms, FieldErrors};
pub use study::{convergence_study, run_case, validate_meshes, Column, ErrorReport, ErrorRow, RunSummary, StudyOptions, STUDY_TOLERANCE};
