//! Convergence table for one manufactured case.
//!
//! ```bash
//! cargo run --release --example convergence -- ex1 8 16 32
//! ```

use immersed_impes::verify::{convergence_study, CaseId, ManufacturedCase, StudyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let id: CaseId = args.next().as_deref().unwrap_or("ex1").parse()?;
    let mut meshes: Vec<usize> = args.map(|a| a.parse()).collect::<Result<_, _>>()?;
    if meshes.is_empty() {
        meshes = vec![8, 16, 32];
    }
    let case = ManufacturedCase::new(id);
    let report = convergence_study(&case, &meshes, &StudyOptions::default())?;
    print!("{}", report.to_csv());
    for row in &report.rows {
        let s = &row.summary;
        println!(
            "n={:<4} steps={:<5} cg_max={:<4} flux_mismatch={:.1e} balance={:.1e} S in [{:.4}, {:.4}] {:.1}s",
            row.n, s.steps, s.max_cg_iterations, s.max_flux_mismatch, s.max_balance_defect, s.s_min, s.s_max, s.seconds
        );
    }
    Ok(())
}
