mod common;

use immersed_impes::verify::CaseId;

#[test]
fn dual_mass_rows_and_entries() {
    for (n, length) in [(4, 1.0), (16, 1.0), (12, std::f64::consts::FRAC_PI_2)] {
        let r = common::dual_mass_report(n, length);
        assert!(r.row_sum <= 1e-12, "n={n}: {r:?}");
        assert!(r.closed_form <= 1e-12, "n={n}: {r:?}");
    }
}

#[test]
fn segment_fluxes_are_antisymmetric() {
    for id in [CaseId::Ex2, CaseId::Ex3a] {
        assert_eq!(common::flux_antisymmetry(id, 16), 0.0, "{id}");
    }
}

#[test]
fn closed_flow_keeps_mass() {
    let drift = common::closed_budget_drift(16, 100);
    assert!(drift <= 1e-10, "{drift:e}");
}
