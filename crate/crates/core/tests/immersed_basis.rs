mod common;

use immersed_impes::verify::CaseId;

#[test]
fn cut_elements_of_every_case_meet_their_conditions() {
    for id in CaseId::ALL {
        for n in [8, 16, 32] {
            let r = common::basis_report(id, n);
            assert!(r.cuts > 0, "{id} n={n}");
            assert!(r.residual <= 1e-10, "{id} n={n}: {r:?}");
            assert!(r.unity <= 1e-12, "{id} n={n}: {r:?}");
        }
    }
}

#[test]
fn coefficients_match_an_independent_dense_solve() {
    for id in CaseId::ALL {
        for n in [8, 16, 32] {
            let r = common::basis_report(id, n);
            assert!(r.oracle <= 1e-10, "{id} n={n}: {r:?}");
        }
    }
}
