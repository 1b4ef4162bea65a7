//! Values frozen from tools/oracles (scipy DOP853 shoots and sympy differentiation).

use std::sync::Arc;

use qflow_core::delaunay::{shoot_delaunay, ShootOptions};
use qflow_core::gluing::{fgmn, transversality, GluingState, ScheduleKnobs};
use qflow_core::params::make_params;

// (n, eps, q, T) from the escape bisection
const GOLDEN: [(u32, f64, f64, f64); 12] = [
    (5, 0.3, 0.07482904307847779, 8.902366677251306),
    (5, 0.2, 0.049982576106051294, 10.563897949448965),
    (5, 0.1, 0.02499951727747158, 13.361000023758686),
    (5, 0.05, 0.012499985253692922, 16.13975331821497),
    (6, 0.3, 0.27825995376483836, 5.201554023536661),
    (6, 0.2, 0.1947242577522436, 5.997476012943822),
    (6, 0.1, 0.09945074030159459, 7.378553172281399),
    (6, 0.05, 0.04993568219794607, 8.764188009655605),
    (8, 0.3, 0.8053819436933118, 3.3363432387333),
    (8, 0.2, 0.6389030421910369, 3.705966621818759),
    (8, 0.1, 0.3641045330052458, 4.378764567853986),
    (8, 0.05, 0.19169229618356476, 5.069481634237608),
];

#[test]
fn delaunay_matches_reference_shoots() {
    for (n, eps, q, t) in GOLDEN {
        let s = shoot_delaunay(&make_params(n).unwrap(), eps, &ShootOptions::default()).unwrap();
        assert!((s.q - q).abs() < 1e-9 * q.abs().max(1e-2), "n={n} eps={eps}: q {} vs {q}", s.q);
        // near the separatrix T moves ~1e9 times faster than q, so roundoff in q shows up here
        assert!((s.period - t).abs() < 2e-7 * t, "n={n} eps={eps}: T {} vs {t}", s.period);
    }
}

#[test]
fn fgmn_pinned_for_n5() {
    let s = Arc::new(shoot_delaunay(&make_params(5).unwrap(), 0.2, &ShootOptions::default()).unwrap());
    let st = GluingState::unsolved(s, ScheduleKnobs::default(), 2).unwrap();
    assert!((st.r() - 0.04335316293707036).abs() < 1e-12);
    assert!((st.schedule.r_param - 0.010000290400340757).abs() < 1e-12);
    let want = [0.9992052970940818, 0.9976317681733151, -0.010979331385250202, -0.010758765998752473];
    let got = fgmn(&st);
    for k in 0..4 {
        assert!((got[k] - want[k]).abs() < 1e-9, "{k}: {} vs {}", got[k], want[k]);
    }
    assert!((transversality(&st) - 1.2499764653361294).abs() < 1e-9);
}
