use qflow_core::acceptance::{gluing_sweep, Context, EPS_GRID};

#[test]
fn n5_sweep_bounds_and_diagnostic() {
    let ctx = Context::build();
    let reps = gluing_sweep(&ctx).unwrap();
    assert_eq!(reps.len(), EPS_GRID.len());
    for rep in &reps {
        let sc = &rep.schedule;
        assert!(rep.constants.b.abs() <= 0.5);
        assert!(rep.constants.lambda.abs() <= sc.r_eps.powf(1.0 + sc.knobs.m / 2.0));
        assert!(rep.mismatch_after.iter().all(|&m| m < 1e-8), "{:?}", rep.mismatch_after);
        let target = 5.0 * (1.0 + rep.constants.b) / 4.0;
        assert!((rep.coordinates.transversality / target - 1.0).abs() < 0.2);
    }
    for w in reps.windows(2) {
        assert!(w[1].pde_residual < w[0].pde_residual);
        assert!(w[1].schedule.r_eps < w[0].schedule.r_eps);
        // the unsolved mismatch shrinks along the grid in every slot
        assert!((0..4).all(|k| w[1].mismatch_before[k] < w[0].mismatch_before[k]));
    }
    let again = gluing_sweep(&ctx).unwrap();
    assert_eq!(serde_json::to_string(&reps).unwrap(), serde_json::to_string(&again).unwrap());
}
