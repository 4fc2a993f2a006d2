use randflight::limits::{
    kac_limit_trace, r3_asymptotic_check, sdc_continuity, sdc_invariance_check,
};
use randflight::StationaryParams;

#[test]
fn kac_ladders_decrease() {
    for m in [1, 2, 4] {
        let tr = kac_limit_trace(1.0, 1.0, &[10.0, 100.0, 1000.0], m).unwrap();
        assert!(tr.strictly_decreasing(), "m={m}: {:?}", tr.distances);
        assert!(tr.ladder.windows(2).all(|w| w[0].0 < w[1].0));
        for (lambda, c) in &tr.ladder {
            assert!((c * c / lambda - 1.0).abs() < 1e-12);
        }
    }
    let tr = kac_limit_trace(1.0, 1.0, &[1000.0], 1).unwrap();
    assert!(tr.distances[0] <= 0.02);
}

#[test]
fn kac_variance_scales_with_rho() {
    // doubling ρ² at fixed λ keeps the distance small against the wider Gaussian
    let tr = kac_limit_trace(2.0, 1.0, &[100.0, 1000.0], 2).unwrap();
    assert!(tr.strictly_decreasing());
    assert!(tr.distances[1] < 1e-3);
}

#[test]
fn sdc_invariance_across_grid() {
    for m in [1, 2, 4, 6] {
        for a in [0.5, 4.0, 7.0] {
            for rho in [1.0, 5.0] {
                let sp = StationaryParams::new(m, a, rho).unwrap();
                let d = sdc_invariance_check(&sp, &[1.0, 10.0, 1000.0]).unwrap();
                assert!(d <= 1e-10, "m={m} a={a} rho={rho}: {d}");
                let k = sdc_continuity(&sp, 1e-6).unwrap();
                assert!(k.is_finite() && k < 100.0);
            }
        }
    }
}

#[test]
fn r3_check_and_lln() {
    let small = r3_asymptotic_check(0.01, 5.0, 100_000, 42).unwrap();
    let large = r3_asymptotic_check(0.01, 5.0, 10_000_000, 42).unwrap();
    assert!(large.mass_pass());
    assert!(large.shape_pass());
    assert!(large.bins_pass(), "{:?}", large.bins);
    assert!(large.sup_deviation < small.sup_deviation);
}
