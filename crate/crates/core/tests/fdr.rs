use proptest::prelude::*;
use qbm_core::bath::{BathMode, BathSpec, TimeGrid};
use qbm_core::fdr::*;

fn opts(window: f64, n_omega: usize) -> TimegridFdrOptions {
    TimegridFdrOptions { omega_max: 6.0, n_omega, window }
}

#[test]
fn timegrid_deviation_shrinks_with_window() {
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
    let g = TimeGrid::new(2.0, 21).unwrap();
    let devs: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|&w| fdr_timegrid_check(&bath, &g, &opts(w, 3200)).unwrap())
        .collect();
    for pair in devs.windows(2) {
        assert!(pair[1] < pair[0], "{devs:?}");
    }
    // relative to the 0.5 amplitude of N2^(0), the generous window is within 0.5%
    assert!(devs[3] < 2.5e-3, "{devs:?}");
}

#[test]
fn timegrid_check_handles_several_modes() {
    let bath = BathSpec::new(
        vec![BathMode::new(1.0, 0.8, 1.0, 0.3).unwrap(), BathMode::new(1.2, 1.4, -0.5, 0.2).unwrap()],
        0.5,
        1.0,
    )
    .unwrap();
    let g = TimeGrid::new(3.0, 31).unwrap();
    let coarse = fdr_timegrid_check(&bath, &g, &TimegridFdrOptions { omega_max: 8.0, n_omega: 1600, window: 20.0 }).unwrap();
    let fine = fdr_timegrid_check(&bath, &g, &TimegridFdrOptions { omega_max: 8.0, n_omega: 6400, window: 80.0 }).unwrap();
    assert!(fine < coarse);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_residual_is_at_rounding_level(
        modes in prop::collection::vec((0.2f64..4.0, 0.1f64..5.0, -3.0f64..3.0, -3.0f64..3.0), 1..6),
        lambda in 0.001f64..2.0,
        hbar in 0.1f64..4.0,
    ) {
        let modes: Vec<BathMode> = modes.into_iter().map(|(m, w, a, b)| BathMode::new(m, w, a, b).unwrap()).collect();
        let bath = BathSpec::new(modes, lambda, hbar).unwrap();
        let report = fdr_spectral_check(&bath).unwrap();
        prop_assert!(report.max_residual < 1e-12);
        prop_assert!(report.max_order3_residual < 1e-12);
        for r in &report.records {
            prop_assert!(r.coefficient_residual < 1e-12 * (1.0 + r.noise_coefficient.abs()));
        }
    }
}
