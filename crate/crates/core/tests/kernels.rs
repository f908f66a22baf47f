mod common;

use common::{fixtures, oracle::Ctx};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use qbm_core::bath::{BathMode, BathSpec, TimeGrid};
use qbm_core::kernels::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn j1_spot_value_matches_transcription() {
    let bath = fixtures::single(0.5, 0.3);
    let g = TimeGrid::new(2.0, 17).unwrap();
    let j1 = dissipation_j1(&bath, &g);
    let ctx = Ctx { bath: &bath, ds: g.step() };
    let s = g.nodes();
    let expected = ctx.j1(s[8], s[4], s[2]);
    assert!(expected != 0.0);
    assert!(rel_close(j1.get(8, 4, 2), expected, 1e-12), "{} vs {}", j1.get(8, 4, 2), expected);
}

#[test]
fn third_order_tensors_match_transcription_everywhere() {
    for bath in [fixtures::single(0.5, 0.3), fixtures::two_mode(0.45)] {
        let g = TimeGrid::new(2.0, 13).unwrap();
        let ctx = Ctx { bath: &bath, ds: g.step() };
        let s = g.nodes();
        let (j1, n21, n31) = (dissipation_j1(&bath, &g), noise_n21(&bath, &g), noise_n31(&bath, &g));
        let mut nonzero = 0;
        for i in 0..13 {
            for j in 0..13 {
                for k in 0..13 {
                    let (a, b, c) = (s[i], s[j], s[k]);
                    assert!(rel_close(j1.get(i, j, k), ctx.j1(a, b, c), 1e-12), "J1 at {i},{j},{k}");
                    assert!(rel_close(n21.get(i, j, k), ctx.n21(a, b, c), 1e-12), "N21 at {i},{j},{k}");
                    assert!(rel_close(n31.get(i, j, k), ctx.n31(a, b, c), 1e-12), "N31 at {i},{j},{k}");
                    nonzero += (n31.get(i, j, k) != 0.0) as usize;
                }
            }
        }
        assert!(nonzero > 1000);
    }
}

#[test]
fn gamma1_matches_transcription() {
    let bath = fixtures::two_mode(0.3);
    let g = TimeGrid::new(2.5, 21).unwrap();
    let s = g.nodes();
    let sigma: Vec<f64> = s.iter().map(|&t| 1.0 + 0.4 * (1.3 * t).sin() - 0.1 * t * t).collect();
    let path = ReferencePath::new(g, sigma.clone()).unwrap();
    let k = damping_gamma1(&bath, &g, &path).unwrap();
    let ctx = Ctx { bath: &bath, ds: g.step() };
    for i in 0..21 {
        for j in 0..21 {
            assert!(rel_close(k.get(i, j), ctx.gamma1(&s, &sigma, i, j), 1e-12), "gamma1 at {i},{j}");
        }
    }
}

#[test]
fn n21_contraction_matches_transcription() {
    let bath = fixtures::single(0.5, 0.3);
    let g = TimeGrid::new(2.0, 15).unwrap();
    let s = g.nodes();
    let sigma: Vec<f64> = s.iter().map(|&t| (0.7 * t).cos()).collect();
    let n21s = noise_n21(&bath, &g).contract_last(&sigma).unwrap();
    let ctx = Ctx { bath: &bath, ds: g.step() };
    let w = g.trapezoid_weights();
    for i in 0..15 {
        for j in 0..15 {
            let expected: f64 = (0..15).map(|k| w[k] * ctx.n21(s[i], s[j], s[k]) * sigma[k]).sum();
            assert!(rel_close(n21s[(i, j)], expected, 1e-12));
            assert_eq!(n21s[(i, j)], n21s[(j, i)]);
        }
    }
}

#[test]
fn lazy_contractions_match_dense() {
    let bath = fixtures::single(0.5, 0.2);
    let g = TimeGrid::new(3.0, 40).unwrap();
    let x: Vec<f64> = g.nodes().iter().map(|t| t.cos()).collect();
    let y: Vec<f64> = g.nodes().iter().map(|t| 1.0 + t.sin()).collect();
    for label in [Kernel3Label::J1, Kernel3Label::N21, Kernel3Label::N31] {
        let dense = Kernel3::with_storage(&bath, &g, label, true);
        let lazy = Kernel3::with_storage(&bath, &g, label, false);
        assert_eq!(dense.contract_last_two(&x, &y).unwrap(), lazy.contract_last_two(&x, &y).unwrap());
        assert_eq!(dense.contract_last(&x).unwrap(), lazy.contract_last(&x).unwrap());
        // the support-restricted loops agree with a full sum
        let full = dense.contract_last_two(&x, &y).unwrap();
        let w = g.trapezoid_weights();
        for i in [0, 7, 39] {
            let mut acc = 0.0;
            for j in 0..40 {
                for k in 0..40 {
                    acc += w[j] * w[k] * dense.get(i, j, k) * x[j] * y[k];
                }
            }
            assert!((acc - full[i]).abs() < 1e-13 * (1.0 + acc.abs()));
        }
    }
}

#[test]
fn mu_is_derivative_of_gamma0() {
    let bath = fixtures::two_mode(0.3);
    let g = TimeGrid::new(10.0, 2001).unwrap();
    let mu = dissipation_mu(&bath, &g);
    let gamma0 = damping_gamma0(&bath, &g);
    // analytic derivative of each mode's cos(2 w tau) term
    let analytic = |tau: f64| -> f64 {
        bath.modes
            .iter()
            .map(|m| {
                let d = m.coupling_difference();
                -bath.lambda.powi(2) * bath.hbar * d * d * (2.0 * m.omega * tau).sin() / (2.0 * m.mass.powi(2) * m.omega.powi(2))
            })
            .sum()
    };
    let ds = g.step();
    let mut max_fd: f64 = 0.0;
    for i in 0..g.len() {
        let tau = i as f64 * ds;
        assert!((mu.get(i, 0) - analytic(tau)).abs() < 1e-10);
        if i > 0 && i + 1 < g.len() {
            let fd = (gamma0.get(i + 1, 0) - gamma0.get(i - 1, 0)) / (2.0 * ds);
            max_fd = max_fd.max((fd - mu.get(i, 0)).abs());
        }
    }
    assert!(max_fd < 1e-4);
    // second order: coarser grid has ~4x the error
    let g2 = TimeGrid::new(10.0, 1001).unwrap();
    let (mu2, gamma2) = (dissipation_mu(&bath, &g2), damping_gamma0(&bath, &g2));
    let ds2 = g2.step();
    let max_fd2 = (1..g2.len() - 1)
        .map(|i| ((gamma2.get(i + 1, 0) - gamma2.get(i - 1, 0)) / (2.0 * ds2) - mu2.get(i, 0)).abs())
        .fold(0.0, f64::max);
    let ratio = max_fd2 / max_fd;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn second_order_kernels_are_stationary() {
    let bath = fixtures::two_mode(0.7);
    let g = TimeGrid::new(4.0, 41).unwrap();
    let mu = dissipation_mu(&bath, &g);
    for k in [noise_n20(&bath, &g), damping_gamma0(&bath, &g), dissipation_j0(&mu), mu] {
        for i in 0..40 {
            for j in 0..40 {
                assert_eq!(k.get(i, j), k.get(i + 1, j + 1));
            }
        }
    }
}

#[test]
fn noise_kernel_is_positive_semidefinite() {
    let bath = BathSpec::new(
        (0..4).map(|n| BathMode::new(1.0 + 0.1 * n as f64, 0.5 + 0.7 * n as f64, 1.0, 0.2 * n as f64).unwrap()).collect(),
        0.5,
        1.3,
    )
    .unwrap();
    let g = TimeGrid::new(6.0, 128).unwrap();
    let n20 = noise_n20(&bath, &g);
    let eig = SymmetricEigen::new(n20.values() * bath.hbar);
    let max = eig.eigenvalues.max();
    assert!(max > 0.0);
    assert!(eig.eigenvalues.min() >= -1e-10 * max);
}

fn scaling_pairs(bath: &BathSpec, g: &TimeGrid) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let b2 = bath.with_lambda(2.0 * bath.lambda);
    let sigma = ReferencePath::new(*g, g.nodes().iter().map(|t| 1.0 + t).collect()).unwrap();
    let order2 = |b: &BathSpec| {
        let mu = dissipation_mu(b, g);
        let mut v: Vec<f64> = noise_n20(b, g).values().iter().copied().collect();
        v.extend(damping_gamma0(b, g).values().iter());
        v.extend(dissipation_j0(&mu).values().iter());
        v.extend(mu.values().iter());
        v
    };
    let order3 = |b: &BathSpec| {
        let n = g.len();
        let mut v = Vec::new();
        for k in [dissipation_j1(b, g), noise_n21(b, g), noise_n31(b, g)] {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        v.push(k.get(i, j, l));
                    }
                }
            }
        }
        v.extend(damping_gamma1(b, g, &sigma).unwrap().values().iter());
        v
    };
    (order2(bath), order2(&b2), order3(bath), order3(&b2))
}

#[test]
fn doubling_lambda_scales_exactly() {
    let g = TimeGrid::new(2.0, 9).unwrap();
    let (a2, b2, a3, b3) = scaling_pairs(&fixtures::two_mode(0.3), &g);
    assert!(a2.iter().zip(&b2).all(|(a, b)| 4.0 * a == *b));
    assert!(a3.iter().zip(&b3).all(|(a, b)| 8.0 * a == *b));
}

#[test]
fn degenerate_bath_gives_bitwise_zero_kernels() {
    let bath = BathSpec::new(
        vec![BathMode::new(1.0, 1.0, 0.5, 0.5).unwrap(), BathMode::new(2.0, 0.3, -1.0, -1.0).unwrap()],
        0.4,
        1.0,
    )
    .unwrap();
    let g = TimeGrid::new(2.0, 9).unwrap();
    let (a2, _, a3, _) = scaling_pairs(&bath, &g);
    assert!(a2.iter().chain(&a3).all(|v| v.to_bits() == 0));
    // the potential shift does not carry the (C1 - C2) factor
    let sys = qbm_core::bath::SystemSpec::harmonic(1.0, 1.0).unwrap();
    assert!(potential_shift_finite(&bath, &sys, 1.0) != 0.0);
}

fn arb_bath() -> impl Strategy<Value = BathSpec> {
    let mode = (0.3f64..3.0, 0.2f64..3.0, -2.0f64..2.0, -2.0f64..2.0)
        .prop_map(|(m, w, c1, c2)| BathMode::new(m, w, c1, c2).unwrap());
    (prop::collection::vec(mode, 1..4), 0.01f64..1.0, 0.2f64..3.0)
        .prop_map(|(modes, lam, hbar)| BathSpec::new(modes, lam, hbar).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lambda_scaling_and_symmetry_hold_for_random_baths(bath in arb_bath(), t in 0.5f64..4.0) {
        let g = TimeGrid::new(t, 7).unwrap();
        let (a2, b2, a3, b3) = scaling_pairs(&bath, &g);
        prop_assert!(a2.iter().zip(&b2).all(|(a, b)| 4.0 * a == *b));
        prop_assert!(a3.iter().zip(&b3).all(|(a, b)| 8.0 * a == *b));
        let n31 = noise_n31(&bath, &g);
        let n21 = noise_n21(&bath, &g);
        let mu = dissipation_mu(&bath, &g);
        for i in 0..7 {
            for j in 0..7 {
                prop_assert_eq!(mu.get(i, j), -mu.get(j, i));
                for k in 0..7 {
                    prop_assert_eq!(n31.get(i, j, k), n31.get(k, i, j));
                    prop_assert_eq!(n21.get(i, j, k), n21.get(j, i, k));
                }
            }
        }
    }

    #[test]
    fn propagators_are_odd_even_and_pythagorean(m in 0.1f64..5.0, w in 0.1f64..5.0, tau in -10.0f64..10.0) {
        use qbm_core::bath::{mode_mu, mode_nu};
        let mode = BathMode::new(m, w, 1.0, 0.0).unwrap();
        prop_assert_eq!(mode_mu(&mode, -tau), -mode_mu(&mode, tau));
        prop_assert_eq!(mode_nu(&mode, -tau), mode_nu(&mode, tau));
        let amp = 1.0 / (2.0 * m * w);
        let lhs = mode_mu(&mode, tau).powi(2) + mode_nu(&mode, tau).powi(2);
        prop_assert!((lhs - amp * amp).abs() <= 1e-14 * amp * amp);
    }

    #[test]
    fn spectral_weights_nonnegative_and_quadratic(bath in arb_bath()) {
        use qbm_core::bath::spectral_density;
        let base = spectral_density(&bath);
        let doubled = spectral_density(&bath.with_lambda(2.0 * bath.lambda));
        for (a, b) in base.iter().zip(&doubled) {
            prop_assert!(a.weight >= 0.0);
            prop_assert_eq!(4.0 * a.weight, b.weight);
        }
    }
}
