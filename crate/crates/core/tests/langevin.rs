mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::fixtures;
use qbm_core::bath::{BathSpec, SystemSpec, TimeGrid};
use qbm_core::kernels::{dissipation_j0, dissipation_j1, dissipation_mu, noise_n20};
use qbm_core::langevin::*;
use qbm_core::noise::{factor_covariance, gaussian_sample, DEFAULT_CLIP};

fn free_green_error(n: usize) -> f64 {
    let g = TimeGrid::new(PI / 2.0, n).unwrap();
    let bath = fixtures::single(0.5, 0.0);
    let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
    let u = solve_u_functions(&j0, &SystemSpec::harmonic(1.0, 1.0).unwrap(), &g).unwrap();
    let gr = green_retarded(&u, 1.0).unwrap();
    let s = g.nodes();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let exact = if i == j { 0.0 } else { (s[i] - s[j]).sin() };
            err = err.max((gr.values()[(i, j)] - exact).abs());
        }
    }
    err
}

#[test]
fn free_green_function_converges_at_second_order() {
    let coarse = free_green_error(201);
    let fine = free_green_error(401);
    assert!(coarse < 1e-3);
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn free_oscillator_trajectory() {
    let n = 401;
    let g = TimeGrid::new(2.0, n).unwrap();
    let bath = fixtures::single(0.5, 0.0);
    let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
    let solver = PerturbativeSolver::new(&j0, dissipation_j1(&bath, &g), &SystemSpec::harmonic(1.0, 1.0).unwrap(), &g).unwrap();
    let sol = solver.solve(&BoundaryData::Initial { x0: 1.0, p0: 0.0 }, &vec![0.0; n], None).unwrap();
    for (i, s) in g.nodes().into_iter().enumerate() {
        assert!((sol.x0[i] - s.cos()).abs() < 1e-5);
    }
    assert_eq!(sol.x0[0], 1.0);
    let v = grid_derivative(&sol.x0, g.step());
    assert!(v[0].abs() < 1e-5);
}

#[test]
fn discrete_operator_inverts_green_function() {
    // At lambda = 0 the discrete LHS applied to a column of G_ret is delta/ds.
    let n = 201;
    let g = TimeGrid::new(2.0, n).unwrap();
    let bath = fixtures::single(0.5, 0.0);
    let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
    let u = solve_u_functions(&j0, &SystemSpec::harmonic(1.0, 1.3).unwrap(), &g).unwrap();
    let gr = green_retarded(&u, 1.0).unwrap();
    let ds = g.step();
    for j in [20, 100, 150] {
        for i in 1..n - 1 {
            let col = |k: usize| gr.values()[(k, j)];
            let lhs = (col(i + 1) - 2.0 * col(i) + col(i - 1)) / (ds * ds) + 1.69 * col(i);
            let target = if i == j { 1.0 / ds } else { 0.0 };
            assert!((lhs - target).abs() < 10.0 * ds, "({i},{j}) {lhs}");
        }
    }
}

#[test]
fn picard_and_perturbative_agree_to_sixth_order() {
    let n = 121;
    let g = TimeGrid::new(3.0, n).unwrap();
    let sys = SystemSpec::harmonic(1.0, 1.0).unwrap();
    let xi: Vec<f64> = g.nodes().iter().map(|s| 0.3 * (1.7 * s).cos() + 0.2 * (0.6 * s).sin()).collect();
    let boundary = BoundaryData::Initial { x0: 1.0, p0: 0.0 };
    let remainder = |lambda: f64| {
        let bath = fixtures::single(0.5, lambda);
        let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
        let solver = PerturbativeSolver::new(&j0, dissipation_j1(&bath, &g), &sys, &g).unwrap();
        let sol = solver.solve(&boundary, &xi, None).unwrap();
        let x = solver.solve_iterative(&boundary, &xi, &PicardOptions::default()).unwrap();
        x.iter().zip(sol.total()).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    };
    let ratio = remainder(0.2) / remainder(0.1);
    assert!((51.0..80.0).contains(&ratio), "{ratio}");
}

#[test]
fn final_data_round_trip() {
    let n = 801;
    let g = TimeGrid::new(3.0, n).unwrap();
    let bath = fixtures::single(0.5, 0.3);
    let sys = SystemSpec::harmonic(1.0, 1.0).unwrap();
    let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
    let solver = PerturbativeSolver::new(&j0, dissipation_j1(&bath, &g), &sys, &g).unwrap();
    let xi: Vec<f64> = g.nodes().iter().map(|s| 0.4 * (2.1 * s).sin()).collect();
    let fwd = solver.solve(&BoundaryData::Initial { x0: 0.7, p0: -0.2 }, &xi, None).unwrap();
    let back = solver.solve(&BoundaryData::final_from(&fwd.x0, &g, 1.0), &xi, None).unwrap();
    let err = fwd.x0.iter().zip(&back.x0).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    assert!(err < 1e-4, "{err}");
}

#[test]
fn energy_is_conserved_without_coupling() {
    let n = 2001;
    let g = TimeGrid::new(10.0, n).unwrap();
    let bath = fixtures::single(0.5, 0.0);
    let sys = SystemSpec::harmonic(1.0, 1.4).unwrap();
    let integ = NonlinearIntegrator::new(&sys, &bath, &g).unwrap();
    let out = integ.integrate(&SigmaPolicy::Frozen, &vec![0.0; n], 1.0, 0.5).unwrap();
    let e = |i: usize| 0.5 * out.v[i] * out.v[i] + 0.5 * 1.96 * out.x[i] * out.x[i];
    let drift = (0..n).fold(0.0f64, |acc, i| acc.max((e(i) - e(0)).abs()));
    assert!(drift < 1e-4, "{drift}");
}

#[test]
fn direct_integrator_tracks_perturbative_solution_for_weak_coupling() {
    // different memory conventions; agreement only to the size of the lambda^2 damping effects
    let n = 401;
    let g = TimeGrid::new(3.0, n).unwrap();
    let bath = fixtures::single(0.5, 0.1);
    let sys = SystemSpec::harmonic(1.0, 1.0).unwrap();
    let xi: Vec<f64> = g.nodes().iter().map(|s| 0.3 * (1.7 * s).cos()).collect();
    let integ = NonlinearIntegrator::new(&sys, &bath, &g).unwrap();
    let direct = integ.integrate(&SigmaPolicy::Picard { iterations: 2 }, &xi, 1.0, 0.0).unwrap();
    let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
    let solver = PerturbativeSolver::new(&j0, dissipation_j1(&bath, &g), &sys, &g).unwrap();
    let pert = solver.solve(&BoundaryData::Initial { x0: 1.0, p0: 0.0 }, &xi, None).unwrap().total();
    let diff = direct.x.iter().zip(&pert).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    assert!(diff < 0.05, "{diff}");
}

#[test]
fn ensemble_mean_and_covariance() {
    let n = 41;
    let g = TimeGrid::new(2.0, n).unwrap();
    let bath = fixtures::single(0.0, 0.5);
    let free = fixtures::single(0.0, 0.0);
    let sys = SystemSpec::harmonic(1.0, 1.0).unwrap();
    let j0 = dissipation_j0(&dissipation_mu(&free, &g));
    let solver = PerturbativeSolver::new(&j0, dissipation_j1(&free, &g), &sys, &g).unwrap();
    let n20 = noise_n20(&bath, &g);
    let ens = gaussian_sample(&factor_covariance(&n20, 1.0, DEFAULT_CLIP).unwrap(), 20_000, 4).unwrap();
    let boundary = BoundaryData::Initial { x0: 1.0, p0: 0.0 };
    let sols = solver.solve_ensemble(&boundary, &ens).unwrap();
    let stats = ensemble_statistics(&sols, ens.weights()).unwrap();
    let xh = homogeneous_solution(&solver.u, &boundary, 1.0).unwrap();
    for i in 0..n {
        assert!(stats.mean[i].z_score(xh[i]).abs() < 5.0, "{i}");
    }
    // covariance oracle: G N G^T with trapezoid weights
    let w = g.trapezoid_weights();
    let gm = solver.retarded.values();
    for (i, j) in [(10, 10), (40, 20), (30, 39)] {
        let mut expected = 0.0;
        for a in 0..n {
            for b in 0..n {
                expected += gm[(i, a)] * w[a] * n20.get(a, b) * w[b] * gm[(j, b)];
            }
        }
        let tol = 5.0 * stats.correlation_error[(i, j)] + 1e-12;
        assert!((stats.covariance[(i, j)] - expected).abs() < tol, "({i},{j})");
    }
}

#[test]
fn repeated_trajectory_statistics() {
    let g = TimeGrid::new(1.0, 5).unwrap();
    let path = vec![0.5, 1.0, -2.0, 0.25, 4.0];
    let paths = vec![path.clone(); 8];
    let stats = path_statistics(&g, &paths, &[1.0; 8]).unwrap();
    for i in 0..5 {
        assert_eq!(stats.mean[i].value, path[i]);
        assert_eq!(stats.mean[i].std_error, 0.0);
    }
    assert!(path_statistics(&g, &[vec![0.0; 4], vec![0.0; 4]], &[1.0, 1.0]).is_err());
}

#[test]
fn large_grid_bvp_is_fast() {
    let n = 4001;
    let g = TimeGrid::new(5.0, n).unwrap();
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.3).unwrap();
    let j0 = dissipation_j0(&dissipation_mu(&bath, &g));
    let start = Instant::now();
    let u = solve_u_functions(&j0, &SystemSpec::harmonic(1.0, 1.0).unwrap(), &g).unwrap();
    assert!(start.elapsed().as_secs_f64() < 30.0);
    assert_eq!(u.u1[0], 1.0);
}
