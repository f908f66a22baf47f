use crate::bath::{BathSpec, ModeTable};
use crate::grid::{theta_idx, TimeGrid};

use super::{Kernel2, Kernel2Label, ReferencePath};

/// Coupled modes with their grid tables; modes with C1 == C2 are skipped so
/// that a degenerate bath yields exact (+0.0) zeros.
pub(super) fn coupled_tables(bath: &BathSpec, grid: &TimeGrid) -> Vec<(crate::bath::BathMode, ModeTable)> {
    bath.modes
        .iter()
        .filter(|m| m.coupling_difference() != 0.0)
        .map(|m| (*m, ModeTable::new(m, grid)))
        .collect()
}

/// Stationary lambda^2 kernel `lambda^2 sum_n weight_n * g_n(i, j)`.
fn stationary(
    bath: &BathSpec,
    grid: &TimeGrid,
    label: Kernel2Label,
    per_mode: impl Fn(&crate::bath::BathMode, &ModeTable, usize, usize) -> f64 + Sync,
) -> Kernel2 {
    let tables = coupled_tables(bath, grid);
    let lam2 = bath.lambda * bath.lambda;
    Kernel2::from_fn(*grid, label, |i, j| {
        let sum = tables.iter().map(|(m, t)| per_mode(m, t, i, j)).fold(0.0, |acc, v| acc + v);
        lam2 * sum
    })
}

/// Gaussian noise kernel `N2^(0)(s, s') = nu(s - s')`.
pub fn noise_n20(bath: &BathSpec, grid: &TimeGrid) -> Kernel2 {
    let hbar = bath.hbar;
    stationary(bath, grid, Kernel2Label::N20, |m, t, i, j| {
        let d = m.coupling_difference();
        let (nu, mu) = (t.nu(i, j), t.mu(i, j));
        2.0 * hbar * d * d * (nu * nu - mu * mu)
    })
}

/// Damping kernel `gamma^(0)(s - s')`.
pub fn damping_gamma0(bath: &BathSpec, grid: &TimeGrid) -> Kernel2 {
    let hbar = bath.hbar;
    stationary(bath, grid, Kernel2Label::Gamma0, |m, t, i, j| {
        let d = m.coupling_difference();
        let (nu, mu) = (t.nu(i, j), t.mu(i, j));
        hbar / m.omega * d * d * (nu * nu - mu * mu)
    })
}

/// Dissipation kernel `mu(s - s') = d gamma^(0) / ds`; antisymmetric with zero diagonal.
pub fn dissipation_mu(bath: &BathSpec, grid: &TimeGrid) -> Kernel2 {
    let hbar = bath.hbar;
    stationary(bath, grid, Kernel2Label::Mu, |m, t, i, j| {
        let d = m.coupling_difference();
        4.0 * hbar * d * d * t.mu(i, j) * t.nu(i, j)
    })
}

/// Causal dissipation kernel `J^(0)(s, s') = 2 theta(s - s') mu(s - s')`.
pub fn dissipation_j0(mu: &Kernel2) -> Kernel2 {
    Kernel2::from_fn(*mu.grid(), Kernel2Label::J0, |i, j| {
        if j > i {
            0.0
        } else {
            2.0 * theta_idx(i, j) * mu.get(i, j)
        }
    })
}

/// Sigma-dependent damping kernel `gamma^(1)(s, s'; Sigma)`: a contact piece
/// proportional to `Sigma(s) + Sigma(s')` plus the signed memory integral
/// `int_{s'}^{s} ds1 mu_n(s - s1) [nu_n(s - s') nu_n(s' - s1) + mu_n(s - s') mu_n(s' - s1)] Sigma(s1)`.
pub fn damping_gamma1(bath: &BathSpec, grid: &TimeGrid, sigma: &ReferencePath) -> crate::error::Result<Kernel2> {
    grid.ensure_same(sigma.grid(), "gamma1 reference path")?;
    let tables = coupled_tables(bath, grid);
    let lam3 = bath.lambda * bath.lambda * bath.lambda;
    let hbar = bath.hbar;
    let sig = sigma.values();
    Ok(Kernel2::from_fn(*grid, Kernel2Label::Gamma1, |i, j| {
        let sum = tables
            .iter()
            .map(|(m, t)| {
                let d = m.coupling_difference();
                let c1 = m.coupling_q;
                let c2 = m.coupling_p;
                let w2 = m.omega * m.omega;
                let (nu_ij, mu_ij) = (t.nu(i, j), t.mu(i, j));
                let contact = -(c2 * c2 / (2.0 * m.mass * w2)) * (nu_ij * nu_ij - mu_ij * mu_ij) * (sig[i] + sig[j]);
                let integrand = |l: usize| t.mu(i, l) * (nu_ij * t.nu(j, l) + mu_ij * t.mu(j, l)) * sig[l];
                let memory = if i >= j {
                    grid.trapezoid_between(j, i, integrand)
                } else {
                    -grid.trapezoid_between(i, j, integrand)
                };
                8.0 * hbar / m.omega * d * (contact + (c1 * c1 - c2 * c2) * memory)
            })
            .fold(0.0, |acc, v| acc + v);
        lam3 * sum
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_bath(lambda: f64) -> BathSpec {
        BathSpec::single(1.0, 1.0, 1.0, 0.0, lambda).unwrap()
    }

    #[test]
    fn single_mode_closed_forms() {
        let g = TimeGrid::new(3.0, 61).unwrap();
        let bath = unit_bath(1.0);
        let n20 = noise_n20(&bath, &g);
        let g0 = damping_gamma0(&bath, &g);
        let mu = dissipation_mu(&bath, &g);
        for i in 0..g.len() {
            for j in 0..g.len() {
                let tau = (i as f64 - j as f64) * g.step();
                assert!((n20.get(i, j) - (2.0 * tau).cos() / 2.0).abs() < 1e-14);
                assert!((g0.get(i, j) - (2.0 * tau).cos() / 4.0).abs() < 1e-14);
                assert!((mu.get(i, j) + (2.0 * tau).sin() / 2.0).abs() < 1e-14);
            }
            assert_eq!(n20.get(i, i), 0.5);
            assert_eq!(mu.get(i, i), 0.0);
        }
    }

    #[test]
    fn gamma0_diagonal_closed_form() {
        let bath = BathSpec::new(
            vec![
                crate::bath::BathMode::new(1.5, 0.7, 0.9, 0.1).unwrap(),
                crate::bath::BathMode::new(0.8, 2.3, -0.4, 0.6).unwrap(),
            ],
            0.37,
            1.3,
        )
        .unwrap();
        let g = TimeGrid::new(1.0, 5).unwrap();
        let expected: f64 = bath
            .modes
            .iter()
            .map(|m| {
                let d = m.coupling_difference();
                bath.lambda.powi(2) * bath.hbar * d * d / (4.0 * m.mass.powi(2) * m.omega.powi(3))
            })
            .sum();
        let g0 = damping_gamma0(&bath, &g);
        assert!((g0.get(2, 2) - expected).abs() < 1e-15);
    }

    #[test]
    fn j0_is_causal_and_matches_mu() {
        // grid with s_i - s_j = pi/4 at (i, j) = (1, 0)
        let g = TimeGrid::new(PI, 5).unwrap();
        let mu = dissipation_mu(&unit_bath(1.0), &g);
        let j0 = dissipation_j0(&mu);
        assert!((j0.get(1, 0) + 1.0).abs() < 1e-15);
        for i in 0..5 {
            assert_eq!(j0.get(i, i), 0.0);
            for j in i + 1..5 {
                assert_eq!(j0.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn degenerate_and_zero_lambda() {
        let g = TimeGrid::new(2.0, 9).unwrap();
        let deg = BathSpec::single(1.0, 1.0, 0.3, 0.3, 0.5).unwrap();
        assert!(noise_n20(&deg, &g).values().iter().all(|v| v.to_bits() == 0));
        assert!(damping_gamma0(&deg, &g).values().iter().all(|v| v.to_bits() == 0));
        let sigma = ReferencePath::constant(g, 1.0).unwrap();
        assert!(damping_gamma1(&deg, &g, &sigma).unwrap().values().iter().all(|v| v.to_bits() == 0));
        assert!(noise_n20(&unit_bath(0.0), &g).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gamma1_vanishes_for_zero_path() {
        let g = TimeGrid::new(2.0, 9).unwrap();
        let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.3).unwrap();
        let k = damping_gamma1(&bath, &g, &ReferencePath::zero(g)).unwrap();
        assert!(k.values().iter().all(|&v| v == 0.0));
    }
}
