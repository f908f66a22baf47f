use serde::Serialize;

use crate::bath::{BathMode, BathSpec, ModeTable};
use crate::grid::{theta_idx, TimeGrid};

use super::second_order::coupled_tables;
use super::{Kernel3, Kernel3Label};

/// Per-mode structural coefficients (per unit `lambda^3`) of the two
/// Sigma-dependent structures shared by `N2^(1)` and `gamma^(1)`.
///
/// * contact: multiplies `[nu_n^2 - mu_n^2](s - s') (Sigma(s) + Sigma(s'))`
/// * memory: multiplies `int ds1 mu_n(s - s1) [nu_n nu_n + mu_n mu_n] Sigma(s1)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCoefficients {
    pub n21_contact: f64,
    pub gamma1_contact: f64,
    pub n21_memory: f64,
    pub gamma1_memory: f64,
}

impl ModeCoefficients {
    pub fn for_mode(mode: &BathMode, hbar: f64) -> Self {
        let d = mode.coupling_difference();
        let c2 = mode.coupling_p;
        let w = mode.omega;
        let contact = c2 * c2 / (mode.mass * w * w);
        let cross = mode.coupling_q * mode.coupling_q - c2 * c2;
        Self {
            n21_contact: -8.0 * hbar * d * contact,
            gamma1_contact: -8.0 * hbar / w * d * contact / 2.0,
            n21_memory: 16.0 * hbar * d * cross,
            gamma1_memory: 8.0 * hbar / w * d * cross,
        }
    }
}

#[derive(Debug, Clone)]
struct ModeTerm {
    table: ModeTable,
    /// `hbar (C1 - C2)`
    hd: f64,
    /// `C2^2 / (m w^2)`
    contact: f64,
    /// `C1^2 - C2^2`
    cross: f64,
}

/// Closed-form evaluator of one third-order kernel at a grid index triple.
#[derive(Debug, Clone)]
pub(super) struct ThirdOrderKernel {
    label: Kernel3Label,
    grid: TimeGrid,
    lam3: f64,
    inv_ds: f64,
    modes: Vec<ModeTerm>,
}

impl ThirdOrderKernel {
    fn new(bath: &BathSpec, grid: &TimeGrid, label: Kernel3Label) -> Self {
        let modes = coupled_tables(bath, grid)
            .into_iter()
            .map(|(m, table)| ModeTerm {
                table,
                hd: bath.hbar * m.coupling_difference(),
                contact: m.coupling_p * m.coupling_p / (m.mass * m.omega * m.omega),
                cross: m.coupling_q * m.coupling_q - m.coupling_p * m.coupling_p,
            })
            .collect();
        Self {
            label,
            grid: *grid,
            lam3: bath.lambda * bath.lambda * bath.lambda,
            inv_ds: 1.0 / grid.step(),
            modes,
        }
    }

    pub(super) fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub(super) fn label(&self) -> Kernel3Label {
        self.label
    }

    #[inline]
    fn delta(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.inv_ds
        } else {
            0.0
        }
    }

    pub(super) fn eval(&self, i: usize, j: usize, k: usize) -> f64 {
        let sum = match self.label {
            Kernel3Label::J1 => self.modes.iter().fold(0.0, |acc, m| acc + self.j1_mode(m, i, j, k)),
            Kernel3Label::N21 => {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                self.modes.iter().fold(0.0, |acc, m| acc + self.n21_mode(m, a, b, k))
            }
            Kernel3Label::N31 => {
                let mut idx = [i, j, k];
                idx.sort_unstable();
                self.modes.iter().fold(0.0, |acc, m| acc + self.n31_mode(m, idx))
            }
        };
        self.lam3 * sum
    }

    /// `-8 hbar d {A(s, s', s'') + A(s, s'', s')}` for one mode.
    fn j1_mode(&self, m: &ModeTerm, i: usize, j: usize, k: usize) -> f64 {
        let t = &m.table;
        let a = |sp: usize, spp: usize| -> f64 {
            if sp > i {
                return 0.0;
            }
            let contact = m.contact * (2.0 * self.delta(i, spp) + self.delta(sp, spp)) * t.nu(sp, i);
            let memory = if spp > sp {
                0.0
            } else {
                2.0 * m.cross
                    * theta_idx(sp, spp)
                    * (t.nu(sp, spp) * t.mu(spp, i) - t.mu(sp, spp) * t.nu(spp, i))
            };
            theta_idx(i, sp) * t.mu(i, sp) * (contact + memory)
        };
        -8.0 * m.hd * (a(j, k) + a(k, j))
    }

    /// `8 hbar d {B(s, s', s'') + B(s', s, s'')}` for one mode.
    fn n21_mode(&self, m: &ModeTerm, i: usize, j: usize, k: usize) -> f64 {
        let t = &m.table;
        let b = |s: usize, sp: usize| -> f64 {
            let (nu, mu) = (t.nu(s, sp), t.mu(s, sp));
            let contact = -m.contact * self.delta(s, k) * (nu * nu - mu * mu);
            let memory = if k > s {
                0.0
            } else {
                2.0 * m.cross
                    * theta_idx(s, k)
                    * t.mu(s, k)
                    * (t.nu(k, sp) * t.nu(sp, s) + t.mu(k, sp) * t.mu(sp, s))
            };
            contact + memory
        };
        8.0 * m.hd * (b(i, j) + b(j, i))
    }

    /// `-4 hbar d sum_{perms} D(a, b, c)` for one mode.
    fn n31_mode(&self, m: &ModeTerm, idx: [usize; 3]) -> f64 {
        let t = &m.table;
        let d = |a: usize, b: usize, c: usize| -> f64 {
            if b > a {
                return 0.0;
            }
            let contact = -m.contact * self.delta(b, c) * t.mu(c, a);
            let memory = if c > b {
                0.0
            } else {
                2.0 * m.cross * theta_idx(b, c) * (t.nu(b, c) * t.nu(c, a) + t.mu(b, c) * t.mu(c, a))
            };
            theta_idx(a, b) * t.nu(a, b) * (contact + memory)
        };
        let [x, y, z] = idx;
        let perms = d(x, y, z) + d(x, z, y) + d(y, x, z) + d(y, z, x) + d(z, x, y) + d(z, y, x);
        -4.0 * m.hd * perms
    }
}

/// Third-order dissipation kernel `J^(1)(s, s', s'')`, symmetrized in its last
/// two arguments and causal in both of them.
pub fn dissipation_j1(bath: &BathSpec, grid: &TimeGrid) -> Kernel3 {
    Kernel3::build(ThirdOrderKernel::new(bath, grid, Kernel3Label::J1), None)
}

/// Third-order correction `N2^(1)(s, s', s'')` to the two-point noise kernel,
/// symmetric in its first two arguments.
pub fn noise_n21(bath: &BathSpec, grid: &TimeGrid) -> Kernel3 {
    Kernel3::build(ThirdOrderKernel::new(bath, grid, Kernel3Label::N21), None)
}

/// Three-point noise kernel `N3^(1)(s, s', s'')`, fully symmetric.
pub fn noise_n31(bath: &BathSpec, grid: &TimeGrid) -> Kernel3 {
    Kernel3::build(ThirdOrderKernel::new(bath, grid, Kernel3Label::N31), None)
}

impl Kernel3 {
    /// Same kernel with the storage policy forced (dense or on-demand),
    /// regardless of grid size.
    pub fn with_storage(bath: &BathSpec, grid: &TimeGrid, label: Kernel3Label, dense: bool) -> Kernel3 {
        Kernel3::build(ThirdOrderKernel::new(bath, grid, label), Some(dense))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{damping_gamma1, ReferencePath};

    fn bath(c1: f64, c2: f64, lambda: f64) -> BathSpec {
        BathSpec::single(1.0, 1.0, c1, c2, lambda).unwrap()
    }

    #[test]
    fn dense_and_lazy_storage_agree() {
        let g = TimeGrid::new(2.0, 9).unwrap();
        let b = bath(1.0, 0.5, 0.3);
        for label in [Kernel3Label::J1, Kernel3Label::N21, Kernel3Label::N31] {
            let dense = Kernel3::with_storage(&b, &g, label, true);
            let lazy = Kernel3::with_storage(&b, &g, label, false);
            assert!(dense.is_dense() && !lazy.is_dense());
            for i in 0..9 {
                for j in 0..9 {
                    for k in 0..9 {
                        assert_eq!(dense.get(i, j, k).to_bits(), lazy.get(i, j, k).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn storage_follows_grid_size() {
        let b = bath(1.0, 0.5, 0.3);
        assert!(noise_n31(&b, &TimeGrid::new(1.0, 16).unwrap()).is_dense());
        assert!(!noise_n31(&b, &TimeGrid::new(1.0, 200).unwrap()).is_dense());
    }

    #[test]
    fn symmetries_are_exact() {
        let g = TimeGrid::new(2.0, 11).unwrap();
        let b = BathSpec::new(
            vec![
                BathMode::new(1.0, 1.0, 1.0, 0.5).unwrap(),
                BathMode::new(0.7, 2.2, -0.3, 0.4).unwrap(),
            ],
            0.4,
            1.0,
        )
        .unwrap();
        let n31 = noise_n31(&b, &g);
        let n21 = noise_n21(&b, &g);
        for i in 0..11 {
            for j in 0..11 {
                for k in 0..11 {
                    let v = n31.get(i, j, k);
                    for (a, bb, c) in [(k, i, j), (j, k, i), (j, i, k), (i, k, j), (k, j, i)] {
                        assert_eq!(v.to_bits(), n31.get(a, bb, c).to_bits());
                    }
                    assert_eq!(n21.get(i, j, k).to_bits(), n21.get(j, i, k).to_bits());
                }
            }
        }
    }

    #[test]
    fn j1_is_causal() {
        let g = TimeGrid::new(2.0, 11).unwrap();
        let j1 = dissipation_j1(&bath(1.0, 0.5, 0.3), &g);
        for i in 0..11 {
            for j in 0..11 {
                for k in 0..11 {
                    if j > i || k > i {
                        assert_eq!(j1.get(i, j, k), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn contact_coefficients_match_assembled_kernels() {
        // C1 = -C2 removes the memory structures, leaving only the contact terms.
        let b = bath(0.6, -0.6, 0.5);
        let g = TimeGrid::new(2.0, 21).unwrap();
        let coeffs = ModeCoefficients::for_mode(&b.modes[0], b.hbar);
        assert_eq!(coeffs.n21_memory, 0.0);
        let sigma = ReferencePath::constant(g, 1.0).unwrap();
        let n21s = noise_n21(&b, &g).contract_last(sigma.values()).unwrap();
        let g1 = damping_gamma1(&b, &g, &sigma).unwrap();
        let tab = ModeTable::new(&b.modes[0], &g);
        let lam3 = b.lambda.powi(3);
        for i in 1..20 {
            for j in 1..20 {
                let shape = (tab.nu(i, j).powi(2) - tab.mu(i, j).powi(2)) * 2.0;
                assert!((n21s[(i, j)] - lam3 * coeffs.n21_contact * shape).abs() < 1e-13);
                assert!((g1.get(i, j) - lam3 * coeffs.gamma1_contact * shape).abs() < 1e-13);
            }
        }
    }
}
