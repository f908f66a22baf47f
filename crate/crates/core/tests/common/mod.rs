//! Test-only oracles written independently of the library's kernel assembly:
//! straight transcriptions of the printed kernel formulas in continuous time
//! arguments, with sin/cos evaluated directly.
#![allow(dead_code)]

pub mod oracle {
    use qbm_core::bath::BathSpec;

    pub struct Ctx<'a> {
        pub bath: &'a BathSpec,
        /// grid step; Dirac deltas become 1/ds on coincidence
        pub ds: f64,
    }

    fn mu(m: f64, w: f64, tau: f64) -> f64 {
        -(w * tau).sin() / (2.0 * m * w)
    }

    fn nu(m: f64, w: f64, tau: f64) -> f64 {
        (w * tau).cos() / (2.0 * m * w)
    }

    impl Ctx<'_> {
        fn same(&self, a: f64, b: f64) -> bool {
            (a - b).abs() < 1e-9 * self.ds
        }

        fn theta(&self, x: f64) -> f64 {
            if x.abs() < 1e-9 * self.ds {
                0.5
            } else if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }

        fn delta(&self, a: f64, b: f64) -> f64 {
            if self.same(a, b) {
                1.0 / self.ds
            } else {
                0.0
            }
        }

        pub fn j1(&self, s: f64, s1: f64, s2: f64) -> f64 {
            let lam = self.bath.lambda;
            let h = self.bath.hbar;
            let mut total = 0.0;
            for md in &self.bath.modes {
                let (m, w, c1, c2) = (md.mass, md.omega, md.coupling_q, md.coupling_p);
                let term = |a: f64, b: f64| {
                    self.theta(s - a)
                        * mu(m, w, s - a)
                        * ((c2 * c2 / (m * w * w)) * (2.0 * self.delta(s, b) + self.delta(a, b)) * nu(m, w, a - s)
                            + 2.0
                                * (c1 * c1 - c2 * c2)
                                * self.theta(a - b)
                                * (nu(m, w, a - b) * mu(m, w, b - s) - mu(m, w, a - b) * nu(m, w, b - s)))
                };
                total += -lam * lam * lam * 8.0 * h * (c1 - c2) * (term(s1, s2) + term(s2, s1));
            }
            total
        }

        pub fn n21(&self, s: f64, s1: f64, s2: f64) -> f64 {
            let lam = self.bath.lambda;
            let h = self.bath.hbar;
            let mut total = 0.0;
            for md in &self.bath.modes {
                let (m, w, c1, c2) = (md.mass, md.omega, md.coupling_q, md.coupling_p);
                let term = |a: f64, b: f64| {
                    -(c2 * c2 / (m * w * w))
                        * self.delta(a, s2)
                        * (nu(m, w, a - b).powi(2) - mu(m, w, a - b).powi(2))
                        + 2.0
                            * (c1 * c1 - c2 * c2)
                            * self.theta(a - s2)
                            * mu(m, w, a - s2)
                            * (nu(m, w, s2 - b) * nu(m, w, b - a) + mu(m, w, s2 - b) * mu(m, w, b - a))
                };
                total += lam * lam * lam * 8.0 * h * (c1 - c2) * (term(s, s1) + term(s1, s));
            }
            total
        }

        pub fn n31(&self, s: f64, s1: f64, s2: f64) -> f64 {
            let lam = self.bath.lambda;
            let h = self.bath.hbar;
            let mut total = 0.0;
            for md in &self.bath.modes {
                let (m, w, c1, c2) = (md.mass, md.omega, md.coupling_q, md.coupling_p);
                let term = |a: f64, b: f64, c: f64| {
                    self.theta(a - b)
                        * nu(m, w, a - b)
                        * (-(c2 * c2 / (m * w * w)) * self.delta(b, c) * mu(m, w, c - a)
                            + 2.0
                                * (c1 * c1 - c2 * c2)
                                * self.theta(b - c)
                                * (nu(m, w, b - c) * nu(m, w, c - a) + mu(m, w, b - c) * mu(m, w, c - a)))
                };
                let perms = term(s, s1, s2)
                    + term(s, s2, s1)
                    + term(s1, s, s2)
                    + term(s1, s2, s)
                    + term(s2, s, s1)
                    + term(s2, s1, s);
                total += -lam * lam * lam * 4.0 * h * (c1 - c2) * perms;
            }
            total
        }

        /// gamma^(1)(s_i, s_j; Sigma) with its own trapezoid over the nodes between s_j and s_i.
        pub fn gamma1(&self, nodes: &[f64], sigma: &[f64], i: usize, j: usize) -> f64 {
            let lam = self.bath.lambda;
            let h = self.bath.hbar;
            let (s, sp) = (nodes[i], nodes[j]);
            let mut total = 0.0;
            for md in &self.bath.modes {
                let (m, w, c1, c2) = (md.mass, md.omega, md.coupling_q, md.coupling_p);
                let contact = -(c2 * c2 / (2.0 * m * w * w))
                    * (nu(m, w, s - sp).powi(2) - mu(m, w, s - sp).powi(2))
                    * (sigma[i] + sigma[j]);
                let f = |l: usize| {
                    let s1 = nodes[l];
                    mu(m, w, s - s1) * (nu(m, w, s - sp) * nu(m, w, sp - s1) + mu(m, w, s - sp) * mu(m, w, sp - s1)) * sigma[l]
                };
                let (lo, hi, sign) = if i >= j { (j, i, 1.0) } else { (i, j, -1.0) };
                let mut integral = 0.0;
                for l in lo..hi {
                    integral += 0.5 * (f(l) + f(l + 1)) * self.ds;
                }
                total += lam * lam * lam * (8.0 * h / w) * (c1 - c2) * (contact + (c1 * c1 - c2 * c2) * sign * integral);
            }
            total
        }
    }
}

/// Fixed reference baths and grids shared by several test targets.
pub mod fixtures {
    use qbm_core::bath::{BathMode, BathSpec};

    pub fn single(c2: f64, lambda: f64) -> BathSpec {
        BathSpec::single(1.0, 1.0, 1.0, c2, lambda).unwrap()
    }

    pub fn two_mode(lambda: f64) -> BathSpec {
        BathSpec::new(
            vec![BathMode::new(1.0, 1.0, 1.0, 0.5).unwrap(), BathMode::new(0.8, 1.7, -0.4, 0.3).unwrap()],
            lambda,
            1.0,
        )
        .unwrap()
    }
}
