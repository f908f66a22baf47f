use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of `[0, t_end]` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
        }
        if n_points < 3 {
            return Err(Error::InvalidInput(format!("n_points must be >= 3, got {n_points}")));
        }
        Ok(Self { t_end, n_points })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_end / (self.n_points - 1) as f64
    }

    /// Node `s_i = i * ds`; the last node is pinned to `t_end` exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_end
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Trapezoidal weights over the whole grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let ds = self.step();
        let mut w = vec![ds; self.n_points];
        w[0] = 0.5 * ds;
        w[self.n_points - 1] = 0.5 * ds;
        w
    }

    /// Trapezoid rule over nodes `lo..=hi` of the grid.
    pub fn trapezoid_between(&self, lo: usize, hi: usize, f: impl Fn(usize) -> f64) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        let inner: f64 = (lo + 1..hi).map(&f).sum();
        self.step() * (0.5 * f(lo) + inner + 0.5 * f(hi))
    }

    pub fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: ({}, {}) vs ({}, {})",
                self.t_end, self.n_points, other.t_end, other.n_points
            )));
        }
        Ok(())
    }
}

/// Step function with the `theta(0) = 1/2` convention, evaluated on index differences.
pub(crate) fn theta_idx(i: usize, j: usize) -> f64 {
    match i.cmp(&j) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_uniform_and_end_exactly() {
        let g = TimeGrid::new(2.0, 17).unwrap();
        assert_eq!(g.step(), 0.125);
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(16), 2.0);
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 2).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = TimeGrid::new(3.0, 31).unwrap();
        let v = g.trapezoid_between(0, 30, |i| 2.0 * g.node(i) + 1.0);
        assert!((v - 12.0).abs() < 1e-12);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 3.0).abs() < 1e-12);
        assert_eq!(g.trapezoid_between(5, 5, |_| 1.0), 0.0);
    }
}
