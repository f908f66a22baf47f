//! Influence-action kernels discretized on a [`TimeGrid`].
//!
//! Conventions shared by every kernel in this module:
//!
//! * time integrals use the trapezoid rule on the uniform grid,
//! * `delta(s - s')` becomes a Kronecker delta divided by the grid step,
//! * the step function uses `theta(0) = 1/2`.

mod second_order;
mod shift;
mod third_order;

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::poly::Polynomial;

pub use second_order::{damping_gamma0, damping_gamma1, dissipation_j0, dissipation_mu, noise_n20};
pub use shift::potential_shift_finite;
pub use third_order::{dissipation_j1, noise_n21, noise_n31, ModeCoefficients};

/// Largest grid for which third-order kernels are stored densely.
pub const DENSE_KERNEL3_LIMIT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel2Label {
    N20,
    Gamma0,
    Mu,
    J0,
    Gamma1,
    /// `N2^(1)(s, s'; Sigma)`, a third-order noise kernel contracted with a reference path.
    N21Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel3Label {
    J1,
    N21,
    N31,
}

/// Two-time kernel sampled on the grid; entry `(i, j)` is `K(s_i, s_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2 {
    grid: TimeGrid,
    values: DMatrix<f64>,
    label: Kernel2Label,
}

impl Kernel2 {
    pub fn new(grid: TimeGrid, values: DMatrix<f64>, label: Kernel2Label) -> Result<Self> {
        if values.nrows() != grid.len() || values.ncols() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "kernel is {}x{} on a grid of {} nodes",
                values.nrows(),
                values.ncols(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, label })
    }

    pub(crate) fn from_fn(grid: TimeGrid, label: Kernel2Label, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let n = grid.len();
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        let values = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self { grid, values, label }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn label(&self) -> Kernel2Label {
        self.label
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entry-wise sum of two kernels on the same grid, keeping `self`'s label.
    pub fn add(&self, other: &Kernel2) -> Result<Kernel2> {
        self.grid.ensure_same(&other.grid, "kernel sum")?;
        Ok(Self { grid: self.grid, values: &self.values + &other.values, label: self.label })
    }

    /// Relative asymmetry `max |K - K^T| / max |K|` (0 for the zero kernel).
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.values - self.values.transpose()).amax() / scale
    }
}

/// Three-time kernel, dense for small grids and evaluated on demand otherwise.
#[derive(Debug, Clone)]
pub struct Kernel3 {
    grid: TimeGrid,
    label: Kernel3Label,
    storage: Storage,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Arc<Vec<f64>>),
    Lazy(Arc<third_order::ThirdOrderKernel>),
}

impl Kernel3 {
    fn build(kernel: third_order::ThirdOrderKernel, force_dense: Option<bool>) -> Self {
        let grid = kernel.grid();
        let label = kernel.label();
        let dense = force_dense.unwrap_or(grid.len() <= DENSE_KERNEL3_LIMIT);
        let storage = if dense {
            let n = grid.len();
            let planes: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut plane = Vec::with_capacity(n * n);
                    for j in 0..n {
                        for k in 0..n {
                            plane.push(kernel.eval(i, j, k));
                        }
                    }
                    plane
                })
                .collect();
            Storage::Dense(Arc::new(planes.concat()))
        } else {
            Storage::Lazy(Arc::new(kernel))
        };
        Self { grid, label, storage }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn label(&self) -> Kernel3Label {
        self.label
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => {
                let n = self.grid.len();
                v[(i * n + j) * n + k]
            }
            Storage::Lazy(kernel) => kernel.eval(i, j, k),
        }
    }

    /// Largest last-two index that can be nonzero for first index `i`
    /// (causal support of J1: both later arguments precede the first).
    fn last_two_bound(&self, i: usize) -> usize {
        match self.label {
            Kernel3Label::J1 => i,
            _ => self.grid.len() - 1,
        }
    }

    /// `sum_k w_k K(i, j, k) path_k` with trapezoid weights: the kernel
    /// contracted with a path in its last argument.
    pub fn contract_last(&self, path: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.grid.len();
        if path.len() != n {
            return Err(Error::GridMismatch(format!("path of length {} on {n} nodes", path.len())));
        }
        let w = self.grid.trapezoid_weights();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let hi = match self.label {
                            Kernel3Label::N21 => i.max(j),
                            Kernel3Label::J1 => i,
                            Kernel3Label::N31 => n - 1,
                        };
                        (0..=hi).map(|k| w[k] * self.get(i, j, k) * path[k]).sum()
                    })
                    .collect()
            })
            .collect();
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `sum_{j,k} w_j w_k K(i, j, k) x_j y_k` with trapezoid weights.
    pub fn contract_last_two(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if x.len() != n || y.len() != n {
            return Err(Error::GridMismatch(format!(
                "paths of length {}, {} on {n} nodes",
                x.len(),
                y.len()
            )));
        }
        let w = self.grid.trapezoid_weights();
        let wx: Vec<f64> = w.iter().zip(x).map(|(a, b)| a * b).collect();
        let wy: Vec<f64> = w.iter().zip(y).map(|(a, b)| a * b).collect();
        Ok((0..n)
            .into_par_iter()
            .map(|i| {
                let hi = self.last_two_bound(i);
                (0..=hi)
                    .map(|j| {
                        if wx[j] == 0.0 {
                            return 0.0;
                        }
                        let inner: f64 = (0..=hi).map(|k| self.get(i, j, k) * wy[k]).sum();
                        wx[j] * inner
                    })
                    .sum()
            })
            .collect())
    }

    /// Largest absolute entry (full scan).
    pub fn max_abs(&self) -> f64 {
        let n = self.grid.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut m = 0.0f64;
                for j in 0..n {
                    for k in 0..n {
                        m = m.max(self.get(i, j, k).abs());
                    }
                }
                m
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// The half-sum path `Sigma(s)`, which in the classical limit is `f(x(s))`.
/// Kernels never choose it; it is always passed in explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    grid: TimeGrid,
    sigma: Vec<f64>,
}

impl ReferencePath {
    pub fn new(grid: TimeGrid, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "reference path of length {} on {} nodes",
                sigma.len(),
                grid.len()
            )));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("reference path has non-finite entries".into()));
        }
        Ok(Self { grid, sigma })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn zero(grid: TimeGrid) -> Self {
        Self { grid, sigma: vec![0.0; grid.len()] }
    }

    /// `Sigma(s_i) = f(x(s_i))` for a trajectory on the grid.
    pub fn from_trajectory(grid: TimeGrid, coupling: &Polynomial, x: &[f64]) -> Result<Self> {
        Self::new(grid, x.iter().map(|&xi| coupling.eval(xi)).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.sigma
    }
}

/// Every kernel of the lambda^2 and lambda^3 influence action on one grid.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub n20: Kernel2,
    pub gamma0: Kernel2,
    pub mu: Kernel2,
    pub j0: Kernel2,
    pub j1: Kernel3,
    pub n21: Kernel3,
    pub n31: Kernel3,
}

impl KernelSet {
    pub fn assemble(bath: &crate::bath::BathSpec, grid: &TimeGrid) -> Self {
        let mu = dissipation_mu(bath, grid);
        let j0 = dissipation_j0(&mu);
        Self {
            n20: noise_n20(bath, grid),
            gamma0: damping_gamma0(bath, grid),
            mu,
            j0,
            j1: dissipation_j1(bath, grid),
            n21: noise_n21(bath, grid),
            n31: noise_n31(bath, grid),
        }
    }
}
