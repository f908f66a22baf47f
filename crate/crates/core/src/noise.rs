//! Stochastic force sampling.
//!
//! The Gaussian part of the force has covariance `hbar N2^(0)`. The order
//! lambda^3 corrections are carried by importance weights
//! `w = (1 + C0) + C1.xi + xi.C2.xi + C3.xi.xi.xi` attached to Gaussian
//! samples, with every time integral replaced by a sum times the grid step.
//!
//! Because `N2^(0)` of a finite bath has low rank, all inverses are
//! pseudo-inverses on the retained eigenspace. Every coefficient therefore
//! lives in that subspace and is stored as a reduced representation on an
//! orthonormal basis of it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::{Kernel2, Kernel3, ReferencePath};

/// Default relative eigenvalue clip.
pub const DEFAULT_CLIP: f64 = 1e-12;

/// Symmetry tolerance for the covariance kernel.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Number of batches used by the batch-means and jackknife error estimates.
pub const N_BATCHES: usize = 100;

#[derive(Debug, Clone)]
struct Spectrum {
    /// Retained eigenvalues of `N2^(0)` (not scaled by hbar), descending.
    values: Vec<f64>,
    /// Matching orthonormal eigenvectors, `n x rank`.
    basis: DMatrix<f64>,
}

fn retained_spectrum(n20: &Kernel2, hbar: f64, clip: f64) -> Result<Spectrum> {
    let asymmetry = n20.asymmetry();
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { asymmetry });
    }
    if !(0.0..1.0).contains(&clip) {
        return Err(Error::InvalidInput(format!("eigenvalue clip {clip} outside [0, 1)")));
    }
    let n = n20.len();
    let eig = SymmetricEigen::new(n20.values().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = hbar * eig.eigenvalues[order[0]];
    let kept: Vec<usize> = if top > 0.0 {
        order.into_iter().filter(|&k| hbar * eig.eigenvalues[k] >= clip * top && eig.eigenvalues[k] > 0.0).collect()
    } else {
        Vec::new()
    };
    let values = kept.iter().map(|&k| eig.eigenvalues[k]).collect();
    let basis = DMatrix::from_fn(n, kept.len(), |i, c| eig.eigenvectors[(i, kept[c])]);
    Ok(Spectrum { values, basis })
}

/// Factor `L` of the clipped covariance `hbar N2^(0) ~ L L^T`.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    grid: TimeGrid,
    factor: DMatrix<f64>,
    clip: f64,
    /// Retained eigenvalues of `hbar N2^(0)`.
    eigenvalues: Vec<f64>,
}

impl CovarianceFactor {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `n x rank` factor.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `L L^T`, the covariance actually sampled.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

/// Eigen-factorization of `hbar N2^(0)` with eigenvalues below
/// `clip * lambda_max` dropped.
pub fn factor_covariance(n20: &Kernel2, hbar: f64, clip: f64) -> Result<CovarianceFactor> {
    let spec = retained_spectrum(n20, hbar, clip)?;
    let mut factor = spec.basis.clone();
    for (c, &e) in spec.values.iter().enumerate() {
        factor.column_mut(c).scale_mut((hbar * e).sqrt());
    }
    Ok(CovarianceFactor {
        grid: *n20.grid(),
        factor,
        clip,
        eigenvalues: spec.values.iter().map(|e| hbar * e).collect(),
    })
}

/// Sampled force paths with their importance weights.
#[derive(Debug, Clone)]
pub struct NoiseEnsemble {
    grid: TimeGrid,
    /// Row-major `n_samples x n`.
    samples: Vec<f64>,
    weights: Vec<f64>,
    seed: u64,
    clip: f64,
    rank: usize,
}

impl NoiseEnsemble {
    /// Ensemble from explicit paths (row-major) and weights.
    pub fn from_parts(grid: TimeGrid, samples: Vec<f64>, weights: Vec<f64>, seed: u64) -> Result<Self> {
        let n = grid.len();
        if samples.len() != weights.len() * n {
            return Err(Error::GridMismatch(format!(
                "{} values for {} samples on {n} nodes",
                samples.len(),
                weights.len()
            )));
        }
        Ok(Self { grid, samples, weights, seed, clip: DEFAULT_CLIP, rank: n })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_samples(&self) -> usize {
        self.weights.len()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.samples[k * n..(k + 1) * n]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.grid.len())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Draws `xi = L z` per sample. Sample `k` uses its own ChaCha8 stream
/// (`seed`, stream `k`), so the ensemble does not depend on thread count.
pub fn gaussian_sample(factor: &CovarianceFactor, n_samples: usize, seed: u64) -> Result<NoiseEnsemble> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let n = factor.grid.len();
    let r = factor.rank();
    let l = &factor.factor;
    let mut samples = vec![0.0; n_samples * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let z: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
        for (i, out) in row.iter_mut().enumerate() {
            *out = (0..r).fold(0.0, |acc, c| acc + l[(i, c)] * z[c]);
        }
    });
    Ok(NoiseEnsemble {
        grid: factor.grid,
        samples,
        weights: vec![1.0; n_samples],
        seed,
        clip: factor.clip,
        rank: r,
    })
}

/// Discrete inverse bifunction: `M^- = N2^(0)+ / ds^2`, so that
/// `(N2^(0) ds) M^- ds` is the projector onto the retained eigenspace.
#[derive(Debug, Clone)]
pub struct InverseBifunction {
    grid: TimeGrid,
    matrix: DMatrix<f64>,
    spectrum: Spectrum,
}

impl InverseBifunction {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.spectrum.values.len()
    }

    /// Orthonormal basis of the retained eigenspace, `n x rank`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.spectrum.basis
    }

    /// Orthogonal projector onto the retained eigenspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.spectrum.basis * self.spectrum.basis.transpose()
    }

    /// Pseudo-inverse of the `N2^(0)` matrix itself (no grid measure).
    fn pinv_basis(&self) -> DMatrix<f64> {
        let mut q = self.spectrum.basis.clone();
        for (c, &e) in self.spectrum.values.iter().enumerate() {
            q.column_mut(c).scale_mut(1.0 / e);
        }
        q
    }
}

pub fn inverse_bifunction(n20: &Kernel2, hbar: f64, clip: f64) -> Result<InverseBifunction> {
    let spectrum = retained_spectrum(n20, hbar, clip)?;
    let grid = *n20.grid();
    let ds = grid.step();
    let mut scaled = spectrum.basis.clone();
    for (c, &e) in spectrum.values.iter().enumerate() {
        scaled.column_mut(c).scale_mut(1.0 / (e * ds * ds));
    }
    let matrix = scaled * spectrum.basis.transpose();
    Ok(InverseBifunction { grid, matrix, spectrum })
}

/// Fully symmetric rank-reduced three-index tensor
/// `T(i, j, k) = scale * sum_{pqr} V(i,p) V(j,q) V(k,r) core(p,q,r)`.
#[derive(Debug, Clone)]
pub struct ReducedTensor {
    basis: DMatrix<f64>,
    core: Vec<f64>,
    scale: f64,
}

impl ReducedTensor {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn core(&self) -> &[f64] {
        &self.core
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let r = self.rank();
        let v = &self.basis;
        let mut acc = 0.0;
        for p in 0..r {
            for q in 0..r {
                for s in 0..r {
                    acc += v[(i, p)] * v[(j, q)] * v[(k, s)] * self.core[(p * r + q) * r + s];
                }
            }
        }
        self.scale * acc
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.basis.nrows();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m = m.max(self.get(i, j, k).abs());
                }
            }
        }
        m
    }
}

/// `sum_{abc} K(a,b,c) Q(a,p) Q(b,q) Q(c,s)`, symmetrized over `(p,q,s)`.
fn contract_all(k: &Kernel3, q: &DMatrix<f64>) -> Vec<f64> {
    let n = k.len();
    let r = q.ncols();
    if r == 0 {
        return Vec::new();
    }
    // x[b][c][p] = sum_a K(a,b,c) Q(a,p)
    let x: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|b| {
            let mut plane = vec![0.0; n * r];
            for c in 0..n {
                for a in 0..n {
                    let v = k.get(a, b, c);
                    if v != 0.0 {
                        for p in 0..r {
                            plane[c * r + p] += v * q[(a, p)];
                        }
                    }
                }
            }
            plane
        })
        .collect();
    // y[c][p][q] = sum_b Q(b,q) x[b][c][p]
    let mut y = vec![0.0; n * r * r];
    for (b, plane) in x.iter().enumerate() {
        for c in 0..n {
            for p in 0..r {
                let v = plane[c * r + p];
                for qq in 0..r {
                    y[(c * r + p) * r + qq] += q[(b, qq)] * v;
                }
            }
        }
    }
    let mut core = vec![0.0; r * r * r];
    for c in 0..n {
        for p in 0..r {
            for qq in 0..r {
                let v = y[(c * r + p) * r + qq];
                for s in 0..r {
                    core[(p * r + qq) * r + s] += q[(c, s)] * v;
                }
            }
        }
    }
    let at = |p: usize, qq: usize, s: usize| core[(p * r + qq) * r + s];
    let mut sym = vec![0.0; r * r * r];
    for p in 0..r {
        for qq in 0..r {
            for s in 0..r {
                sym[(p * r + qq) * r + s] =
                    (at(p, qq, s) + at(p, s, qq) + at(qq, p, s) + at(qq, s, p) + at(s, p, qq) + at(s, qq, p)) / 6.0;
            }
        }
    }
    sym
}

/// Projection `P K P P` of a three-index kernel onto the retained eigenspace,
/// where P is the orthogonal projector of `inverse`.
pub fn project_kernel3(k: &Kernel3, inverse: &InverseBifunction) -> Result<ReducedTensor> {
    k.grid().ensure_same(inverse.grid(), "projected kernel")?;
    Ok(ReducedTensor { basis: inverse.basis().clone(), core: contract_all(k, inverse.basis()), scale: 1.0 })
}

/// The four order-lambda^3 reweighting coefficients.
#[derive(Debug, Clone)]
pub struct ReweightCoefficients {
    grid: TimeGrid,
    pub c0: f64,
    pub c1: DVector<f64>,
    pub c2: DMatrix<f64>,
    pub c3: ReducedTensor,
    pub sigma: ReferencePath,
    /// `C1 ds`, `C2 ds^2` and `C3 ds^3` in basis coordinates.
    reduced_c1: DVector<f64>,
    reduced_c2: DMatrix<f64>,
}

impl ReweightCoefficients {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// True when every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.c0 == 0.0
            && self.c1.iter().all(|&v| v == 0.0)
            && self.c2.iter().all(|&v| v == 0.0)
            && self.c3.core.iter().all(|&v| v == 0.0)
    }

    /// Weight of a single force path.
    pub fn weight(&self, xi: &[f64]) -> f64 {
        let v = &self.c3.basis;
        let r = v.ncols();
        let y: Vec<f64> = (0..r).map(|p| (0..xi.len()).fold(0.0, |acc, i| acc + v[(i, p)] * xi[i])).collect();
        let mut linear = 0.0;
        let mut quadratic = 0.0;
        let mut cubic = 0.0;
        for p in 0..r {
            linear += self.reduced_c1[p] * y[p];
            for q in 0..r {
                quadratic += self.reduced_c2[(p, q)] * y[p] * y[q];
                for s in 0..r {
                    cubic += self.c3.core[(p * r + q) * r + s] * y[p] * y[q] * y[s];
                }
            }
        }
        (1.0 + self.c0) + linear + quadratic + cubic
    }
}

/// Solves the order-lambda^3 normalization and moment constraints for the
/// reweighting coefficients, given the reference path entering `N2^(1)`.
pub fn reweight_coefficients(
    n21: &Kernel3,
    n31: &Kernel3,
    sigma: &ReferencePath,
    inverse: &InverseBifunction,
    hbar: f64,
) -> Result<ReweightCoefficients> {
    let grid = *inverse.grid();
    grid.ensure_same(n21.grid(), "N21 kernel")?;
    grid.ensure_same(n31.grid(), "N31 kernel")?;
    grid.ensure_same(sigma.grid(), "reference path")?;
    let ds = grid.step();
    let v = inverse.basis();
    let q = inverse.pinv_basis();
    let r = v.ncols();
    let e = &inverse.spectrum.values;

    // N21 contracted with Sigma, then taken to basis coordinates through N2^(0)+.
    let n21s = n21.contract_last(sigma.values())?;
    let qt_n21_q = q.transpose() * &n21s * &q;
    let reduced_c2 = qt_n21_q.scale(1.0 / (2.0 * hbar));
    let c0 = -0.5 * (0..r).fold(0.0, |acc, p| acc + qt_n21_q[(p, p)] * e[p]);

    let core = contract_all(n31, &q).into_iter().map(|x| x / (6.0 * hbar)).collect::<Vec<_>>();
    let reduced_c1 = DVector::from_fn(r, |p, _| {
        -3.0 * hbar * (0..r).fold(0.0, |acc, qq| acc + core[(p * r + qq) * r + qq] * e[qq])
    });

    let c1 = (v * &reduced_c1).scale(1.0 / ds);
    let c2 = (v * &reduced_c2 * v.transpose()).scale(1.0 / (ds * ds));
    let c3 = ReducedTensor { basis: v.clone(), core, scale: 1.0 / (ds * ds * ds) };
    Ok(ReweightCoefficients { grid, c0, c1, c2, c3, sigma: sigma.clone(), reduced_c1, reduced_c2 })
}

/// Replaces the ensemble weights by the perturbative density ratio.
pub fn apply_reweight(ensemble: &NoiseEnsemble, coeffs: &ReweightCoefficients) -> Result<NoiseEnsemble> {
    ensemble.grid.ensure_same(&coeffs.grid, "reweighting")?;
    let weights: Vec<f64> = ensemble
        .samples
        .par_chunks(ensemble.grid.len())
        .map(|xi| coeffs.weight(xi))
        .collect();
    if let Some(k) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFiniteState { step: k });
    }
    Ok(NoiseEnsemble { weights, ..ensemble.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Deviation from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.value - target;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY * d.signum()
        }
    }
}

/// Raw `<w g>` and self-normalized `<w g>/<w>` estimates of one observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub raw: Estimate,
    pub self_normalized: Estimate,
}

fn batch_bounds(n_samples: usize) -> Vec<(usize, usize)> {
    let b = N_BATCHES.min(n_samples);
    (0..b).map(|k| (k * n_samples / b, (k + 1) * n_samples / b)).collect()
}

/// Weighted average of `value(k)` over `n_samples` draws with batch-means
/// (raw) and delete-one-batch jackknife (self-normalized) standard errors.
/// Batch sums are reduced in a fixed order, so results do not depend on the
/// thread count.
pub fn batch_estimate(
    n_samples: usize,
    weight: impl Fn(usize) -> f64 + Sync,
    value: impl Fn(usize) -> f64 + Sync,
) -> MomentEstimate {
    let bounds = batch_bounds(n_samples);
    let sums: Vec<(f64, f64, usize)> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut swg = 0.0;
            let mut sw = 0.0;
            for k in lo..hi {
                let w = weight(k);
                swg += w * value(k);
                sw += w;
            }
            (swg, sw, hi - lo)
        })
        .collect();
    let b = sums.len() as f64;
    let total_wg = sums.iter().fold(0.0, |acc, s| acc + s.0);
    let total_w = sums.iter().fold(0.0, |acc, s| acc + s.1);
    let raw_value = total_wg / n_samples as f64;
    let means: Vec<f64> = sums.iter().map(|s| s.0 / s.2 as f64).collect();
    let mbar = means.iter().sum::<f64>() / b;
    let raw_se = (means.iter().map(|m| (m - mbar).powi(2)).sum::<f64>() / (b * (b - 1.0))).sqrt();

    let ratio = total_wg / total_w;
    let jack: Vec<f64> = sums.iter().map(|s| (total_wg - s.0) / (total_w - s.1)).collect();
    let jbar = jack.iter().sum::<f64>() / b;
    let jack_se = ((b - 1.0) / b * jack.iter().map(|j| (j - jbar).powi(2)).sum::<f64>()).sqrt();
    MomentEstimate {
        raw: Estimate { value: raw_value, std_error: raw_se },
        self_normalized: Estimate { value: ratio, std_error: jack_se },
    }
}

/// Weighted average of `g(sample)` over the ensemble.
pub fn weighted_mean(ensemble: &NoiseEnsemble, g: impl Fn(&[f64]) -> f64 + Sync) -> Result<MomentEstimate> {
    let n_samples = ensemble.n_samples();
    if n_samples < 2 {
        return Err(Error::InvalidInput("weighted estimates need at least 2 samples".into()));
    }
    Ok(batch_estimate(n_samples, |k| ensemble.weights[k], |k| g(ensemble.sample(k))))
}

pub fn weighted_moment1(ensemble: &NoiseEnsemble, i: usize) -> Result<MomentEstimate> {
    weighted_mean(ensemble, |x| x[i])
}

pub fn weighted_moment2(ensemble: &NoiseEnsemble, i: usize, j: usize) -> Result<MomentEstimate> {
    weighted_mean(ensemble, |x| x[i] * x[j])
}

pub fn weighted_moment3(ensemble: &NoiseEnsemble, i: usize, j: usize, k: usize) -> Result<MomentEstimate> {
    weighted_mean(ensemble, |x| x[i] * x[j] * x[k])
}

/// Weighted moment of an arbitrary index tuple.
pub fn weighted_moment(ensemble: &NoiseEnsemble, idx: &[usize]) -> Result<MomentEstimate> {
    weighted_mean(ensemble, |x| idx.iter().fold(1.0, |acc, &i| acc * x[i]))
}

/// Mean weight with its batch-means error.
pub fn mean_weight(ensemble: &NoiseEnsemble) -> Result<Estimate> {
    Ok(weighted_mean(ensemble, |_| 1.0)?.raw)
}

/// Gaussian moment of a zero-mean field with covariance `cov`: the sum over
/// all pairings of the indices (zero for an odd count).
pub fn wick_moment(cov: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let first = idx[0];
    let rest = &idx[1..];
    let mut total = 0.0;
    for p in 0..rest.len() {
        let remaining: Vec<usize> = rest.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &v)| v).collect();
        total += cov[(first, rest[p])] * wick_moment(cov, &remaining);
    }
    total
}
