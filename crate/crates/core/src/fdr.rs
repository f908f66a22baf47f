//! Fluctuation–dissipation checks between the noise and damping kernels.
//!
//! At zero temperature the relation is `N2 = K * gamma` with
//! `K(s, s') = int_0^inf dw/pi w cos(w (s - s'))`. Acting on a stationary
//! component `cos(2 w_n tau)` the kernel multiplies by `2 w_n`, so the exact
//! check is mode by mode on the closed-form coefficients. The time-domain
//! check truncates and discretizes K and is only approximate.

use serde::{Deserialize, Serialize};

use crate::bath::{mode_mu, mode_nu, BathSpec};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::ModeCoefficients;

#[derive(Debug, Clone, Serialize)]
pub struct FdrModeRecord {
    pub mode_index: usize,
    pub omega: f64,
    /// Coefficient of `cos(2 w_n tau)` in `N2^(0)`.
    pub noise_coefficient: f64,
    /// Coefficient of `cos(2 w_n tau)` in `gamma^(0)`.
    pub damping_coefficient: f64,
    pub ratio: f64,
    /// `|ratio - 2 w_n|`
    pub residual: f64,
    /// `|noise - 2 w_n damping|`
    pub coefficient_residual: f64,
    /// `N2^(1)` / `gamma^(1)` contact-structure ratio, absent when both vanish.
    pub contact_ratio: Option<f64>,
    /// `N2^(1)` / `gamma^(1)` memory-structure ratio, absent when both vanish.
    pub memory_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdrReport {
    pub records: Vec<FdrModeRecord>,
    pub max_residual: f64,
    /// Largest `|ratio - 2 w_n|` over the order-lambda^3 structures present.
    pub max_order3_residual: f64,
}

impl FdrReport {
    pub fn empty() -> Self {
        Self { records: Vec::new(), max_residual: 0.0, max_order3_residual: 0.0 }
    }
}

/// Mode-by-mode spectral verification of the zero-temperature FDR. Modes with
/// C1 == C2 carry no noise and are left out of the report.
pub fn fdr_spectral_check(bath: &BathSpec) -> Result<FdrReport> {
    let lam2 = bath.lambda * bath.lambda;
    let hbar = bath.hbar;
    let mut records = Vec::new();
    for (mode_index, m) in bath.modes.iter().enumerate() {
        let d = m.coupling_difference();
        if d == 0.0 {
            continue;
        }
        // equal-time value of the shared shape nu_n^2 - mu_n^2
        let shape = mode_nu(m, 0.0).powi(2) - mode_mu(m, 0.0).powi(2);
        let noise = lam2 * 2.0 * hbar * d * d * shape;
        let damping = lam2 * hbar / m.omega * d * d * shape;
        let target = 2.0 * m.omega;
        let ratio = noise / damping;
        let coeffs = ModeCoefficients::for_mode(m, hbar);
        let structure_ratio = |num: f64, den: f64| (den != 0.0).then(|| num / den);
        records.push(FdrModeRecord {
            mode_index,
            omega: m.omega,
            noise_coefficient: noise,
            damping_coefficient: damping,
            ratio,
            residual: (ratio - target).abs(),
            coefficient_residual: (noise - target * damping).abs(),
            contact_ratio: structure_ratio(coeffs.n21_contact, coeffs.gamma1_contact),
            memory_ratio: structure_ratio(coeffs.n21_memory, coeffs.gamma1_memory),
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyBath);
    }
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_order3_residual = records
        .iter()
        .flat_map(|r| [r.contact_ratio, r.memory_ratio].into_iter().flatten().map(move |q| (q - 2.0 * r.omega).abs()))
        .fold(0.0, f64::max);
    Ok(FdrReport { records, max_residual, max_order3_residual })
}

/// Truncation parameters of the time-domain FDR check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimegridFdrOptions {
    /// Upper cutoff of the frequency integral defining K.
    pub omega_max: f64,
    /// Number of trapezoid nodes on `[0, omega_max]`.
    pub n_omega: usize,
    /// The convolution runs over `[-window, t + window]`.
    pub window: f64,
}

/// Approximate time-domain check: evaluates `int ds1 K(s, s1) gamma^(0)(s1 - s')`
/// over `[-window, t + window]` with a truncated, trapezoid-discretized K and
/// returns the largest deviation from `N2^(0)(s, s')` over interior grid nodes.
///
/// K is a distribution, so the result converges only as the window and the
/// frequency resolution grow (roughly as `1/window`); callers should compare
/// it against a discretization bound rather than machine precision.
pub fn fdr_timegrid_check(bath: &BathSpec, grid: &TimeGrid, opts: &TimegridFdrOptions) -> Result<f64> {
    let coupled: Vec<_> = bath.modes.iter().filter(|m| m.coupling_difference() != 0.0).collect();
    let w_top = 2.0 * bath.max_omega();
    if !(opts.omega_max > w_top) {
        return Err(Error::BadTruncation(format!(
            "omega_max = {} must exceed twice the largest bath frequency ({w_top})",
            opts.omega_max
        )));
    }
    if opts.n_omega < 100 {
        return Err(Error::BadTruncation(format!("n_omega = {} must be at least 100", opts.n_omega)));
    }
    let t = grid.t_end();
    let length = t + 2.0 * opts.window;
    let w_low = 2.0 * bath.modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min);
    if !(opts.window > 0.0) || length * w_low < 4.0 * std::f64::consts::PI {
        return Err(Error::BadTruncation(format!(
            "window {} too short to hold two periods of the slowest component",
            opts.window
        )));
    }
    let d_omega = opts.omega_max / (opts.n_omega - 1) as f64;
    if d_omega * length > std::f64::consts::PI {
        return Err(Error::BadTruncation(format!(
            "frequency step {d_omega} does not resolve a window of length {length}"
        )));
    }
    if coupled.is_empty() || bath.lambda == 0.0 {
        return Ok(0.0);
    }

    // extended time nodes with the grid's own step
    let ds = grid.step();
    let n_ext = (length / ds).round() as usize + 1;
    let ds_ext = length / (n_ext - 1) as f64;
    let ext: Vec<f64> = (0..n_ext).map(|l| -opts.window + l as f64 * ds_ext).collect();
    let q = |l: usize| if l == 0 || l + 1 == n_ext { 0.5 * ds_ext } else { ds_ext };

    let lam2 = bath.lambda * bath.lambda;
    // gamma^(0) = sum_n g_n cos(2 w_n tau), N2^(0) = sum_n 2 w_n g_n cos(2 w_n tau)
    let damping: Vec<(f64, f64)> = coupled
        .iter()
        .map(|m| {
            let d = m.coupling_difference();
            let shape = mode_nu(m, 0.0).powi(2) - mode_mu(m, 0.0).powi(2);
            (2.0 * m.omega, lam2 * bath.hbar / m.omega * d * d * shape)
        })
        .collect();

    let nodes = grid.nodes();
    let n = nodes.len();
    // K-weights c_k = trapezoid weight * w_k / pi
    let freqs: Vec<(f64, f64)> = (0..opts.n_omega)
        .map(|k| {
            let w = k as f64 * d_omega;
            let tw = if k == 0 || k + 1 == opts.n_omega { 0.5 * d_omega } else { d_omega };
            (w, tw * w / std::f64::consts::PI)
        })
        .collect();

    // a[k][j] and b[k][j]: the s1 integral split into cos(w_k s) and sin(w_k s) parts
    let mut conv = vec![0.0; n * n];
    for &(w, c) in &freqs {
        if c == 0.0 {
            continue;
        }
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for &(w2, g) in &damping {
            let (mut icc, mut ics, mut isc, mut iss) = (0.0, 0.0, 0.0, 0.0);
            for (l, &s1) in ext.iter().enumerate() {
                let (sk, ck) = (w * s1).sin_cos();
                let (sn, cn) = (w2 * s1).sin_cos();
                let ql = q(l);
                icc += ql * ck * cn;
                ics += ql * ck * sn;
                isc += ql * sk * cn;
                iss += ql * sk * sn;
            }
            for (j, &sp) in nodes.iter().enumerate() {
                let (sn, cn) = (w2 * sp).sin_cos();
                a[j] += g * (icc * cn + ics * sn);
                b[j] += g * (isc * cn + iss * sn);
            }
        }
        for (i, &s) in nodes.iter().enumerate() {
            let (sk, ck) = (w * s).sin_cos();
            for j in 0..n {
                conv[i * n + j] += c * (ck * a[j] + sk * b[j]);
            }
        }
    }

    let mut max_dev: f64 = 0.0;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let tau = nodes[i] - nodes[j];
            let noise: f64 = damping.iter().map(|&(w2, g)| w2 * g * (w2 * tau).cos()).sum();
            max_dev = max_dev.max((conv[i * n + j] - noise).abs());
        }
    }
    Ok(max_dev)
}
