//! Bath and system specifications and the elementary per-mode propagators.
//!
//! Every bath mode contributes the pair
//!
//! ```text
//! mu_n(tau) = -sin(w_n tau) / (2 m_n w_n)
//! nu_n(tau) =  cos(w_n tau) / (2 m_n w_n)
//! ```
//!
//! from which all influence-action kernels are assembled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::grid::TimeGrid;
use crate::poly::Polynomial;

/// One harmonic oscillator of the bath with its position (`coupling_q`, C1)
/// and momentum (`coupling_p`, C2) coupling constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathMode {
    pub mass: f64,
    pub omega: f64,
    pub coupling_q: f64,
    pub coupling_p: f64,
}

impl BathMode {
    pub fn new(mass: f64, omega: f64, coupling_q: f64, coupling_p: f64) -> Result<Self> {
        let mode = Self { mass, omega, coupling_q, coupling_p };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidInput(format!("mode mass must be positive, got {}", self.mass)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidInput(format!("mode omega must be positive, got {}", self.omega)));
        }
        if !(self.coupling_q.is_finite() && self.coupling_p.is_finite()) {
            return Err(Error::InvalidInput("mode couplings must be finite".into()));
        }
        Ok(())
    }

    /// C1 - C2; every lambda^2 and lambda^3 kernel carries this factor.
    pub fn coupling_difference(&self) -> f64 {
        self.coupling_q - self.coupling_p
    }

    /// `1 / (2 m w)`, the common amplitude of `mu_n` and `nu_n`.
    pub fn amplitude(&self) -> f64 {
        1.0 / (2.0 * self.mass * self.omega)
    }
}

/// Elementary dissipation propagator of one mode.
pub fn mode_mu(mode: &BathMode, tau: f64) -> f64 {
    -(mode.omega * tau).sin() * mode.amplitude()
}

/// Elementary noise propagator of one mode.
pub fn mode_nu(mode: &BathMode, tau: f64) -> f64 {
    (mode.omega * tau).cos() * mode.amplitude()
}

/// The discrete bath together with the expansion parameter and Planck's constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub modes: Vec<BathMode>,
    pub lambda: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    1.0
}

impl BathSpec {
    pub fn new(modes: Vec<BathMode>, lambda: f64, hbar: f64) -> Result<Self> {
        let bath = Self { modes, lambda, hbar };
        bath.validate()?;
        Ok(bath)
    }

    /// Single-mode bath with `hbar = 1`.
    pub fn single(mass: f64, omega: f64, c1: f64, c2: f64, lambda: f64) -> Result<Self> {
        Self::new(vec![BathMode::new(mass, omega, c1, c2)?], lambda, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidInput("bath needs at least one mode".into()));
        }
        for m in &self.modes {
            m.validate()?;
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// True when every mode has C1 == C2, in which case all lambda^2/lambda^3 kernels vanish.
    pub fn is_degenerate(&self) -> bool {
        self.modes.iter().all(|m| m.coupling_difference() == 0.0)
    }

    pub fn max_omega(&self) -> f64 {
        self.modes.iter().map(|m| m.omega).fold(0.0, f64::max)
    }
}

/// One line of the delta-comb spectral density `I(w) = sum_n weight_n delta(w - w_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub frequency: f64,
    pub weight: f64,
}

/// Spectral weights of the lambda^2 noise kernel, one line per mode (no merging
/// of modes that share a frequency).
pub fn spectral_density(bath: &BathSpec) -> Vec<SpectralLine> {
    bath.modes
        .iter()
        .map(|m| {
            let d = m.coupling_difference();
            let weight = bath.lambda * bath.lambda * bath.hbar * d * d
                / (2.0 * m.mass * m.mass * m.omega * m.omega);
            SpectralLine { frequency: m.omega, weight }
        })
        .collect()
}

/// The Brownian particle: mass, renormalized harmonic frequency, coupling
/// function `f(x)` and potential `V(x)`.
///
/// `potential` is the full renormalized potential used by the nonlinear
/// integrator; `omega_r` is the harmonic frequency used by the linear-response
/// (boundary-value and Green's function) solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub mass: f64,
    pub omega_r: f64,
    #[serde(default = "Polynomial::identity")]
    pub coupling: Polynomial,
    #[serde(default)]
    pub potential: Option<Polynomial>,
}

impl SystemSpec {
    /// Harmonic particle with `f(x) = x` and `V(x) = M w^2 x^2 / 2`.
    pub fn harmonic(mass: f64, omega_r: f64) -> Result<Self> {
        let s = Self { mass, omega_r, coupling: Polynomial::identity(), potential: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_coupling(mut self, coupling: Polynomial) -> Result<Self> {
        self.coupling = coupling;
        self.validate()?;
        Ok(self)
    }

    pub fn with_potential(mut self, potential: Polynomial) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidInput(format!("system mass must be positive, got {}", self.mass)));
        }
        if !(self.omega_r.is_finite() && self.omega_r > 0.0) {
            return Err(Error::InvalidInput(format!("omega_r must be positive, got {}", self.omega_r)));
        }
        if self.coupling.is_zero() {
            return Err(Error::InvalidInput("coupling function needs a nonzero coefficient".into()));
        }
        let finite = |p: &Polynomial| p.coefficients().iter().all(|c| c.is_finite());
        if !finite(&self.coupling) || !self.potential.as_ref().is_none_or(finite) {
            return Err(Error::InvalidInput("polynomial coefficients must be finite".into()));
        }
        Ok(())
    }

    /// The renormalized potential; defaults to `M w^2 x^2 / 2`.
    pub fn potential(&self) -> Polynomial {
        self.potential
            .clone()
            .unwrap_or_else(|| Polynomial::new(vec![0.0, 0.0, 0.5 * self.mass * self.omega_r * self.omega_r]))
    }
}

/// `mu_n`, `nu_n` tabulated on grid index differences so that every kernel
/// built from them is exactly stationary on the grid.
#[derive(Debug, Clone)]
pub(crate) struct ModeTable {
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl ModeTable {
    pub(crate) fn new(mode: &BathMode, grid: &TimeGrid) -> Self {
        let ds = grid.step();
        let n = grid.len();
        let mu = (0..n).map(|k| mode_mu(mode, k as f64 * ds)).collect();
        let nu = (0..n).map(|k| mode_nu(mode, k as f64 * ds)).collect();
        Self { mu, nu }
    }

    /// `mu_n(s_i - s_j)`.
    #[inline]
    pub(crate) fn mu(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.mu[i - j]
        } else {
            -self.mu[j - i]
        }
    }

    /// `nu_n(s_i - s_j)`.
    #[inline]
    pub(crate) fn nu(&self, i: usize, j: usize) -> f64 {
        self.nu[i.abs_diff(j)]
    }
}
