//! Trajectories of the nonlinear Langevin equation.
//!
//! The perturbative route (f(x) = x) builds the boundary-value functions
//! `u1`, `u2` of the memory-dressed oscillator, assembles retarded and
//! advanced Green's functions from them and evaluates `x = x^(0) + x^(1)`.
//! The direct route marches the full equation with a history integral over
//! `[0, s]` for any polynomial coupling.
//!
//! The two use different memory conventions (fixed window `[0, t]` with the
//! `J` kernels versus `[0, s]` with the damping kernel and `f'(x) xdot`), so
//! they agree only up to the surface terms that separate them.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, SystemSpec};
use crate::error::{Error, Result};
use crate::grid::{theta_idx, TimeGrid};
use crate::kernels::{damping_gamma0, damping_gamma1, Kernel2, Kernel3, ReferencePath};
use crate::noise::{batch_estimate, Estimate, NoiseEnsemble};

/// Solver tolerances for the boundary-value construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpOptions {
    /// Largest accepted sup-norm of `u1`, `u2` (unit boundary data); beyond
    /// it the problem is reported as near singular.
    pub max_growth: f64,
    /// Relative floor for the Wronskian and boundary derivatives.
    pub denominator_tolerance: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self { max_growth: 1e3, denominator_tolerance: 1e-10 }
    }
}

/// Homogeneous solutions with `u1(0) = 1, u1(t) = 0` and `u2(0) = 0, u2(t) = 1`.
#[derive(Debug, Clone)]
pub struct UFunctions {
    grid: TimeGrid,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub du1: Vec<f64>,
    pub du2: Vec<f64>,
    /// `W(s) = du1(s) u2(s) - u1(s) du2(s)`
    pub wronskian: Vec<f64>,
    tolerance: f64,
}

impl UFunctions {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
}

/// Second-order derivative on the grid: central differences inside,
/// one-sided three-point formulas at the ends.
pub fn grid_derivative(u: &[f64], ds: f64) -> Vec<f64> {
    let n = u.len();
    let mut du = vec![0.0; n];
    for i in 1..n - 1 {
        du[i] = (u[i + 1] - u[i - 1]) / (2.0 * ds);
    }
    du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * ds);
    du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * ds);
    du
}

/// Solves a lower-Hessenberg system (`a[i][j] = 0` for `j > i + 1`) for
/// several right-hand sides by partial-pivoting elimination in reversed order.
fn solve_lower_hessenberg(a: &[Vec<f64>], rhs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    // reversed system is upper Hessenberg
    let mut b: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[n - 1 - i][n - 1 - j]).collect()).collect();
    let mut r: Vec<Vec<f64>> = (0..n).map(|i| rhs.iter().map(|v| v[n - 1 - i]).collect()).collect();
    for k in 0..n {
        if k + 1 < n && b[k + 1][k].abs() > b[k][k].abs() {
            b.swap(k, k + 1);
            r.swap(k, k + 1);
        }
        let pivot = b[k][k];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        if k + 1 < n && b[k + 1][k] != 0.0 {
            let f = b[k + 1][k] / pivot;
            let (top, bottom) = b.split_at_mut(k + 1);
            for (x, y) in bottom[0][k..].iter_mut().zip(&top[k][k..]) {
                *x -= f * y;
            }
            let (rt, rb) = r.split_at_mut(k + 1);
            for (x, y) in rb[0].iter_mut().zip(&rt[k]) {
                *x -= f * y;
            }
        }
    }
    let m = rhs.len();
    let mut x = vec![vec![0.0; m]; n];
    for k in (0..n).rev() {
        for c in 0..m {
            let mut acc = r[k][c];
            for j in k + 1..n {
                acc -= b[k][j] * x[j][c];
            }
            x[k][c] = acc / b[k][k];
        }
    }
    Some((0..m).map(|c| (0..n).map(|i| x[n - 1 - i][c]).collect()).collect())
}

pub fn solve_u_functions(j0: &Kernel2, system: &SystemSpec, grid: &TimeGrid) -> Result<UFunctions> {
    solve_u_functions_with(j0, system, grid, &BvpOptions::default())
}

/// Solves `M u'' + M W^2 u + int_0^t J0(s, s') u(s') ds' = 0` with pinned
/// boundary rows, central differences and trapezoid memory quadrature.
pub fn solve_u_functions_with(j0: &Kernel2, system: &SystemSpec, grid: &TimeGrid, opts: &BvpOptions) -> Result<UFunctions> {
    grid.ensure_same(j0.grid(), "J0 kernel")?;
    let n = grid.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("boundary-value solve needs at least 5 nodes, got {n}")));
    }
    let ds = grid.step();
    let m = system.mass;
    let w2 = system.omega_r * system.omega_r;
    let wq = grid.trapezoid_weights();
    let scale = ds * ds / m;
    let mut a = vec![vec![0.0; n]; n];
    a[0][0] = 1.0;
    a[n - 1][n - 1] = 1.0;
    for i in 1..n - 1 {
        let row = &mut a[i];
        for l in 0..=i {
            row[l] = scale * j0.get(i, l) * wq[l];
        }
        row[i - 1] += 1.0;
        row[i + 1] += 1.0;
        row[i] += -2.0 + w2 * ds * ds;
    }
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let mut e1 = vec![0.0; n];
    e1[n - 1] = 1.0;
    let sol = solve_lower_hessenberg(&a, &[e0, e1]).ok_or(Error::NearSingularBvp { condition: f64::INFINITY })?;
    let (mut u1, mut u2) = (sol[0].clone(), sol[1].clone());
    let growth = u1.iter().chain(&u2).fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(growth <= opts.max_growth) {
        return Err(Error::NearSingularBvp { condition: growth });
    }
    u1[0] = 1.0;
    u1[n - 1] = 0.0;
    u2[0] = 0.0;
    u2[n - 1] = 1.0;
    let du1 = grid_derivative(&u1, ds);
    let du2 = grid_derivative(&u2, ds);
    let wronskian: Vec<f64> = (0..n).map(|i| du1[i] * u2[i] - u1[i] * du2[i]).collect();
    Ok(UFunctions { grid: *grid, u1, u2, du1, du2, wronskian, tolerance: opts.denominator_tolerance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenKind {
    Retarded,
    Advanced,
}

#[derive(Debug, Clone)]
pub struct GreenFunction {
    grid: TimeGrid,
    values: DMatrix<f64>,
    kind: GreenKind,
}

impl GreenFunction {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> GreenKind {
        self.kind
    }

    /// `sum_j w_j G(s_i, s_j) f(s_j)` with trapezoid weights.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if f.len() != n {
            return Err(Error::GridMismatch(format!("source of length {} on {n} nodes", f.len())));
        }
        let wf: Vec<f64> = self.grid.trapezoid_weights().iter().zip(f).map(|(w, v)| w * v).collect();
        Ok((0..n)
            .into_par_iter()
            .map(|i| {
                let (lo, hi) = match self.kind {
                    GreenKind::Retarded => (0, i),
                    GreenKind::Advanced => (i, n - 1),
                };
                (lo..=hi).fold(0.0, |acc, j| acc + self.values[(i, j)] * wf[j])
            })
            .collect())
    }
}

fn check_wronskian(u: &UFunctions) -> Result<()> {
    let scale = (0..u.u1.len()).fold(0.0f64, |acc, i| acc.max((u.du1[i] * u.u2[i]).abs() + (u.u1[i] * u.du2[i]).abs()));
    for (node, &w) in u.wronskian.iter().enumerate() {
        if !(w.abs() > u.tolerance * scale) {
            return Err(Error::DenominatorUnderflow { node, value: w.abs() });
        }
    }
    Ok(())
}

fn green(u: &UFunctions, mass: f64, kind: GreenKind) -> Result<GreenFunction> {
    check_wronskian(u)?;
    let n = u.grid.len();
    let sign = match kind {
        GreenKind::Retarded => 1.0,
        GreenKind::Advanced => -1.0,
    };
    let values = DMatrix::from_fn(n, n, |i, j| {
        let th = match kind {
            GreenKind::Retarded => theta_idx(i, j),
            GreenKind::Advanced => theta_idx(j, i),
        };
        if th == 0.0 {
            return 0.0;
        }
        sign / mass * (u.u1[i] * u.u2[j] - u.u1[j] * u.u2[i]) / u.wronskian[j] * th
    });
    Ok(GreenFunction { grid: u.grid, values, kind })
}

/// `G_ret(s, s') = (1/M) [u1(s) u2(s') - u1(s') u2(s)] / W(s') theta(s - s')`
pub fn green_retarded(u: &UFunctions, mass: f64) -> Result<GreenFunction> {
    green(u, mass, GreenKind::Retarded)
}

/// `G_adv(s, s') = -(1/M) [u1(s) u2(s') - u1(s') u2(s)] / W(s') theta(s' - s)`
pub fn green_advanced(u: &UFunctions, mass: f64) -> Result<GreenFunction> {
    green(u, mass, GreenKind::Advanced)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryData {
    Initial { x0: f64, p0: f64 },
    Final { xt: f64, pt: f64 },
}

impl BoundaryData {
    fn green_kind(&self) -> GreenKind {
        match self {
            BoundaryData::Initial { .. } => GreenKind::Retarded,
            BoundaryData::Final { .. } => GreenKind::Advanced,
        }
    }

    /// Final data `(x(t), M xdot(t))` read off a trajectory.
    pub fn final_from(x: &[f64], grid: &TimeGrid, mass: f64) -> Self {
        let dx = grid_derivative(x, grid.step());
        BoundaryData::Final { xt: x[x.len() - 1], pt: mass * dx[dx.len() - 1] }
    }
}

/// Homogeneous part of `x^(0)` matching the boundary data.
pub fn homogeneous_solution(u: &UFunctions, boundary: &BoundaryData, mass: f64) -> Result<Vec<f64>> {
    let n = u.u1.len();
    let dscale = u.du1.iter().chain(&u.du2).fold(0.0f64, |acc, v| acc.max(v.abs()));
    let check = |node: usize, v: f64| {
        if v.abs() > u.tolerance * dscale {
            Ok(())
        } else {
            Err(Error::DenominatorUnderflow { node, value: v.abs() })
        }
    };
    match *boundary {
        BoundaryData::Initial { x0, p0 } => {
            let d2 = u.du2[0];
            check(0, d2)?;
            let r = u.du1[0] / d2;
            Ok((0..n).map(|i| x0 * (u.u1[i] - r * u.u2[i]) + p0 / mass * u.u2[i] / d2).collect())
        }
        BoundaryData::Final { xt, pt } => {
            let d1 = u.du1[n - 1];
            check(n - 1, d1)?;
            let r = u.du2[n - 1] / d1;
            Ok((0..n).map(|i| xt * (u.u2[i] - r * u.u1[i]) + pt / mass * u.u1[i] / d1).collect())
        }
    }
}

/// Zeroth-order trajectory: homogeneous part plus `G xi`.
pub fn solve_x0(u: &UFunctions, g: &GreenFunction, boundary: &BoundaryData, xi: &[f64], mass: f64) -> Result<Vec<f64>> {
    u.grid.ensure_same(&g.grid, "Green's function")?;
    if boundary.green_kind() != g.kind {
        return Err(Error::InvalidInput(format!(
            "{:?} boundary data needs the {:?} Green's function",
            boundary,
            boundary.green_kind()
        )));
    }
    let h = homogeneous_solution(u, boundary, mass)?;
    let forced = g.apply(xi)?;
    Ok(h.iter().zip(&forced).map(|(a, b)| a + b).collect())
}

/// `x^(1)(s) = -int G(s, s') J1(s', s'', s''') x0(s'') x0(s''')`.
pub fn solve_x1(g: &GreenFunction, j1: &Kernel3, x0: &[f64]) -> Result<Vec<f64>> {
    g.grid.ensure_same(j1.grid(), "J1 kernel")?;
    let source = j1.contract_last_two(x0, x0)?;
    Ok(g.apply(&source)?.into_iter().map(|v| -v).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    pub max_iterations: usize,
    /// Stop once successive iterates differ by less than this (sup norm,
    /// relative to the iterate).
    pub tolerance: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { max_iterations: 60, tolerance: 1e-15 }
    }
}

/// Fixed point of `x = x0 - G J1(x, x)`, the discretized equation with the
/// order-lambda^3 memory term kept to all orders in the trajectory.
pub fn solve_picard(g: &GreenFunction, j1: &Kernel3, x0: &[f64], opts: &PicardOptions) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    for step in 0..opts.max_iterations {
        let correction = solve_x1(g, j1, &x)?;
        let next: Vec<f64> = x0.iter().zip(&correction).map(|(a, b)| a + b).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        let diff = next.iter().zip(&x).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        let size = next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        x = next;
        if diff <= opts.tolerance * size.max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
    }
    Err(Error::InvalidInput(format!("Picard iteration did not converge in {} steps", opts.max_iterations)))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySolution {
    #[serde(skip)]
    grid: TimeGrid,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub boundary: BoundaryData,
    pub sample_index: Option<usize>,
}

impl TrajectorySolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `x^(0) + x^(1)`
    pub fn total(&self) -> Vec<f64> {
        self.x0.iter().zip(&self.x1).map(|(a, b)| a + b).collect()
    }
}

/// Shared read-only pieces of the perturbative solution for f(x) = x.
#[derive(Debug, Clone)]
pub struct PerturbativeSolver {
    pub u: UFunctions,
    pub retarded: GreenFunction,
    pub advanced: GreenFunction,
    pub j1: Kernel3,
    mass: f64,
}

impl PerturbativeSolver {
    pub fn new(j0: &Kernel2, j1: Kernel3, system: &SystemSpec, grid: &TimeGrid) -> Result<Self> {
        Self::with_options(j0, j1, system, grid, &BvpOptions::default())
    }

    pub fn with_options(j0: &Kernel2, j1: Kernel3, system: &SystemSpec, grid: &TimeGrid, opts: &BvpOptions) -> Result<Self> {
        grid.ensure_same(j1.grid(), "J1 kernel")?;
        let u = solve_u_functions_with(j0, system, grid, opts)?;
        let retarded = green_retarded(&u, system.mass)?;
        let advanced = green_advanced(&u, system.mass)?;
        Ok(Self { u, retarded, advanced, j1, mass: system.mass })
    }

    pub fn green(&self, kind: GreenKind) -> &GreenFunction {
        match kind {
            GreenKind::Retarded => &self.retarded,
            GreenKind::Advanced => &self.advanced,
        }
    }

    pub fn solve(&self, boundary: &BoundaryData, xi: &[f64], sample_index: Option<usize>) -> Result<TrajectorySolution> {
        let g = self.green(boundary.green_kind());
        let x0 = solve_x0(&self.u, g, boundary, xi, self.mass)?;
        let x1 = solve_x1(g, &self.j1, &x0)?;
        Ok(TrajectorySolution { grid: *self.u.grid(), x0, x1, boundary: *boundary, sample_index })
    }

    /// The all-orders fixed point of the same discrete equation.
    pub fn solve_iterative(&self, boundary: &BoundaryData, xi: &[f64], opts: &PicardOptions) -> Result<Vec<f64>> {
        let g = self.green(boundary.green_kind());
        let x0 = solve_x0(&self.u, g, boundary, xi, self.mass)?;
        solve_picard(g, &self.j1, &x0, opts)
    }

    /// One solution per ensemble sample, in sample order.
    pub fn solve_ensemble(&self, boundary: &BoundaryData, ensemble: &NoiseEnsemble) -> Result<Vec<TrajectorySolution>> {
        self.u.grid.ensure_same(ensemble.grid(), "noise ensemble")?;
        (0..ensemble.n_samples())
            .into_par_iter()
            .map(|k| self.solve(boundary, ensemble.sample(k), Some(k)))
            .collect()
    }
}

/// How the reference path inside `gamma^(1)` is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaPolicy {
    Constant { value: f64 },
    /// `f` applied to the noiseless trajectory with the lambda^2 damping only.
    #[default]
    Frozen,
    /// Re-solve `iterations` times, each time with `f` of the previous trajectory.
    Picard { iterations: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct NonlinearTrajectory {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Reference path used in the final march.
    pub sigma: Vec<f64>,
}

/// Direct integrator of
/// `M x'' + V'(x) + int_0^s gamma(s, s'; Sigma) f'(x(s)) f'(x(s')) x'(s') ds' = f'(x(s)) xi(s)`.
#[derive(Debug, Clone)]
pub struct NonlinearIntegrator {
    system: SystemSpec,
    bath: BathSpec,
    grid: TimeGrid,
    gamma0: Kernel2,
}

impl NonlinearIntegrator {
    pub fn new(system: &SystemSpec, bath: &BathSpec, grid: &TimeGrid) -> Result<Self> {
        system.validate()?;
        bath.validate()?;
        Ok(Self { system: system.clone(), bath: bath.clone(), grid: *grid, gamma0: damping_gamma0(bath, grid) })
    }

    /// `f(x)` along the noiseless trajectory marched with the lambda^2
    /// damping only: the frozen reference path.
    pub fn frozen_reference(&self, x0: f64, p0: f64) -> Result<ReferencePath> {
        let n = self.grid.len();
        let (x, _) = self.march(&self.gamma0, &vec![0.0; n], x0, p0)?;
        ReferencePath::from_trajectory(self.grid, &self.system.coupling, &x)
    }

    pub fn integrate(&self, policy: &SigmaPolicy, xi: &[f64], x0: f64, p0: f64) -> Result<NonlinearTrajectory> {
        let n = self.grid.len();
        if xi.len() != n {
            return Err(Error::GridMismatch(format!("noise path of length {} on {n} nodes", xi.len())));
        }
        let f = &self.system.coupling;
        let sigma = match *policy {
            SigmaPolicy::Constant { value } => vec![value; n],
            SigmaPolicy::Frozen | SigmaPolicy::Picard { .. } => self.frozen_reference(x0, p0)?.values().to_vec(),
        };
        let rounds = match *policy {
            SigmaPolicy::Picard { iterations } => iterations.max(1),
            _ => 1,
        };
        let mut sigma = sigma;
        let mut result = None;
        for round in 0..rounds {
            let path = ReferencePath::new(self.grid, sigma.clone())?;
            let gamma = self.gamma0.add(&damping_gamma1(&self.bath, &self.grid, &path)?)?;
            let (x, v) = self.march(&gamma, xi, x0, p0)?;
            if round + 1 < rounds {
                sigma = x.iter().map(|&val| f.eval(val)).collect();
            }
            result = Some((x, v));
        }
        let (x, v) = result.expect("at least one round");
        Ok(NonlinearTrajectory { x, v, sigma })
    }

    /// Heun predictor-corrector; the history integral uses the trapezoid
    /// rule over `[0, s_i]`, with the predicted state at the new node.
    fn march(&self, gamma: &Kernel2, xi: &[f64], x0: f64, p0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.grid.len();
        let ds = self.grid.step();
        let m = self.system.mass;
        let f = &self.system.coupling;
        let df = f.derivative();
        let dv = self.system.potential().derivative();
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        // history terms f'(x_l) v_l
        let mut h = vec![0.0; n];
        x[0] = x0;
        v[0] = p0 / m;
        h[0] = df.eval(x0) * v[0];
        let accel = |i: usize, x_now: f64, h: &[f64], h_now: f64| -> f64 {
            let dfx = df.eval(x_now);
            let memory = if i == 0 {
                0.0
            } else {
                let mut acc = 0.5 * gamma.get(i, 0) * h[0];
                for l in 1..i {
                    acc += gamma.get(i, l) * h[l];
                }
                (acc + 0.5 * gamma.get(i, i) * h_now) * ds
            };
            (dfx * xi[i] - dv.eval(x_now) - dfx * memory) / m
        };
        let mut a = accel(0, x0, &h, h[0]);
        for i in 0..n - 1 {
            let xp = x[i] + ds * v[i];
            let vp = v[i] + ds * a;
            let ap = accel(i + 1, xp, &h, df.eval(xp) * vp);
            let xn = x[i] + 0.5 * ds * (v[i] + vp);
            let vn = v[i] + 0.5 * ds * (a + ap);
            if !xn.is_finite() || !vn.is_finite() || xn.abs() > 1e150 || vn.abs() > 1e150 {
                return Err(Error::NonFiniteState { step: i + 1 });
            }
            x[i + 1] = xn;
            v[i + 1] = vn;
            h[i + 1] = df.eval(xn) * vn;
            a = accel(i + 1, xn, &h, h[i + 1]);
        }
        Ok((x, v))
    }
}

/// Weighted ensemble moments of trajectories, self-normalized, with
/// jackknife errors over contiguous batches.
#[derive(Debug, Clone)]
pub struct EnsembleStatistics {
    pub mean: Vec<Estimate>,
    /// `<x(s_i) x(s_j)>`
    pub correlation: DMatrix<f64>,
    pub correlation_error: DMatrix<f64>,
    /// `<x(s_i) x(s_j)> - <x(s_i)><x(s_j)>`
    pub covariance: DMatrix<f64>,
}

pub fn ensemble_statistics(solutions: &[TrajectorySolution], weights: &[f64]) -> Result<EnsembleStatistics> {
    let Some(first) = solutions.first() else {
        return Err(Error::InvalidInput("ensemble statistics need at least 2 solutions".into()));
    };
    for s in solutions {
        first.grid.ensure_same(&s.grid, "ensemble member")?;
    }
    let paths: Vec<Vec<f64>> = solutions.iter().map(|s| s.total()).collect();
    path_statistics(first.grid(), &paths, weights)
}

/// Same statistics for bare paths on a grid.
pub fn path_statistics(grid: &TimeGrid, paths: &[Vec<f64>], weights: &[f64]) -> Result<EnsembleStatistics> {
    let n = grid.len();
    if paths.len() < 2 {
        return Err(Error::InvalidInput("ensemble statistics need at least 2 solutions".into()));
    }
    if weights.len() != paths.len() {
        return Err(Error::InvalidInput(format!("{} weights for {} trajectories", weights.len(), paths.len())));
    }
    if let Some(p) = paths.iter().find(|p| p.len() != n) {
        return Err(Error::GridMismatch(format!("trajectory of length {} on {n} nodes", p.len())));
    }
    let count = paths.len();
    let w = |k: usize| weights[k];
    let mean: Vec<Estimate> = (0..n)
        .into_par_iter()
        .map(|i| batch_estimate(count, w, |k| paths[k][i]).self_normalized)
        .collect();
    let entries: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|e| {
            let (i, j) = (e / n, e % n);
            let est = batch_estimate(count, w, |k| paths[k][i] * paths[k][j]).self_normalized;
            (est.value, est.std_error)
        })
        .collect();
    let correlation = DMatrix::from_fn(n, n, |i, j| entries[i * n + j].0);
    let correlation_error = DMatrix::from_fn(n, n, |i, j| entries[i * n + j].1);
    let covariance = DMatrix::from_fn(n, n, |i, j| correlation[(i, j)] - mean[i].value * mean[j].value);
    Ok(EnsembleStatistics { mean, correlation, correlation_error, covariance })
}
