//! Command-line front end: `qbm <subcommand> --config <path> [--out <dir>] [--threads N]`.

pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::fdr::{fdr_spectral_check, fdr_timegrid_check, FdrReport};
use crate::kernels::*;
use crate::langevin::{
    path_statistics, BoundaryData, NonlinearIntegrator, PerturbativeSolver, SigmaPolicy,
};
use crate::noise::*;

use config::{ConfigError, OutputFormat, RunConfig, SimulationMethod};
use output::ArtifactWriter;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "QBM_OUT_DIR";

pub mod exit_code {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const NEAR_SINGULAR_BVP: i32 = 4;
    pub const DENOMINATOR_UNDERFLOW: i32 = 5;
    pub const NON_FINITE_STATE: i32 = 6;
    pub const BAD_TRUNCATION: i32 = 7;
    pub const GRID_MISMATCH: i32 = 8;
    pub const NOT_SYMMETRIC: i32 = 9;
    pub const IO: i32 = 10;
    pub const CHECKS_FAILED: i32 = 11;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} validation check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use exit_code::*;
        match self {
            CliError::Config(ConfigError::Parse(_)) => PARSE,
            CliError::Config(ConfigError::Io { .. }) => IO,
            CliError::Config(ConfigError::Validation { .. }) => VALIDATION,
            CliError::Model(e) => match e {
                Error::NearSingularBvp { .. } => NEAR_SINGULAR_BVP,
                Error::DenominatorUnderflow { .. } => DENOMINATOR_UNDERFLOW,
                Error::NonFiniteState { .. } => NON_FINITE_STATE,
                Error::BadTruncation(_) => BAD_TRUNCATION,
                Error::GridMismatch(_) => GRID_MISMATCH,
                Error::NotSymmetric { .. } => NOT_SYMMETRIC,
                Error::InvalidInput(_) | Error::EmptyBath => VALIDATION,
            },
            CliError::Io(_) => IO,
            CliError::ChecksFailed(_) => CHECKS_FAILED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ClapSubcommand)]
pub enum Subcommand {
    /// Write every influence-action kernel on the configured grid.
    Kernels,
    /// Spectral (and optionally time-domain) fluctuation-dissipation report.
    Fdr,
    /// Sample the stochastic force and report its weighted moments.
    Noise,
    /// Solve trajectories for every noise sample.
    Simulate,
    /// Run the property suite; nonzero exit on any failure.
    Validate,
}

#[derive(Debug, Parser)]
#[command(name = "qbm", version, about = "Quantum Brownian motion with nonlinear bath coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, ClapSubcommand)]
enum Command {
    Kernels(RunArgs),
    Fdr(RunArgs),
    Noise(RunArgs),
    Simulate(RunArgs),
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config and QBM_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 = automatic (overrides the config).
    #[arg(long)]
    threads: Option<usize>,
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit_code::PARSE } else { exit_code::OK };
        }
    };
    let (sub, args) = match cli.command {
        Command::Kernels(a) => (Subcommand::Kernels, a),
        Command::Fdr(a) => (Subcommand::Fdr, a),
        Command::Noise(a) => (Subcommand::Noise, a),
        Command::Simulate(a) => (Subcommand::Simulate, a),
        Command::Validate(a) => (Subcommand::Validate, a),
    };
    let result = RunConfig::from_path(&args.config).map_err(CliError::from).and_then(|mut config| {
        if let Some(t) = args.threads {
            config.threads = t;
        }
        let env_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        let dir = args.out.or(env_dir).unwrap_or_else(|| config.outputs.directory.clone());
        run_with_threads(sub, &config, &dir)
    });
    match result {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            exit_code::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Runs inside a dedicated pool honouring `config.threads` (0 = automatic).
pub fn run_with_threads(sub: Subcommand, config: &RunConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    pool.install(|| run_subcommand(sub, config, out_dir))
}

pub fn run_subcommand(sub: Subcommand, config: &RunConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let mut writer = ArtifactWriter::new(out_dir, config.hash(), config.noise.seed)?;
    let mut warnings = Vec::new();
    match sub {
        Subcommand::Kernels => kernels(config, &mut writer)?,
        Subcommand::Fdr => fdr(config, &mut writer, &mut warnings)?,
        Subcommand::Noise => noise(config, &mut writer)?,
        Subcommand::Simulate => simulate(config, &mut writer)?,
        Subcommand::Validate => {
            let sigma = reference_path(config)?;
            let report = validate::run_suite(config, &sigma);
            writer.json("validation.json", &report)?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: value {:e} (threshold {:e}) {}", c.name, c.value, c.threshold, c.detail);
            }
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed));
            }
        }
    }
    Ok(RunSummary { files: writer.written().to_vec(), warnings })
}

/// The reference path entering `N2^(1)` and `gamma^(1)` under the configured policy.
pub fn reference_path(config: &RunConfig) -> Result<ReferencePath, Error> {
    let grid = config.time_grid();
    match config.noise.sigma_policy {
        SigmaPolicy::Constant { value } => ReferencePath::constant(grid, value),
        SigmaPolicy::Frozen | SigmaPolicy::Picard { .. } => {
            NonlinearIntegrator::new(&config.system, &config.bath, &grid)?
                .frozen_reference(config.simulate.x0, config.simulate.p0)
        }
    }
}

#[derive(Serialize)]
struct KernelSummary {
    n_points: usize,
    t_end: f64,
    spectral_lines: Vec<crate::bath::SpectralLine>,
    max_abs: std::collections::BTreeMap<&'static str, f64>,
}

fn kernels(config: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let grid = config.time_grid();
    let bath = &config.bath;
    let set = KernelSet::assemble(bath, &grid);
    let sigma = reference_path(config)?;
    let gamma1 = damping_gamma1(bath, &grid, &sigma)?;
    let n21s = set.n21.contract_last(sigma.values())?;
    let matrices: [(&'static str, &DMatrix<f64>); 6] = [
        ("n20", set.n20.values()),
        ("gamma0", set.gamma0.values()),
        ("mu", set.mu.values()),
        ("j0", set.j0.values()),
        ("gamma1", gamma1.values()),
        ("n21_sigma", &n21s),
    ];
    let mut max_abs = std::collections::BTreeMap::new();
    if config.wants(OutputFormat::Csv) {
        for (name, m) in matrices {
            w.csv_matrix(&format!("{name}.csv"), m)?;
        }
        w.csv_table("sigma.csv", &["s", "sigma"], grid.nodes().into_iter().zip(sigma.values()).map(|(s, v)| vec![s, *v]))?;
        for (name, k) in [("j1", &set.j1), ("n21", &set.n21), ("n31", &set.n31)] {
            w.csv_kernel3(&format!("{name}.csv"), k)?;
        }
    }
    for (name, m) in matrices {
        max_abs.insert(name, m.amax());
    }
    for (name, k) in [("j1", &set.j1), ("n21", &set.n21), ("n31", &set.n31)] {
        max_abs.insert(name, k.max_abs());
    }
    if config.wants(OutputFormat::Json) {
        let summary = KernelSummary {
            n_points: grid.len(),
            t_end: grid.t_end(),
            spectral_lines: crate::bath::spectral_density(bath),
            max_abs,
        };
        w.json("kernels.json", &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FdrOutput {
    spectral: FdrReport,
    timegrid_max_deviation: Option<f64>,
}

fn fdr(config: &RunConfig, w: &mut ArtifactWriter, warnings: &mut Vec<String>) -> Result<(), CliError> {
    let spectral = match fdr_spectral_check(&config.bath) {
        Ok(r) => r,
        Err(Error::EmptyBath) => {
            warnings.push("every mode has C1 == C2: the noise and damping kernels vanish, report is empty".into());
            FdrReport::empty()
        }
        Err(e) => return Err(e.into()),
    };
    let timegrid_max_deviation = match &config.fdr {
        Some(opts) => Some(fdr_timegrid_check(&config.bath, &config.time_grid(), opts)?),
        None => None,
    };
    w.json("fdr_report.json", &FdrOutput { spectral, timegrid_max_deviation })?;
    Ok(())
}

/// Gaussian ensemble, reweighted when configured.
fn build_ensemble(config: &RunConfig) -> Result<(NoiseEnsemble, Option<ReweightCoefficients>, InverseBifunction), Error> {
    let grid = config.time_grid();
    let bath = &config.bath;
    let n20 = noise_n20(bath, &grid);
    let factor = factor_covariance(&n20, bath.hbar, config.noise.clip)?;
    let ens = gaussian_sample(&factor, config.noise.n_samples, config.noise.seed)?;
    let inv = inverse_bifunction(&n20, bath.hbar, config.noise.clip)?;
    if !config.noise.reweight {
        return Ok((ens, None, inv));
    }
    let sigma = reference_path(config)?;
    let coeffs = reweight_coefficients(&noise_n21(bath, &grid), &noise_n31(bath, &grid), &sigma, &inv, bath.hbar)?;
    Ok((apply_reweight(&ens, &coeffs)?, Some(coeffs), inv))
}

#[derive(Serialize)]
struct NodeMoment {
    s: f64,
    estimate: MomentEstimate,
    oracle: f64,
}

#[derive(Serialize)]
struct NoiseReport {
    n_samples: usize,
    rank: usize,
    clip: f64,
    reweighted: bool,
    c0: f64,
    mean_weight: Estimate,
    min_weight: f64,
    first_moment: Vec<NodeMoment>,
    /// equal-time `<xi^2>` against `hbar (N20 + P N21(Sigma) P)`
    second_moment: Vec<NodeMoment>,
    /// equal-time `<xi^3>` against `hbar^2 P N3 P P P`
    third_moment: Vec<NodeMoment>,
}

fn noise(config: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let grid = config.time_grid();
    let bath = &config.bath;
    let (ens, coeffs, inv) = build_ensemble(config)?;
    let n = grid.len();
    if config.wants(OutputFormat::Csv) {
        let mut columns = vec!["weight".to_string()];
        columns.extend((0..n).map(|i| format!("xi{i}")));
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        w.csv_table(
            "ensemble.csv",
            &cols,
            (0..ens.n_samples()).map(|k| std::iter::once(ens.weights()[k]).chain(ens.sample(k).iter().copied()).collect()),
        )?;
    }
    if config.wants(OutputFormat::Json) {
        let nodes = grid.nodes();
        let p = inv.projector();
        let mut cov = noise_n20(bath, &grid).values().scale(bath.hbar);
        let mut third = vec![0.0; n];
        if coeffs.is_some() {
            let sigma = reference_path(config)?;
            let n21s = noise_n21(bath, &grid).contract_last(sigma.values())?;
            cov += (&p * n21s * &p).scale(bath.hbar);
            let proj = project_kernel3(&noise_n31(bath, &grid), &inv)?;
            for (i, t) in third.iter_mut().enumerate() {
                *t = bath.hbar * bath.hbar * proj.get(i, i, i);
            }
        }
        let per_node = |order: usize, oracle: &dyn Fn(usize) -> f64| -> Result<Vec<NodeMoment>, Error> {
            (0..n)
                .map(|i| Ok(NodeMoment { s: nodes[i], estimate: weighted_moment(&ens, &vec![i; order])?, oracle: oracle(i) }))
                .collect()
        };
        let report = NoiseReport {
            n_samples: ens.n_samples(),
            rank: ens.rank(),
            clip: ens.clip(),
            reweighted: coeffs.is_some(),
            c0: coeffs.as_ref().map_or(0.0, |c| c.c0),
            mean_weight: mean_weight(&ens)?,
            min_weight: ens.weights().iter().copied().fold(f64::INFINITY, f64::min),
            first_moment: per_node(1, &|_| 0.0)?,
            second_moment: per_node(2, &|i| cov[(i, i)])?,
            third_moment: per_node(3, &|i| third[i])?,
        };
        w.json("moments.json", &report)?;
    }
    Ok(())
}

fn simulate(config: &RunConfig, w: &mut ArtifactWriter) -> Result<(), CliError> {
    let grid = config.time_grid();
    let bath = &config.bath;
    let (ens, _, _) = build_ensemble(config)?;
    let (x0, p0) = (config.simulate.x0, config.simulate.p0);
    let paths: Vec<Vec<f64>> = match config.simulate.method {
        SimulationMethod::Perturbative => {
            let j0 = dissipation_j0(&dissipation_mu(bath, &grid));
            let solver = PerturbativeSolver::new(&j0, dissipation_j1(bath, &grid), &config.system, &grid)?;
            if config.wants(OutputFormat::Csv) {
                w.csv_matrix("green_retarded.csv", solver.retarded.values())?;
            }
            let sols = solver.solve_ensemble(&BoundaryData::Initial { x0, p0 }, &ens)?;
            sols.iter().map(|s| s.total()).collect()
        }
        SimulationMethod::Nonlinear => {
            let integ = NonlinearIntegrator::new(&config.system, bath, &grid)?;
            let policy = config.noise.sigma_policy;
            (0..ens.n_samples())
                .into_par_iter()
                .map(|k| integ.integrate(&policy, ens.sample(k), x0, p0).map(|t| t.x))
                .collect::<Result<_, _>>()?
        }
    };
    let stats = path_statistics(&grid, &paths, ens.weights())?;
    let nodes = grid.nodes();
    if config.wants(OutputFormat::Csv) {
        let mut columns = vec!["sample".to_string(), "weight".to_string()];
        columns.extend((0..grid.len()).map(|i| format!("x{i}")));
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        w.csv_table(
            "trajectories.csv",
            &cols,
            paths.iter().enumerate().map(|(k, p)| [k as f64, ens.weights()[k]].into_iter().chain(p.iter().copied()).collect()),
        )?;
        w.csv_table(
            "statistics.csv",
            &["s", "mean", "mean_se", "variance"],
            (0..grid.len()).map(|i| vec![nodes[i], stats.mean[i].value, stats.mean[i].std_error, stats.covariance[(i, i)]]),
        )?;
        w.csv_matrix("covariance.csv", &stats.covariance)?;
    }
    Ok(())
}
