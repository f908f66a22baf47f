//! Sampling the Gaussian stochastic force and checking its covariance.

use qbm_core::bath::BathSpec;
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::noise_n20;
use qbm_core::noise::{factor_covariance, gaussian_sample, weighted_moment, weighted_moment2, wick_moment, DEFAULT_CLIP};

fn main() -> qbm_core::Result<()> {
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.3)?;
    let grid = TimeGrid::new(5.0, 32)?;
    let n20 = noise_n20(&bath, &grid);
    let factor = factor_covariance(&n20, bath.hbar, DEFAULT_CLIP)?;
    println!("rank {} of {} nodes", factor.rank(), grid.len());

    let ens = gaussian_sample(&factor, 50_000, 42)?;
    let cov = n20.values().scale(bath.hbar);
    for (i, j) in [(0, 0), (0, 10), (5, 31)] {
        let est = weighted_moment2(&ens, i, j)?.raw;
        println!("<xi({i}) xi({j})> = {:+.5e} +- {:.1e}, exact {:+.5e}", est.value, est.std_error, cov[(i, j)]);
    }
    let idx = [1, 4, 9, 20];
    let est = weighted_moment(&ens, &idx)?.raw;
    println!("4-point {idx:?}: {:+.5e} +- {:.1e}, Wick {:+.5e}", est.value, est.std_error, wick_moment(&cov, &idx));
    Ok(())
}
