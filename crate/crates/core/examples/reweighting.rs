//! Non-Gaussian noise by importance reweighting of Gaussian samples.

use qbm_core::bath::BathSpec;
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::{KernelSet, ReferencePath};
use qbm_core::noise::*;

fn main() -> qbm_core::Result<()> {
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.2)?;
    let grid = TimeGrid::new(5.0, 32)?;
    let set = KernelSet::assemble(&bath, &grid);
    let sigma = ReferencePath::constant(grid, 1.0)?;

    let inverse = inverse_bifunction(&set.n20, bath.hbar, DEFAULT_CLIP)?;
    let coeffs = reweight_coefficients(&set.n21, &set.n31, &sigma, &inverse, bath.hbar)?;
    let base = gaussian_sample(&factor_covariance(&set.n20, bath.hbar, DEFAULT_CLIP)?, 100_000, 1)?;
    let ens = apply_reweight(&base, &coeffs)?;

    let mw = mean_weight(&ens)?;
    println!("c0 = {:+.4e}, mean weight {:.5} +- {:.1e}", coeffs.c0, mw.value, mw.std_error);
    let projected = project_kernel3(&set.n31, &inverse)?;
    for (i, j, k) in [(3, 3, 3), (10, 4, 25), (31, 0, 16)] {
        let est = weighted_moment3(&ens, i, j, k)?.self_normalized;
        println!(
            "<xi xi xi>({i},{j},{k}) = {:+.4e} +- {:.1e}; P N3 P P P = {:+.4e}; N3 = {:+.4e}",
            est.value,
            est.std_error,
            projected.get(i, j, k),
            set.n31.get(i, j, k)
        );
    }
    Ok(())
}
