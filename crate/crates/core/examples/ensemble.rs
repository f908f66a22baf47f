//! Reweighted trajectory ensemble and its statistics.

use qbm_core::bath::{BathSpec, SystemSpec};
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::*;
use qbm_core::langevin::{ensemble_statistics, BoundaryData, NonlinearIntegrator, PerturbativeSolver};
use qbm_core::noise::*;

fn main() -> qbm_core::Result<()> {
    let grid = TimeGrid::new(5.0, 101)?;
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.2)?;
    let system = SystemSpec::harmonic(1.0, 1.0)?;
    let set = KernelSet::assemble(&bath, &grid);

    let sigma = NonlinearIntegrator::new(&system, &bath, &grid)?.frozen_reference(1.0, 0.0)?;
    let inverse = inverse_bifunction(&set.n20, bath.hbar, DEFAULT_CLIP)?;
    let coeffs = reweight_coefficients(&set.n21, &set.n31, &sigma, &inverse, bath.hbar)?;
    let base = gaussian_sample(&factor_covariance(&set.n20, bath.hbar, DEFAULT_CLIP)?, 2000, 9)?;
    let ens = apply_reweight(&base, &coeffs)?;

    let solver = PerturbativeSolver::new(&set.j0, set.j1.clone(), &system, &grid)?;
    let sols = solver.solve_ensemble(&BoundaryData::Initial { x0: 1.0, p0: 0.0 }, &ens)?;
    let stats = ensemble_statistics(&sols, ens.weights())?;
    for i in (0..grid.len()).step_by(20) {
        println!(
            "s = {:.2}: <x> = {:+.5} +- {:.1e}, var = {:.4e}",
            grid.node(i),
            stats.mean[i].value,
            stats.mean[i].std_error,
            stats.covariance[(i, i)]
        );
    }
    Ok(())
}
