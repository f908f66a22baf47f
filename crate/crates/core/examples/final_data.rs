//! Solving from final data with the advanced construction.

use qbm_core::bath::{BathSpec, SystemSpec};
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::{dissipation_j0, dissipation_j1, dissipation_mu};
use qbm_core::langevin::{BoundaryData, PerturbativeSolver};

fn main() -> qbm_core::Result<()> {
    let grid = TimeGrid::new(3.0, 401)?;
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.2)?;
    let system = SystemSpec::harmonic(1.0, 1.0)?;
    let j0 = dissipation_j0(&dissipation_mu(&bath, &grid));
    let solver = PerturbativeSolver::new(&j0, dissipation_j1(&bath, &grid), &system, &grid)?;
    let xi: Vec<f64> = grid.nodes().iter().map(|s| 0.4 * (2.1 * s).sin()).collect();

    let forward = solver.solve(&BoundaryData::Initial { x0: 0.7, p0: -0.2 }, &xi, None)?;
    let end = BoundaryData::final_from(&forward.x0, &grid, system.mass);
    println!("final data: {end:?}");
    let backward = solver.solve(&end, &xi, None)?;
    let diff = forward.x0.iter().zip(&backward.x0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("recovered x(0) = {:+.6}, p(0) ~ {:+.6}", backward.x0[0], (backward.x0[1] - backward.x0[0]) / grid.step());
    println!("sup |x_initial - x_final| = {diff:.3e}");
    Ok(())
}
