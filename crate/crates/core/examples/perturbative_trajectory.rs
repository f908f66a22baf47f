//! Trajectory to first order in lambda, compared with the all-orders fixed point.

use qbm_core::bath::{BathSpec, SystemSpec};
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::{dissipation_j0, dissipation_j1, dissipation_mu};
use qbm_core::langevin::{BoundaryData, PerturbativeSolver, PicardOptions};

fn main() -> qbm_core::Result<()> {
    let grid = TimeGrid::new(5.0, 201)?;
    let system = SystemSpec::harmonic(1.0, 1.0)?;
    let xi: Vec<f64> = grid.nodes().iter().map(|s| 0.3 * (1.7 * s).cos()).collect();
    let boundary = BoundaryData::Initial { x0: 1.0, p0: 0.0 };
    for lambda in [0.2, 0.1] {
        let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, lambda)?;
        let j0 = dissipation_j0(&dissipation_mu(&bath, &grid));
        let solver = PerturbativeSolver::new(&j0, dissipation_j1(&bath, &grid), &system, &grid)?;
        let sol = solver.solve(&boundary, &xi, None)?;
        let exact = solver.solve_iterative(&boundary, &xi, &PicardOptions::default())?;
        let remainder = exact.iter().zip(sol.total()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let x1 = sol.x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("lambda {lambda}: x(t) = {:+.6}, max |x1| = {x1:.3e}, remainder {remainder:.3e}", sol.total()[200]);
    }
    Ok(())
}
