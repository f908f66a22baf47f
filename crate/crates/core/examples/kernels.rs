//! Influence-action kernels for a single detuned mode.

use qbm_core::bath::{spectral_density, BathSpec};
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::{damping_gamma1, KernelSet, ReferencePath};

fn main() -> qbm_core::Result<()> {
    let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, 0.2)?;
    let grid = TimeGrid::new(4.0, 41)?;
    let set = KernelSet::assemble(&bath, &grid);

    for line in spectral_density(&bath) {
        println!("spectral line at {:.3} with weight {:.3e}", line.frequency, line.weight);
    }
    println!("N2(0)(0, s) for the first few nodes:");
    for j in 0..5 {
        println!("  s = {:.2}  {:+.6e}", grid.node(j), set.n20.get(0, j));
    }
    println!("gamma0(t, 0) = {:+.6e}, mu(t, 0) = {:+.6e}", set.gamma0.get(40, 0), set.mu.get(40, 0));
    println!("J1(t, t/2, t/4) = {:+.6e}", set.j1.get(40, 20, 10));
    println!("N3(t, t/2, 0)   = {:+.6e}", set.n31.get(40, 20, 0));

    let sigma = ReferencePath::constant(grid, 1.0)?;
    let gamma1 = damping_gamma1(&bath, &grid, &sigma)?;
    println!("gamma1(t, 0) with Sigma = 1: {:+.6e}", gamma1.get(40, 0));
    Ok(())
}
