//! Direct integration with a nonlinear coupling f(x) = x + 0.2 x^3.

use qbm_core::bath::{BathSpec, SystemSpec};
use qbm_core::grid::TimeGrid;
use qbm_core::langevin::{NonlinearIntegrator, SigmaPolicy};
use qbm_core::poly::Polynomial;

fn main() -> qbm_core::Result<()> {
    let grid = TimeGrid::new(10.0, 1001)?;
    let bath = BathSpec::single(1.0, 1.3, 1.0, 0.5, 0.3)?;
    let system = SystemSpec::harmonic(1.0, 1.0)?.with_coupling(Polynomial::new(vec![0.0, 1.0, 0.0, 0.2]))?;
    let integ = NonlinearIntegrator::new(&system, &bath, &grid)?;
    let xi = vec![0.0; grid.len()];
    for policy in [SigmaPolicy::Constant { value: 1.0 }, SigmaPolicy::Frozen, SigmaPolicy::Picard { iterations: 3 }] {
        let out = integ.integrate(&policy, &xi, 1.0, 0.0)?;
        println!("{policy:?}: x(5) = {:+.6}, x(10) = {:+.6}", out.x[500], out.x[1000]);
    }
    Ok(())
}
