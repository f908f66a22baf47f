//! Retarded and advanced Green's functions of the memory-dressed oscillator.

use qbm_core::bath::{BathSpec, SystemSpec};
use qbm_core::grid::TimeGrid;
use qbm_core::kernels::{dissipation_j0, dissipation_mu};
use qbm_core::langevin::{green_advanced, green_retarded, solve_u_functions};

fn main() -> qbm_core::Result<()> {
    let system = SystemSpec::harmonic(1.0, 1.0)?;
    for lambda in [0.0, 0.3] {
        let bath = BathSpec::single(1.0, 1.0, 1.0, 0.5, lambda)?;
        let grid = TimeGrid::new(std::f64::consts::FRAC_PI_2, 401)?;
        let j0 = dissipation_j0(&dissipation_mu(&bath, &grid));
        let u = solve_u_functions(&j0, &system, &grid)?;
        let ret = green_retarded(&u, system.mass)?;
        let adv = green_advanced(&u, system.mass)?;
        let n = grid.len() - 1;
        println!(
            "lambda {lambda}: G_ret(t, 0) = {:+.6} (free: {:+.6}), G_adv(0, t) = {:+.6}, W(0) = {:+.6}",
            ret.values()[(n, 0)],
            grid.t_end().sin(),
            adv.values()[(0, n)],
            u.wronskian[0]
        );
    }
    Ok(())
}
