//! Fluctuation-dissipation check, per mode and on the time grid.

use qbm_core::bath::{BathMode, BathSpec};
use qbm_core::fdr::{fdr_spectral_check, fdr_timegrid_check, TimegridFdrOptions};
use qbm_core::grid::TimeGrid;

fn main() -> qbm_core::Result<()> {
    let bath = BathSpec::new(
        vec![BathMode::new(1.0, 0.8, 1.0, 0.3)?, BathMode::new(2.0, 1.7, 0.6, -0.4)?],
        0.3,
        1.0,
    )?;
    let report = fdr_spectral_check(&bath)?;
    for r in &report.records {
        println!(
            "mode {} (omega {:.2}): noise/damping = {:.15} vs 2 omega = {:.15}",
            r.mode_index,
            r.omega,
            r.ratio,
            2.0 * r.omega
        );
    }
    println!("max residual {:.2e}, third order {:.2e}", report.max_residual, report.max_order3_residual);

    let grid = TimeGrid::new(4.0, 81)?;
    for window in [10.0, 20.0, 40.0] {
        let opts = TimegridFdrOptions { omega_max: 10.0, n_omega: 2000, window };
        println!("time-grid deviation, window {window}: {:.3e}", fdr_timegrid_check(&bath, &grid, &opts)?);
    }
    Ok(())
}
