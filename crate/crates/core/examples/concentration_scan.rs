//! Frequency-concentration events of a run seeded with a single-block spike.

use nscb::diagnostics::{back_propagation_check, concentration_scan_with, ConstantLadder, ScanOptions};
use nscb::random::{annulus_field, rng};
use nscb::solver::{integrate, SolverConfig};
use nscb::spectral::leray_project;
use nscb::{DyadicPartition, Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let ladder = ConstantLadder::standard(2.0)?;
    let j = 2;
    let mut u0 = leray_project(&annulus_field(&part, 3, j, &mut rng(3))?)?;
    let peak = nscb::norms::lp_norm(&u0, f64::INFINITY)?;
    u0.scale(2f64.powi(j + 1) / ladder.value(1) / peak);
    let traj = integrate(&u0, &SolverConfig::new(&grid, 2e-3, 0.1, 10)?)?;
    let scan = concentration_scan_with(&traj, &ladder, &part, ScanOptions { cap: Some(8), ..Default::default() })?;
    println!("{} samples above threshold, {} kept", scan.total, scan.events.len());
    for e in scan.events.iter().take(10) {
        println!(
            "  t {:.2} j {:>2} x ({:.2}, {:.2}, {:.2}) |Δ_j u| {:.4} >= {:.4}",
            e.t, e.j, e.x[0], e.x[1], e.x[2], e.value, e.threshold
        );
    }
    let bp = back_propagation_check(&scan.events, traj.times(), &ladder, grid.box_length());
    println!("back-propagation: {} checked, {} matched, {} skipped", bp.checked, bp.matched, bp.skipped);
    Ok(())
}
