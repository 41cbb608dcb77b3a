//! Decaying 2D Taylor–Green vortex: the solver against `e^{-2t} u₀`.

use nscb::solver::{energy_series, integrate, make_initial_data, vorticity_traj, InitialData, SolverConfig};
use nscb::{Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::standard(32)?;
    let u0 = make_initial_data(&InitialData::TaylorGreen { amplitude: 1.0 }, &grid)?;
    let cfg = SolverConfig::new(&grid, 1e-3, 0.5, 100)?;
    let traj = integrate(&u0, &cfg)?;
    let omega = vorticity_traj(&traj)?;
    let energy = energy_series(&traj);
    println!("{:>6} {:>14} {:>14} {:>12}", "t", "energy", "rel. error", "|ω|_L2");
    for (i, (t, u)) in traj.iter().enumerate() {
        let exact = u0.scaled((-2.0 * t).exp());
        let err = u.sub(&exact)?.l2_norm() / exact.l2_norm();
        println!("{t:>6.2} {:>14.8e} {err:>14.3e} {:>12.6}", energy[i], omega.field(i).l2_norm());
    }
    Ok(())
}
