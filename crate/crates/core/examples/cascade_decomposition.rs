//! Linear cascade of a Navier–Stokes run: layer decay rates and the
//! residual of the remainder equation.

use nscb::cascade::{compute_cascade_at, fit_dyadic_decay, layer_kato_profile, remainder_residual};
use nscb::solver::{integrate, make_initial_data, InitialData, SolverConfig};
use nscb::{Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::standard(32)?;
    let u0 = make_initial_data(&InitialData::TaylorGreen3d { amplitude: 1.0 }, &grid)?;
    let dt = 0.5 / 504.0;
    let traj = integrate(&u0, &SolverConfig::new(&grid, dt, 0.5, 8)?)?;
    let p = 4.0;
    let state = compute_cascade_at(&u0, p, traj.times())?;
    println!("m = {} layers, max divergence {:.2e}", state.m(), state.max_divergence());

    let rem = remainder_residual(&traj, &state)?;
    println!("max relative residual of v: {:.3e}", rem.max_residual().unwrap_or(0.0));

    let fit = fit_dyadic_decay(&state, 1, p)?;
    for b in &fit.blocks {
        println!("  layer 1, j = {:>2}: rate {:.4}  (R² {:.6})", b.j, b.rate, b.r_squared);
    }
    for lk in layer_kato_profile(&state)? {
        println!("  layer {} q = {:>4}: Kato {:.4e}", lk.k, lk.q, lk.value);
    }
    Ok(())
}
