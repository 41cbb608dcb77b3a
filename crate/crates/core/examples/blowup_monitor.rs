//! Criterion monitor on a run from random data of prescribed critical norm.

use nscb::diagnostics::{key_lemma_check, monitor, ConstantLadder, MonitorOptions};
use nscb::solver::{integrate, make_initial_data, InitialData, SolverConfig};
use nscb::{Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::standard(32)?;
    let p = 4.0;
    let u0 = make_initial_data(&InitialData::RandomBesov { p, target: 2.0, seed: 11 }, &grid)?;
    let traj = integrate(&u0, &SolverConfig::new(&grid, 2e-3, 0.2, 10)?)?;
    let ladder = ConstantLadder::standard(2.0)?;
    let opts = MonitorOptions {
        t_star: Some(1.0),
        ..MonitorOptions::default()
    };
    for a in [0.0, 0.5, 1.0] {
        let rep = monitor(&traj, p, a, &ladder, &opts)?;
        let s = &rep.summary;
        println!(
            "a = {a}: sup M {:.4}  sup A_a {:.4}  ln ln ln RHS = {:.4} / {:.4}  lhs <= rhs: {}",
            s.sup_besov,
            s.sup_weighted_log,
            s.rhs[0].lnlnln.unwrap_or(f64::NAN),
            s.rhs[1].lnlnln.unwrap_or(f64::NAN),
            s.lhs_within_rhs
        );
        if a == 0.0 {
            for r in &rep.rows {
                println!(
                    "   t = {:.3}  M(t) {:.4}  A(t) {:.4}  lhs {:.4e} {:.4e}  Q13 {:.4e}",
                    r.t, r.besov, r.potential, r.lhs[0], r.lhs[1], r.theorem13.unwrap_or(0.0)
                );
            }
            println!("   events: {} (kept {})", s.event_total, s.events.len());
            if let Some(e) = &s.epoch {
                println!("   epoch [{:.3}, {:.3}] scaled {:?}", e.t_lo, e.t_hi, e.scaled);
            }
        }
    }
    let k = key_lemma_check(1.0, 3, 2.0, 0.0, &ladder)?;
    println!("key lemma: ln lhs {:.4}, satisfied {}", k.ln_lhs, k.satisfied);
    Ok(())
}
