//! Critical Besov norm, its heat-flow (Kato) characterization, and the
//! invariance of both under parabolic dilation.

use nscb::norms::{besov_norm, heat_flow_besov_ratio, lp_norm, BesovParams};
use nscb::random::{random_solenoidal, rng};
use nscb::spectral::parabolic_dilation;
use nscb::{DyadicPartition, Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::standard(32)?;
    let p = 4.0;
    let bp = BesovParams::critical(p, f64::INFINITY)?;
    let part = DyadicPartition::new(&grid)?;
    for seed in 0..4 {
        let u = random_solenoidal(&grid, |k| (-(k / 4.0).powi(2)).exp() / k.max(1.0), &mut rng(seed))?;
        let h = heat_flow_besov_ratio(&u, bp)?;
        let dilated = parabolic_dilation(&u, 2.0)?;
        let b2 = besov_norm(&dilated, bp, &DyadicPartition::new(dilated.grid())?)?;
        println!(
            "seed {seed}: Besov {:.5}  Kato {:.5}  ratio {:.3}  dilated Besov {:.5}  ‖u‖_L4 {:.4}",
            besov_norm(&u, bp, &part)?,
            h.kato,
            h.ratio,
            b2,
            lp_norm(&u, p)?
        );
    }
    Ok(())
}
