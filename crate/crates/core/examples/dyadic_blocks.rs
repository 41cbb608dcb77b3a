//! Littlewood–Paley blocks of a random field and the Bony split of a product.

use nscb::littlewood_paley::bony_decompose;
use nscb::norms::lp_norm;
use nscb::random::{random_field, rng};
use nscb::spectral::product;
use nscb::{DyadicPartition, Field, Grid, Result};

fn main() -> Result<()> {
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let mut r = rng(7);
    let f = random_field(&grid, 1, |k| 1.0 / (1.0 + k * k), &mut r);
    let g = random_field(&grid, 1, |k| (-k / 4.0).exp(), &mut r);

    println!("blocks j = {}..={}", part.j_min(), part.j_max());
    let mut sum = Field::zeros(&grid, 1);
    for j in part.indices() {
        let b = part.block(&f, j)?;
        println!(
            "  j = {j:>2}  min|k|² = {:>6}  ‖Δ_j f‖_L2 = {:.4e}  ‖Δ_j f‖_L∞ = {:.4e}",
            part.support_min_ksq(j)?,
            b.l2_norm(),
            lp_norm(&b, f64::INFINITY)?
        );
        sum.axpy(1.0, &b)?;
    }
    println!("‖Σ_j Δ_j f - f‖ / ‖f‖ = {:.2e}", sum.sub(&f)?.l2_norm() / f.l2_norm());

    let bony = bony_decompose(&f, &g, &part)?;
    let fg = product(&f, &g)?;
    println!(
        "paraproduct pieces: T_f g {:.4e}, T_g f {:.4e}, R {:.4e}; identity defect {:.2e}",
        bony.low_high.l2_norm(),
        bony.high_low.l2_norm(),
        bony.resonant.l2_norm(),
        bony.total()?.sub(&fg)?.l2_norm() / fg.l2_norm()
    );
    Ok(())
}
