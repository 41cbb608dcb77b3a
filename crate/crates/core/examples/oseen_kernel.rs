//! Radial decay of the `e^{tΔ}ℙ∇·` kernel.

use nscb::diagnostics::oseen_kernel_fit;
use nscb::Result;

fn main() -> Result<()> {
    let fit = oseen_kernel_fit(64, 2.0 * std::f64::consts::PI)?;
    println!("t = {:.4e}", fit.t);
    for (r, v) in fit.radii.iter().zip(&fit.shell_max) {
        println!("  r = {r:.4}  max |K| = {v:.4e}");
    }
    println!("fitted exponent {:.3} (R² {:.4})", fit.slope, fit.r_squared);
    Ok(())
}
