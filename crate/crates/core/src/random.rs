//! Seeded random fields. Every generator draws from ChaCha8 so a seed gives
//! the same coefficients on every platform.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::field::Field;
use crate::grid::Grid;
use crate::littlewood_paley::DyadicPartition;
use crate::spectral::leray_project;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-mean real field with independent Gaussian coefficients of standard
/// deviation `amplitude(|k|)`.
pub fn random_field<F>(grid: &Grid, ncomp: usize, amplitude: F, rng: &mut ChaCha8Rng) -> Field
where
    F: Fn(f64) -> f64,
{
    let len = grid.band_len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); ncomp * len];
    for c in 0..ncomp {
        for idx in 0..len / 2 {
            let a = amplitude(grid.ksq()[idx].sqrt());
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let z = Complex64::new(re, im) * (a * std::f64::consts::FRAC_1_SQRT_2);
            coeffs[c * len + idx] = z;
            coeffs[c * len + len - 1 - idx] = z.conj();
        }
    }
    Field::from_coeffs(grid, ncomp, coeffs).expect("consistent length")
}

/// Divergence-free random vector field.
pub fn random_solenoidal<F>(grid: &Grid, amplitude: F, rng: &mut ChaCha8Rng) -> Result<Field>
where
    F: Fn(f64) -> f64,
{
    leray_project(&random_field(grid, 3, amplitude, rng))
}

/// Random field whose spectrum sits inside the support of block `j`.
pub fn annulus_field(
    part: &DyadicPartition,
    ncomp: usize,
    j: i32,
    rng: &mut ChaCha8Rng,
) -> Result<Field> {
    part.block(&random_field(part.grid(), ncomp, |_| 1.0, rng), j)
}
