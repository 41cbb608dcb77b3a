//! Homogeneous Littlewood–Paley decomposition restricted to the resolvable
//! band of a periodic grid.
//!
//! The radial profile is built from the C^∞ step
//! `s(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`:
//! `ψ(r) = 1` for `r <= 1`, `ψ(r) = 1 - s(3(r - 1))` on `(1, 4/3)`, `0` beyond,
//! and `φ(ξ) = ψ(|ξ|/2) - ψ(|ξ|)`, so `supp φ ⊂ {1 <= |ξ| <= 8/3}` and the
//! dilates `φ(2^{-j}·)` telescope to one.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// C^∞ transition from 0 (t <= 0) to 1 (t >= 1).
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Low-pass profile: 1 on `[0, 1]`, 0 from `4/3` on.
pub fn psi(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 4.0 / 3.0 {
        0.0
    } else {
        1.0 - smooth_step(3.0 * (r - 1.0))
    }
}

/// Annular profile `φ(r) = ψ(r/2) - ψ(r)`.
pub fn phi(r: f64) -> f64 {
    psi(0.5 * r) - psi(r)
}

/// The dyadic blocks `Δ̇_j`, `j_min <= j <= j_max`, that see at least one
/// retained mode. The lowest block absorbs `Ṡ_{j_min}` and the highest block
/// absorbs everything above it, so the blocks sum to the identity on
/// zero-mean band-limited fields.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    symbols: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn new(grid: &Grid) -> Result<Self> {
        let k_lo = grid.k0();
        let k_hi = grid.max_wavenumber();
        // lowest j whose annulus reaches k_lo, highest j starting below k_hi
        let mut j_min = (k_lo.log2()).floor() as i32 - 3;
        while (8.0 / 3.0) * 2f64.powi(j_min) <= k_lo {
            j_min += 1;
        }
        let mut j_max = k_hi.log2().ceil() as i32 + 1;
        while 2f64.powi(j_max) >= k_hi {
            j_max -= 1;
        }
        let count = (j_max - j_min + 1).max(0) as usize;
        if count < 3 {
            return Err(Error::BandTooNarrow(count));
        }
        let ksq = grid.ksq();
        let symbols = (j_min..=j_max)
            .map(|j| {
                let scale = 2f64.powi(-j);
                ksq.iter()
                    .map(|&k2| {
                        if k2 == 0.0 {
                            return 0.0;
                        }
                        let r = k2.sqrt() * scale;
                        if j == j_min {
                            psi(0.5 * r)
                        } else if j == j_max {
                            1.0 - psi(r)
                        } else {
                            phi(r)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(DyadicPartition {
            grid: grid.clone(),
            j_min,
            j_max,
            symbols,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    fn slot(&self, j: i32) -> Result<usize> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::BlockOutOfRange {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok((j - self.j_min) as usize)
    }

    /// Symbol of block `j` on every retained mode.
    pub fn symbol(&self, j: i32) -> Result<&[f64]> {
        Ok(&self.symbols[self.slot(j)?])
    }

    /// Smallest `|k|²` among retained modes where block `j` is nonzero.
    pub fn support_min_ksq(&self, j: i32) -> Result<f64> {
        let sym = self.symbol(j)?;
        Ok(sym
            .iter()
            .zip(self.grid.ksq())
            .filter(|(s, _)| **s > 0.0)
            .fold(f64::INFINITY, |m, (_, &k2)| m.min(k2)))
    }

    /// `Δ̇_j f`.
    pub fn block(&self, f: &Field, j: i32) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let sym = self.symbol(j)?;
        Ok(apply_real_symbol(f, sym))
    }

    /// `Δ̃_j f = Δ̇_{j-1} f + Δ̇_j f + Δ̇_{j+1} f` (blocks outside the range are zero).
    pub fn wide_block(&self, f: &Field, j: i32) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let sym: Vec<f64> = (0..self.grid.band_len())
            .map(|i| {
                (j - 1..=j + 1)
                    .filter_map(|l| self.symbol(l).ok())
                    .map(|s| s[i])
                    .sum()
            })
            .collect();
        Ok(apply_real_symbol(f, &sym))
    }

    /// `Ṡ_j f = Σ_{ℓ <= j-1} Δ̇_ℓ f`.
    pub fn partial_sum(&self, f: &Field, j: i32) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        let top = (j - 1).min(self.j_max);
        if top < self.j_min {
            return Ok(Field::zeros(f.grid(), f.ncomp()));
        }
        let sym: Vec<f64> = (0..self.grid.band_len())
            .map(|i| (self.j_min..=top).map(|l| self.symbols[(l - self.j_min) as usize][i]).sum())
            .collect();
        Ok(apply_real_symbol(f, &sym))
    }

    /// All blocks of `f`, in order `j_min..=j_max`.
    pub fn blocks(&self, f: &Field) -> Result<Vec<Field>> {
        self.indices().map(|j| self.block(f, j)).collect()
    }

    /// Collocation (or padded, `m > n`) samples of every block, per component.
    pub fn block_samples(&self, f: &Field, m: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        Ok(self.blocks(f)?.iter().map(|b| b.to_lattice(m)).collect())
    }
}

fn apply_real_symbol(f: &Field, sym: &[f64]) -> Field {
    let len = sym.len();
    let mut out = f.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= sym[i % len];
    }
    out
}

/// Bony decomposition `f g = T_f g + T_g f + R(f, g)` of a dealiased product.
#[derive(Clone, Debug)]
pub struct Paraproduct {
    /// `Σ_j Ṡ_{j-1} f · Δ̇_j g` (low f, high g).
    pub low_high: Field,
    /// `Σ_j Ṡ_{j-1} g · Δ̇_j f`.
    pub high_low: Field,
    /// `Σ_j Δ̇_j f · Δ̃_j g`.
    pub resonant: Field,
}

impl Paraproduct {
    pub fn total(&self) -> Result<Field> {
        self.low_high.add(&self.high_low)?.add(&self.resonant)
    }
}

/// Paraproduct decomposition of two scalar fields on the partition's grid.
pub fn bony_decompose(f: &Field, g: &Field, part: &DyadicPartition) -> Result<Paraproduct> {
    f.expect_components(1)?;
    g.expect_components(1)?;
    part.grid().check_same(f.grid())?;
    part.grid().check_same(g.grid())?;
    let grid = part.grid();
    let n = grid.n();
    let n3 = grid.physical_len();
    let fb: Vec<Vec<f64>> = part
        .block_samples(f, n)?
        .into_iter()
        .map(|mut c| c.swap_remove(0))
        .collect();
    let gb: Vec<Vec<f64>> = part
        .block_samples(g, n)?
        .into_iter()
        .map(|mut c| c.swap_remove(0))
        .collect();
    let nj = fb.len();

    let paraproduct = |lo: &[Vec<f64>], hi: &[Vec<f64>]| -> Vec<f64> {
        // Ṡ_{j-1} lo = Σ_{ℓ <= j-2} Δ̇_ℓ lo
        let mut acc = vec![0.0; n3];
        let mut low = vec![0.0; n3];
        for j in 2..nj {
            for (l, v) in low.iter_mut().zip(&lo[j - 2]) {
                *l += v;
            }
            for x in 0..n3 {
                acc[x] += low[x] * hi[j][x];
            }
        }
        acc
    };
    let low_high = paraproduct(&fb, &gb);
    let high_low = paraproduct(&gb, &fb);
    let mut resonant = vec![0.0; n3];
    for j in 0..nj {
        for jj in j.saturating_sub(1)..(j + 2).min(nj) {
            for x in 0..n3 {
                resonant[x] += fb[j][x] * gb[jj][x];
            }
        }
    }
    // one transform per piece, so f = g gives bitwise equal paraproducts
    Ok(Paraproduct {
        low_high: Field::from_physical(grid, &[low_high])?,
        high_low: Field::from_physical(grid, &[high_low])?,
        resonant: Field::from_physical(grid, &[resonant])?,
    })
}

/// Block-wise form of a product: `Δ̇_j(fg)` assembled from the paraproduct
/// pieces with `|j' - j| <= 4` and the resonant terms `j' >= j - 4`.
pub fn localized_product_block(
    f: &Field,
    g: &Field,
    j: i32,
    part: &DyadicPartition,
) -> Result<Field> {
    f.expect_components(1)?;
    g.expect_components(1)?;
    let grid = part.grid();
    let n3 = grid.physical_len();
    let n = grid.n();
    let sample = |h: &Field| h.to_lattice(n).swap_remove(0);
    let mut acc = vec![0.0; n3];
    for jp in part.indices() {
        if (jp - j).abs() <= 4 {
            let sf = sample(&part.partial_sum(f, jp - 1)?);
            let dg = sample(&part.block(g, jp)?);
            let sg = sample(&part.partial_sum(g, jp - 1)?);
            let df = sample(&part.block(f, jp)?);
            for x in 0..n3 {
                acc[x] += sf[x] * dg[x] + sg[x] * df[x];
            }
        }
        if jp >= j - 4 {
            let df = sample(&part.block(f, jp)?);
            let wg = sample(&part.wide_block(g, jp)?);
            for x in 0..n3 {
                acc[x] += df[x] * wg[x];
            }
        }
    }
    let total = Field::from_physical(grid, &[acc])?;
    part.block(&total, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_support_and_range() {
        for i in 0..=400 {
            let r = i as f64 * 0.01;
            let v = phi(r);
            assert!((0.0..=1.0).contains(&v));
            if r <= 1.0 || r >= 8.0 / 3.0 {
                assert_eq!(v, 0.0, "phi({r}) should vanish");
            }
        }
        assert!(phi(1.5) > 0.0);
        assert_eq!(phi(0.5), 0.0);
    }

    #[test]
    fn telescoping_sum_is_one() {
        for i in 1..200 {
            let r = 0.05 * i as f64 + 0.7;
            let s: f64 = (-6..=8).map(|j| phi(r * 2f64.powi(-j))).sum();
            assert!((s - 1.0).abs() < 1e-14, "sum at {r} = {s}");
        }
    }

    #[test]
    fn range_at_64_covers_one_to_four() {
        let g = Grid::standard(64).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        assert!(p.j_min() <= 1 && p.j_max() >= 4);
        assert_eq!((p.j_min(), p.j_max()), (-1, 5));
    }

    #[test]
    fn narrow_band_rejected() {
        // radius-1 band: only |k| in {1, √2, √3}
        let g = Grid::new(16, 2.0 * std::f64::consts::PI, 0.2).unwrap();
        assert!(matches!(DyadicPartition::new(&g), Err(Error::BandTooNarrow(_))));
    }

    #[test]
    fn single_mode_block_value() {
        let g = Grid::standard(32).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        // |k| = 4 = 2^2 sits on the inner edge of block 2 and the interior of block 1
        let f = Field::from_fn(&g, 1, |x| vec![(3.0 * x[0] + 3.0 * x[1]).cos()]).unwrap();
        let r = (18f64).sqrt();
        for j in p.indices() {
            let b = p.block(&f, j).unwrap();
            let expected = f.scaled(phi(r * 2f64.powi(-j)));
            assert!(b.sub(&expected).unwrap().max_abs_coeff() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_block() {
        let g = Grid::standard(32).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        let f = Field::zeros(&g, 1);
        assert!(matches!(p.block(&f, p.j_max() + 1), Err(Error::BlockOutOfRange { .. })));
    }
}
