use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{band_to_lattice, lattice_to_band, Grid};

/// A real scalar, vector, or tensor field on a [`Grid`], stored as spectral
/// coefficients on the retained band (one block of `grid.band_len()` values
/// per component). The physical field is `f(x) = Σ_k c_k e^{ik·x}`.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    ncomp: usize,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid, ncomp: usize) -> Self {
        Field {
            grid: grid.clone(),
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); ncomp * grid.band_len()],
        }
    }

    /// Wraps raw band coefficients. The caller is responsible for conjugate
    /// symmetry; see [`Field::hermitian_defect`].
    pub fn from_coeffs(grid: &Grid, ncomp: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != ncomp * grid.band_len() {
            return Err(Error::param(
                "coeffs",
                format!(
                    "expected {} coefficients, got {}",
                    ncomp * grid.band_len(),
                    coeffs.len()
                ),
            ));
        }
        Ok(Field {
            grid: grid.clone(),
            ncomp,
            coeffs,
        })
    }

    /// Transforms collocation samples (x-fastest, `n³` per component) and
    /// truncates to the retained band.
    pub fn from_physical(grid: &Grid, comps: &[Vec<f64>]) -> Result<Self> {
        let n3 = grid.physical_len();
        if let Some(bad) = comps.iter().find(|c| c.len() != n3) {
            return Err(Error::param(
                "comps",
                format!("expected {n3} samples per component, got {}", bad.len()),
            ));
        }
        if comps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical samples".into()));
        }
        let ncomp = comps.len();
        let mut coeffs = Vec::with_capacity(ncomp * grid.band_len());
        let mut iter = comps.chunks(2);
        for pair in &mut iter {
            let (a, b) = lattice_to_band(grid, &pair[0], pair.get(1).map(|v| &v[..]), grid.n());
            coeffs.extend(a);
            if let Some(b) = b {
                coeffs.extend(b);
            }
        }
        Ok(Field {
            grid: grid.clone(),
            ncomp,
            coeffs,
        })
    }

    /// Builds a field by sampling `f` at every collocation point.
    pub fn from_fn<F>(grid: &Grid, ncomp: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Vec<f64>,
    {
        let n = grid.n();
        let mut comps = vec![vec![0.0; grid.physical_len()]; ncomp];
        for i in 0..grid.physical_len() {
            let v = f(grid.point(i, n));
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[i] = v[c];
            }
        }
        Field::from_physical(grid, &comps)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        let len = self.grid.band_len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.band_len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    /// Component `c` as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        Field {
            grid: self.grid.clone(),
            ncomp: 1,
            coeffs: self.comp(c).to_vec(),
        }
    }

    pub fn from_components(parts: &[Field]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("parts", "no components given"))?;
        let mut coeffs = Vec::with_capacity(parts.len() * first.grid.band_len());
        for p in parts {
            first.grid.check_same(&p.grid)?;
            if p.ncomp != 1 {
                return Err(Error::ComponentMismatch {
                    expected: 1,
                    got: p.ncomp,
                });
            }
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(Field {
            grid: first.grid.clone(),
            ncomp: parts.len(),
            coeffs,
        })
    }

    pub(crate) fn expect_components(&self, expected: usize) -> Result<()> {
        if self.ncomp == expected {
            Ok(())
        } else {
            Err(Error::ComponentMismatch {
                expected,
                got: self.ncomp,
            })
        }
    }

    pub(crate) fn check_compatible(&self, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        other.expect_components(self.ncomp)
    }

    /// Collocation samples, one `n³` vector per component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        self.to_lattice(self.grid.n())
    }

    /// Samples on an `m³` lattice (`m >= n` gives zero-padded interpolation).
    pub fn to_lattice(&self, m: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.ncomp);
        let mut c = 0;
        while c < self.ncomp {
            if c + 1 < self.ncomp {
                let (a, b) = band_to_lattice(&self.grid, self.comp(c), Some(self.comp(c + 1)), m);
                out.push(a);
                out.push(b.expect("paired transform"));
                c += 2;
            } else {
                out.push(band_to_lattice(&self.grid, self.comp(c), None, m).0);
                c += 1;
            }
        }
        out
    }

    /// Samples on the 2× zero-padded lattice used for sup norms.
    pub fn to_padded(&self) -> Vec<Vec<f64>> {
        self.to_lattice(2 * self.grid.n())
    }

    /// Pointwise Euclidean magnitude over components on an `m³` lattice.
    pub fn magnitude_on(&self, m: usize) -> Vec<f64> {
        magnitude(&self.to_lattice(m))
    }

    /// Evaluates the trigonometric polynomial at arbitrary points.
    pub fn evaluate(&self, points: &[[f64; 3]]) -> Vec<Vec<f64>> {
        let nb = self.grid.band_width();
        let c = self.grid.band_radius() as f64;
        let k0 = self.grid.k0();
        let len = self.grid.band_len();
        let mut out = vec![Vec::with_capacity(points.len()); self.ncomp];
        let mut ex = vec![Complex64::new(0.0, 0.0); nb];
        let mut ey = ex.clone();
        let mut ez = ex.clone();
        for p in points {
            for b in 0..nb {
                let m = b as f64 - c;
                ex[b] = Complex64::from_polar(1.0, k0 * m * p[0]);
                ey[b] = Complex64::from_polar(1.0, k0 * m * p[1]);
                ez[b] = Complex64::from_polar(1.0, k0 * m * p[2]);
            }
            for comp in 0..self.ncomp {
                let data = &self.coeffs[comp * len..(comp + 1) * len];
                let mut total = Complex64::new(0.0, 0.0);
                for bz in 0..nb {
                    let mut sy = Complex64::new(0.0, 0.0);
                    for by in 0..nb {
                        let row = &data[(bz * nb + by) * nb..(bz * nb + by + 1) * nb];
                        let sx: Complex64 = row.iter().zip(&ex).map(|(a, e)| a * e).sum();
                        sy += sx * ey[by];
                    }
                    total += sy * ez[bz];
                }
                out[comp].push(total.re);
            }
        }
        out
    }

    /// Largest `|c_k - conj(c_{-k})|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.band_len();
        let scale = self.max_abs_coeff().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for comp in 0..self.ncomp {
            let d = &self.coeffs[comp * len..(comp + 1) * len];
            for i in 0..len / 2 + 1 {
                worst = worst.max((d[i] - d[len - 1 - i].conj()).norm());
            }
        }
        worst / scale
    }

    /// Replaces every coefficient pair by its conjugate-symmetric part.
    pub fn symmetrize(&mut self) {
        let len = self.grid.band_len();
        for comp in 0..self.ncomp {
            let d = &mut self.coeffs[comp * len..(comp + 1) * len];
            for i in 0..len / 2 + 1 {
                let j = len - 1 - i;
                let s = (d[i] + d[j].conj()) * 0.5;
                d[i] = s;
                d[j] = s.conj();
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `L²` norm over the box via Parseval.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Spatial mean of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.comp(c)[self.grid.zero_mode()].re
    }

    pub fn remove_mean(&mut self) {
        let z = self.grid.zero_mode();
        for c in 0..self.ncomp {
            self.comp_mut(c)[z] = Complex64::new(0.0, 0.0);
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<()> {
        self.check_compatible(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Same coefficients reinterpreted on `grid` (must share the band layout).
    pub fn regrid(&self, grid: &Grid) -> Result<Field> {
        if grid.band_len() != self.grid.band_len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: grid.clone(),
            ncomp: self.ncomp,
            coeffs: self.coeffs.clone(),
        })
    }

    /// Spectral interpolation/truncation onto another grid with the same box.
    pub fn resample(&self, grid: &Grid) -> Result<Field> {
        if grid.box_length().to_bits() != self.grid.box_length().to_bits() {
            return Err(Error::GridMismatch);
        }
        let mut out = Field::zeros(grid, self.ncomp);
        let len = self.grid.band_len();
        for idx in 0..len {
            if let Some(target) = grid.mode_index(self.grid.signed_index(idx)) {
                for c in 0..self.ncomp {
                    out.comp_mut(c)[target] = self.comp(c)[idx];
                }
            }
        }
        Ok(out)
    }
}

/// Pointwise Euclidean magnitude of a set of component sample vectors.
pub fn magnitude(comps: &[Vec<f64>]) -> Vec<f64> {
    let len = comps.first().map_or(0, Vec::len);
    (0..len)
        .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_has_unit_coefficient() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |x| vec![(2.0 * x[0] + x[2]).cos()]).unwrap();
        let idx = g.mode_index([2, 0, 1]).unwrap();
        assert!((f.comp(0)[idx] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.comp(0)[g.partner(idx)] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn padded_lattice_interpolates() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |x| vec![x[1].sin() * (3.0 * x[0]).cos()]).unwrap();
        let m = 32;
        let fine = f.to_lattice(m);
        for i in (0..m * m * m).step_by(97) {
            let p = g.point(i, m);
            let exact = p[1].sin() * (3.0 * p[0]).cos();
            assert!((fine[0][i] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn pointwise_evaluation_matches_formula() {
        let g = Grid::new(16, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = Field::from_fn(&g, 2, |x| vec![x[2].cos(), (x[0] - 2.0 * x[1]).sin()]).unwrap();
        let pts = [[0.3, 1.7, 2.9], [5.0, 0.1, 4.4]];
        let v = f.evaluate(&pts);
        for (i, p) in pts.iter().enumerate() {
            assert!((v[0][i] - p[2].cos()).abs() < 1e-13);
            assert!((v[1][i] - (p[0] - 2.0 * p[1]).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn truncates_modes_beyond_band() {
        let g = Grid::standard(16).unwrap();
        // index 7 lies beyond the 2/3 band (radius 5)
        let f = Field::from_fn(&g, 1, |x| vec![(7.0 * x[0]).cos() + x[1].cos()]).unwrap();
        let back = f.to_physical();
        for i in (0..g.physical_len()).step_by(31) {
            let p = g.point(i, 16);
            assert!((back[0][i] - p[1].cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn parseval_l2() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |x| vec![x[0].sin()]).unwrap();
        let expected = (2.0 * PI).powf(1.5) / 2f64.sqrt();
        assert!((f.l2_norm() - expected).abs() < 1e-12 * expected);
    }
}
