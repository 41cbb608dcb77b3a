use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

type Plan = Arc<dyn Fft<f64>>;

/// Periodic box discretization: `n` collocation points per axis on a cube of
/// side `box_length`, with spectral coefficients kept on the cube of signed
/// indices `|m| <= band_radius` (2/3 rule by default).
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    box_length: f64,
    dealias_fraction: f64,
    band: usize,
    k0: f64,
    ksq: Vec<f64>,
    plans: Mutex<HashMap<usize, (Plan, Plan)>>,
}

impl Grid {
    pub fn new(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        // Nyquist index is never retained: it has no conjugate partner.
        let band = ((dealias_fraction * (n / 2) as f64 + 1e-9).floor() as usize).min(n / 2 - 1);
        let k0 = 2.0 * PI / box_length;
        let nb = 2 * band + 1;
        let mut ksq = Vec::with_capacity(nb * nb * nb);
        for bz in 0..nb {
            for by in 0..nb {
                for bx in 0..nb {
                    let m = [bx, by, bz].map(|b| b as f64 - band as f64);
                    ksq.push(k0 * k0 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]));
                }
            }
        }
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                box_length,
                dealias_fraction,
                band,
                k0,
                ksq,
                plans: Mutex::new(HashMap::new()),
            }),
        })
    }

    /// `n` points on the default `2π` box with 2/3 dealiasing.
    pub fn standard(n: usize) -> Result<Self> {
        Grid::new(n, 2.0 * PI, 2.0 / 3.0)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.inner.dealias_fraction
    }

    /// Largest retained signed index per axis.
    pub fn band_radius(&self) -> usize {
        self.inner.band
    }

    /// Number of retained indices per axis.
    pub fn band_width(&self) -> usize {
        2 * self.inner.band + 1
    }

    /// Number of retained modes.
    pub fn band_len(&self) -> usize {
        self.inner.ksq.len()
    }

    /// Smallest nonzero wavenumber, `2π / box_length`.
    pub fn k0(&self) -> f64 {
        self.inner.k0
    }

    /// Dealiasing cutoff `dealias_fraction · (n/2) · k0`.
    pub fn k_max(&self) -> f64 {
        self.inner.dealias_fraction * (self.inner.n / 2) as f64 * self.inner.k0
    }

    /// Largest retained wavenumber along one axis.
    pub fn max_axis_wavenumber(&self) -> f64 {
        self.inner.band as f64 * self.inner.k0
    }

    /// Largest retained wavevector magnitude (band corner).
    pub fn max_wavenumber(&self) -> f64 {
        self.max_axis_wavenumber() * 3f64.sqrt()
    }

    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.inner.box_length.powi(3)
    }

    pub fn physical_len(&self) -> usize {
        self.inner.n.pow(3)
    }

    /// `|k|²` of every retained mode in storage order.
    pub fn ksq(&self) -> &[f64] {
        &self.inner.ksq
    }

    pub fn signed_index(&self, idx: usize) -> [i64; 3] {
        let nb = self.band_width();
        let c = self.inner.band as i64;
        [
            (idx % nb) as i64 - c,
            ((idx / nb) % nb) as i64 - c,
            (idx / (nb * nb)) as i64 - c,
        ]
    }

    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.signed_index(idx).map(|m| m as f64 * self.inner.k0)
    }

    /// Storage index of the mode with signed indices `m`, if it is retained.
    pub fn mode_index(&self, m: [i64; 3]) -> Option<usize> {
        let c = self.inner.band as i64;
        if m.iter().any(|&v| v.abs() > c) {
            return None;
        }
        let nb = self.band_width();
        let b = m.map(|v| (v + c) as usize);
        Some((b[2] * nb + b[1]) * nb + b[0])
    }

    /// Storage index of the zero mode.
    pub fn zero_mode(&self) -> usize {
        self.band_len() / 2
    }

    /// Storage index of the conjugate partner `-k` of mode `idx`.
    #[inline]
    pub fn partner(&self, idx: usize) -> usize {
        self.band_len() - 1 - idx
    }

    /// Physical coordinate of collocation point `i` (x-fastest order) on an
    /// `m`-point lattice.
    pub fn point(&self, i: usize, m: usize) -> [f64; 3] {
        let h = self.inner.box_length / m as f64;
        [
            (i % m) as f64 * h,
            ((i / m) % m) as f64 * h,
            (i / (m * m)) as f64 * h,
        ]
    }

    pub(crate) fn plans(&self, m: usize) -> (Plan, Plan) {
        let mut cache = self.inner.plans.lock().expect("fft plan cache poisoned");
        cache
            .entry(m)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
            })
            .clone()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Position of band index `b` on an `m`-point periodic lattice.
    pub(crate) fn band_positions(&self, m: usize) -> Vec<usize> {
        let c = self.inner.band as i64;
        (0..self.band_width())
            .map(|b| (b as i64 - c).rem_euclid(m as i64) as usize)
            .collect()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n
            && self.inner.box_length.to_bits() == other.inner.box_length.to_bits()
            && self.inner.dealias_fraction.to_bits() == other.inner.dealias_fraction.to_bits()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .field("dealias_fraction", &self.inner.dealias_fraction)
            .field("band_radius", &self.inner.band)
            .finish()
    }
}

/// Inverse transform of one or two Hermitian band spectra onto an `m³`
/// lattice. Two real fields share one complex transform (`a + i b`).
pub(crate) fn band_to_lattice(
    grid: &Grid,
    a: &[Complex64],
    b: Option<&[Complex64]>,
    m: usize,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let nb = grid.band_width();
    let pos = grid.band_positions(m);
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
    let i_unit = Complex64::new(0.0, 1.0);
    for bz in 0..nb {
        for by in 0..nb {
            let row = (pos[bz] * m + pos[by]) * m;
            let src = (bz * nb + by) * nb;
            for bx in 0..nb {
                let mut v = a[src + bx];
                if let Some(b) = b {
                    v += i_unit * b[src + bx];
                }
                buf[row + pos[bx]] = v;
            }
        }
    }
    let (_, inv) = grid.plans(m);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); inv.get_inplace_scratch_len()];
    // z lines only where (x, y) is in band
    for &py in &pos {
        for &px in &pos {
            for z in 0..m {
                line[z] = buf[(z * m + py) * m + px];
            }
            inv.process_with_scratch(&mut line, &mut scratch);
            for z in 0..m {
                buf[(z * m + py) * m + px] = line[z];
            }
        }
    }
    // y lines only where x is in band
    for z in 0..m {
        for &px in &pos {
            for y in 0..m {
                line[y] = buf[(z * m + y) * m + px];
            }
            inv.process_with_scratch(&mut line, &mut scratch);
            for y in 0..m {
                buf[(z * m + y) * m + px] = line[y];
            }
        }
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); inv.get_inplace_scratch_len()];
    inv.process_with_scratch(&mut buf, &mut scratch);
    let re = buf.iter().map(|c| c.re).collect();
    let im = b.map(|_| buf.iter().map(|c| c.im).collect());
    (re, im)
}

/// Forward transform of one or two real lattice fields (`m³` samples) onto
/// the retained band, normalized so that `f(x) = Σ c_k e^{ik·x}`. Outputs are
/// exactly conjugate-symmetric.
pub(crate) fn lattice_to_band(
    grid: &Grid,
    a: &[f64],
    b: Option<&[f64]>,
    m: usize,
) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
    let nb = grid.band_width();
    let pos = grid.band_positions(m);
    let mut buf: Vec<Complex64> = match b {
        Some(b) => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect(),
        None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    };
    let (fwd, _) = grid.plans(m);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
    fwd.process_with_scratch(&mut buf, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for z in 0..m {
        for &px in &pos {
            for y in 0..m {
                line[y] = buf[(z * m + y) * m + px];
            }
            fwd.process_with_scratch(&mut line, &mut scratch);
            for y in 0..m {
                buf[(z * m + y) * m + px] = line[y];
            }
        }
    }
    for &py in &pos {
        for &px in &pos {
            for z in 0..m {
                line[z] = buf[(z * m + py) * m + px];
            }
            fwd.process_with_scratch(&mut line, &mut scratch);
            for z in 0..m {
                buf[(z * m + py) * m + px] = line[z];
            }
        }
    }
    let scale = 1.0 / (m * m * m) as f64;
    let len = nb * nb * nb;
    let mut z = Vec::with_capacity(len);
    for bz in 0..nb {
        for by in 0..nb {
            let row = (pos[bz] * m + pos[by]) * m;
            for bx in 0..nb {
                z.push(buf[row + pos[bx]] * scale);
            }
        }
    }
    let half = Complex64::new(0.5, 0.0);
    let mut ca = Vec::with_capacity(len);
    let mut cb = b.map(|_| Vec::with_capacity(len));
    for i in 0..len {
        let zi = z[i];
        let zp = z[len - 1 - i].conj();
        ca.push((zi + zp) * half);
        if let Some(cb) = cb.as_mut() {
            cb.push(Complex64::new(0.0, -0.5) * (zi - zp));
        }
    }
    (ca, cb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(24, 1.0, 0.5).is_err());
        assert!(Grid::new(8, 1.0, 0.5).is_err());
        assert!(Grid::new(16, 0.0, 0.5).is_err());
        assert!(Grid::new(16, -1.0, 0.5).is_err());
        assert!(Grid::new(16, 1.0, 0.0).is_err());
        assert!(Grid::new(16, 1.0, 1.5).is_err());
    }

    #[test]
    fn two_thirds_band_at_32() {
        let g = Grid::new(32, 2.0 * PI, 2.0 / 3.0).unwrap();
        assert_eq!(g.band_radius(), 10);
        assert!((g.max_axis_wavenumber() - 10.0).abs() < 1e-12);
        assert!((g.k_max() - 32.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dealias_disabled_keeps_up_to_nyquist() {
        let g = Grid::new(16, 2.0 * PI, 1.0).unwrap();
        assert_eq!(g.band_radius(), 7);
        assert!((g.k_max() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn box_length_sets_fundamental() {
        let g = Grid::new(16, 4.0 * PI, 2.0 / 3.0).unwrap();
        assert!((g.k0() - 0.5).abs() < 1e-15);
        let idx = g.mode_index([1, 0, 0]).unwrap();
        assert!((g.wavevector(idx)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn index_roundtrip_and_partner() {
        let g = Grid::standard(16).unwrap();
        for idx in [0, 17, 200, g.band_len() - 1] {
            let m = g.signed_index(idx);
            assert_eq!(g.mode_index(m), Some(idx));
            let p = g.signed_index(g.partner(idx));
            assert_eq!(p, m.map(|v| -v));
        }
        assert_eq!(g.signed_index(g.zero_mode()), [0, 0, 0]);
    }
}
