//! Fourier multipliers on the periodic box: Leray projection, heat
//! semigroup, Riesz potentials and spectral differentiation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type ScalarSymbol = dyn Fn([f64; 3]) -> Complex64 + Send + Sync;
type MatrixSymbol = dyn Fn([f64; 3]) -> [[Complex64; 3]; 3] + Send + Sync;

pub enum Symbol {
    Scalar(Box<ScalarSymbol>),
    Matrix(Box<MatrixSymbol>),
}

/// Fourier multiplier `T_m f = F⁻¹(m(ξ) f̂(ξ))`.
pub struct Multiplier {
    symbol: Symbol,
    radial: bool,
    projection: bool,
}

impl Multiplier {
    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Send + Sync + 'static,
    {
        Multiplier {
            symbol: Symbol::Scalar(Box::new(f)),
            radial: false,
            projection: false,
        }
    }

    /// Real radial symbol `m(|ξ|)`.
    pub fn radial<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Multiplier {
            symbol: Symbol::Scalar(Box::new(move |k: [f64; 3]| {
                Complex64::new(f((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()), 0.0)
            })),
            radial: true,
            projection: false,
        }
    }

    pub fn matrix<F>(f: F) -> Self
    where
        F: Fn([f64; 3]) -> [[Complex64; 3]; 3] + Send + Sync + 'static,
    {
        Multiplier {
            symbol: Symbol::Matrix(Box::new(f)),
            radial: false,
            projection: false,
        }
    }

    /// Flags a matrix symbol as an orthogonal projection (checked by
    /// [`Multiplier::check_projection`]).
    pub fn as_projection(mut self) -> Self {
        self.projection = true;
        self
    }

    /// The Leray symbol `I - k kᵀ/|k|²` (identity on the zero mode).
    pub fn leray() -> Self {
        Multiplier::matrix(|k| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let mut m = [[ZERO; 3]; 3];
            for (a, row) in m.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let proj = if k2 > 0.0 { k[a] * k[b] / k2 } else { 0.0 };
                    *v = Complex64::new(delta - proj, 0.0);
                }
            }
            m
        })
        .as_projection()
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    pub fn is_projection(&self) -> bool {
        self.projection
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    /// For symbols flagged as projections: largest deviation of `M² - M` and
    /// `Mᴴ - M` over the band of `grid`. Returns 0 for unflagged symbols.
    pub fn check_projection(&self, grid: &Grid) -> f64 {
        let Symbol::Matrix(f) = &self.symbol else {
            return 0.0;
        };
        if !self.projection {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for idx in 0..grid.band_len() {
            let m = f(grid.wavevector(idx));
            for a in 0..3 {
                for b in 0..3 {
                    let sq: Complex64 = (0..3).map(|c| m[a][c] * m[c][b]).sum();
                    worst = worst.max((sq - m[a][b]).norm());
                    worst = worst.max((m[b][a].conj() - m[a][b]).norm());
                }
            }
        }
        worst
    }
}

/// Applies `m` mode by mode. Rejects symbols that are non-finite on the band
/// or whose output is not conjugate symmetric.
pub fn apply_multiplier(f: &Field, m: &Multiplier) -> Result<Field> {
    let grid = f.grid().clone();
    let len = grid.band_len();
    let mut out = Field::zeros(&grid, f.ncomp());
    match &m.symbol {
        Symbol::Scalar(sym) => {
            for idx in 0..len {
                let s = sym(grid.wavevector(idx));
                if !(s.re.is_finite() && s.im.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "symbol at mode {:?}",
                        grid.signed_index(idx)
                    )));
                }
                for c in 0..f.ncomp() {
                    out.comp_mut(c)[idx] = s * f.comp(c)[idx];
                }
            }
        }
        Symbol::Matrix(sym) => {
            f.expect_components(3)?;
            for idx in 0..len {
                let s = sym(grid.wavevector(idx));
                if s.iter().flatten().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::NonFinite(format!(
                        "symbol at mode {:?}",
                        grid.signed_index(idx)
                    )));
                }
                let v = [f.comp(0)[idx], f.comp(1)[idx], f.comp(2)[idx]];
                for (a, row) in s.iter().enumerate() {
                    out.comp_mut(a)[idx] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
                }
            }
        }
    }
    let scale = f.max_abs_coeff();
    if scale > 0.0 {
        let defect = out.hermitian_defect() * out.max_abs_coeff() / scale;
        if defect > 1e-12 {
            return Err(Error::NonHermitian(defect));
        }
    }
    Ok(out)
}

/// Leray projection onto divergence-free fields; the mean passes through.
pub fn leray_project(f: &Field) -> Result<Field> {
    f.expect_components(3)?;
    let mut out = f.clone();
    leray_in_place(&mut out);
    Ok(out)
}

pub(crate) fn leray_in_place(f: &mut Field) {
    let grid = f.grid().clone();
    let len = grid.band_len();
    let (head, rest) = f.coeffs_mut().split_at_mut(len);
    let (mid, tail) = rest.split_at_mut(len);
    let ksq = grid.ksq();
    for idx in 0..len {
        if ksq[idx] == 0.0 {
            continue;
        }
        let k = grid.wavevector(idx);
        let dot = (head[idx] * k[0] + mid[idx] * k[1] + tail[idx] * k[2]) / ksq[idx];
        head[idx] -= dot * k[0];
        mid[idx] -= dot * k[1];
        tail[idx] -= dot * k[2];
    }
}

/// `e^{tΔ} f`.
pub fn heat_semigroup(f: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("heat time must be >= 0, got {t}")));
    }
    let mut out = f.clone();
    let ksq = f.grid().ksq();
    let len = ksq.len();
    let factors: Vec<f64> = ksq.iter().map(|&k2| (-k2 * t).exp()).collect();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= factors[i % len];
    }
    Ok(out)
}

/// `|D|^{-σ} g` for `0 < σ < 3`; the zero mode is annihilated.
pub fn riesz_potential(g: &Field, sigma: f64) -> Result<Field> {
    if !(sigma > 0.0 && sigma < 3.0) {
        return Err(Error::param(
            "sigma",
            format!("Riesz order must lie in (0, 3), got {sigma}"),
        ));
    }
    let mut out = g.clone();
    let ksq = g.grid().ksq();
    let len = ksq.len();
    let factors: Vec<f64> = ksq
        .iter()
        .map(|&k2| if k2 > 0.0 { k2.powf(-0.5 * sigma) } else { 0.0 })
        .collect();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= factors[i % len];
    }
    Ok(out)
}

/// `(-Δ)^{-1}`, annihilating the mean.
pub fn inverse_laplacian(g: &Field) -> Field {
    let mut out = g.clone();
    let ksq = g.grid().ksq();
    let len = ksq.len();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let k2 = ksq[i % len];
        *c = if k2 > 0.0 { *c / k2 } else { ZERO };
    }
    out
}

pub fn laplacian(f: &Field) -> Field {
    let mut out = f.clone();
    let ksq = f.grid().ksq();
    let len = ksq.len();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= -ksq[i % len];
    }
    out
}

/// Spectral derivative of every component along `axis`.
pub fn partial(f: &Field, axis: usize) -> Result<Field> {
    if axis > 2 {
        return Err(Error::param("axis", format!("axis must be 0, 1 or 2, got {axis}")));
    }
    let grid = f.grid().clone();
    let len = grid.band_len();
    let mut out = f.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= I * grid.wavevector(i % len)[axis];
    }
    Ok(out)
}

/// Gradient of a scalar field.
pub fn gradient(f: &Field) -> Result<Field> {
    f.expect_components(1)?;
    Field::from_components(&[partial(f, 0)?, partial(f, 1)?, partial(f, 2)?])
}

/// Gradient tensor of a vector field, component `3 a + b` holding `∂_a u_b`.
pub fn gradient_tensor(u: &Field) -> Result<Field> {
    u.expect_components(3)?;
    let grid = u.grid().clone();
    let len = grid.band_len();
    let mut out = Field::zeros(&grid, 9);
    for idx in 0..len {
        let k = grid.wavevector(idx);
        for a in 0..3 {
            for b in 0..3 {
                out.comp_mut(3 * a + b)[idx] = I * k[a] * u.comp(b)[idx];
            }
        }
    }
    Ok(out)
}

pub fn divergence(u: &Field) -> Result<Field> {
    u.expect_components(3)?;
    let grid = u.grid().clone();
    let len = grid.band_len();
    let mut out = Field::zeros(&grid, 1);
    for idx in 0..len {
        let k = grid.wavevector(idx);
        out.comp_mut(0)[idx] =
            I * (k[0] * u.comp(0)[idx] + k[1] * u.comp(1)[idx] + k[2] * u.comp(2)[idx]);
    }
    Ok(out)
}

pub fn curl(u: &Field) -> Result<Field> {
    u.expect_components(3)?;
    let grid = u.grid().clone();
    let len = grid.band_len();
    let mut out = Field::zeros(&grid, 3);
    for idx in 0..len {
        let k = grid.wavevector(idx);
        let v = [u.comp(0)[idx], u.comp(1)[idx], u.comp(2)[idx]];
        out.comp_mut(0)[idx] = I * (k[1] * v[2] - k[2] * v[1]);
        out.comp_mut(1)[idx] = I * (k[2] * v[0] - k[0] * v[2]);
        out.comp_mut(2)[idx] = I * (k[0] * v[1] - k[1] * v[0]);
    }
    Ok(out)
}

/// Divergence of a 3×3 tensor field (component `3 j + i` holding `F_{ji}`):
/// `(∇·F)_i = Σ_j ∂_j F_{ji}`.
pub fn tensor_divergence(f: &Field) -> Result<Field> {
    f.expect_components(9)?;
    let grid = f.grid().clone();
    let len = grid.band_len();
    let mut out = Field::zeros(&grid, 3);
    for idx in 0..len {
        let k = grid.wavevector(idx);
        for i in 0..3 {
            let mut acc = ZERO;
            for (j, kj) in k.iter().enumerate() {
                acc += f.comp(3 * j + i)[idx] * *kj;
            }
            out.comp_mut(i)[idx] = I * acc;
        }
    }
    Ok(out)
}

/// `ℙ∇·F` for a 3×3 tensor field.
pub fn projected_divergence(f: &Field) -> Result<Field> {
    let mut out = tensor_divergence(f)?;
    leray_in_place(&mut out);
    Ok(out)
}

/// Dealiased outer product `a ⊗ b` (component `3 j + i` holds `a_j b_i`).
pub fn outer_product(a: &Field, b: &Field) -> Result<Field> {
    a.expect_components(3)?;
    b.expect_components(3)?;
    a.grid().check_same(b.grid())?;
    let pa = a.to_physical();
    let pb = b.to_physical();
    let n3 = a.grid().physical_len();
    let mut comps = Vec::with_capacity(9);
    for j in 0..3 {
        for i in 0..3 {
            comps.push((0..n3).map(|x| pa[j][x] * pb[i][x]).collect::<Vec<f64>>());
        }
    }
    Field::from_physical(a.grid(), &comps)
}

/// Dealiased pointwise product of two scalar fields.
pub fn product(a: &Field, b: &Field) -> Result<Field> {
    a.expect_components(1)?;
    b.expect_components(1)?;
    a.grid().check_same(b.grid())?;
    let pa = a.to_physical();
    let pb = b.to_physical();
    let p: Vec<f64> = pa[0].iter().zip(&pb[0]).map(|(x, y)| x * y).collect();
    Field::from_physical(a.grid(), &[p])
}

/// Symmetric tensor built from collocation samples `sym[(i, j)]` for
/// `i <= j`, given in the order xx, xy, xz, yy, yz, zz.
pub(crate) fn symmetric_tensor_from_physical(grid: &Grid, sym: &[Vec<f64>; 6]) -> Result<Field> {
    let six = Field::from_physical(grid, sym)?;
    let map = [0, 1, 2, 1, 3, 4, 2, 4, 5];
    let mut out = Field::zeros(grid, 9);
    for (c, &s) in map.iter().enumerate() {
        out.comp_mut(c).copy_from_slice(six.comp(s));
    }
    Ok(out)
}

/// `-ℙ∇·(u ⊗ u)` computed pseudospectrally with 2/3-rule truncation, from
/// collocation samples of `u`.
pub(crate) fn advection_from_physical(grid: &Grid, u: &[Vec<f64>]) -> Result<Field> {
    let n3 = grid.physical_len();
    let prod = |a: usize, b: usize| -> Vec<f64> { (0..n3).map(|x| u[a][x] * u[b][x]).collect() };
    let sym = [prod(0, 0), prod(0, 1), prod(0, 2), prod(1, 1), prod(1, 2), prod(2, 2)];
    let t = symmetric_tensor_from_physical(grid, &sym)?;
    let mut out = projected_divergence(&t)?;
    out.scale(-1.0);
    Ok(out)
}

/// `λ f(λ x)` realized on the box of length `L/λ` with the same lattice:
/// the coefficients scale by `λ` and every wavenumber by `λ`.
pub fn parabolic_dilation(f: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let g = f.grid();
    let target = Grid::new(g.n(), g.box_length() / lambda, g.dealias_fraction())?;
    Ok(f.regrid(&target)?.scaled(lambda))
}

/// Relative spectral divergence `‖k·f̂‖ / (‖k‖‖f̂‖)` of a vector field.
pub fn relative_divergence(u: &Field) -> f64 {
    let grid = u.grid();
    let mut num = 0.0;
    let mut den = 0.0;
    for idx in 0..grid.band_len() {
        let k = grid.wavevector(idx);
        let v = [u.comp(0)[idx], u.comp(1)[idx], u.comp(2)[idx]];
        num += (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]).norm_sqr();
        den += grid.ksq()[idx] * (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr());
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}
