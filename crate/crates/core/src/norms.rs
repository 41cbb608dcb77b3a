//! Lebesgue, Besov and Kato norms, the hypothesis functionals of the blowup
//! criteria, and empirical constants for the inequalities that connect them.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{magnitude, Field};
use crate::littlewood_paley::DyadicPartition;
use crate::spectral::{gradient_tensor, heat_semigroup, riesz_potential};
use crate::trajectory::Trajectory;

/// Regularity and integrability indices of `Ḃ^s_{p,q}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) || !(q >= 1.0) {
            return Err(Error::param("p, q", format!("need p, q >= 1, got ({p}, {q})")));
        }
        if !s.is_finite() {
            return Err(Error::param("s", "must be finite"));
        }
        Ok(BesovParams { s, p, q })
    }

    /// The scale-invariant index `s = -1 + 3/p`.
    pub fn critical(p: f64, q: f64) -> Result<Self> {
        Self::new(critical_index(p), p, q)
    }
}

pub fn critical_index(p: f64) -> f64 {
    -1.0 + 3.0 / p
}

/// `(Σ |x|^p dV)^{1/p}` or `max |x|` over samples.
pub fn lp_of_samples(samples: &[f64], p: f64, cell_volume: f64) -> f64 {
    if p.is_infinite() {
        samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        let scale = samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let sum: f64 = samples.iter().map(|v| (v.abs() / scale).powf(p)).sum();
        scale * (sum * cell_volume).powf(1.0 / p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::param("p", format!("need p >= 1, got {p}")))
    }
}

/// `‖f‖_{L^p}` of the pointwise magnitude: collocation quadrature for finite
/// `p`, maximum over the 2× padded lattice for `p = ∞`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    check_p(p)?;
    let grid = f.grid();
    if p.is_infinite() {
        let m = 2 * grid.n();
        let vol = grid.volume() / (m * m * m) as f64;
        Ok(lp_of_samples(&f.magnitude_on(m), p, vol))
    } else {
        Ok(lp_of_samples(&f.magnitude_on(grid.n()), p, grid.cell_volume()))
    }
}

/// `‖Δ̇_j f‖_{L^p}` for every block, in partition order.
pub fn block_lp_norms(f: &Field, p: f64, part: &DyadicPartition) -> Result<Vec<(i32, f64)>> {
    check_p(p)?;
    part.indices()
        .map(|j| Ok((j, lp_norm(&part.block(f, j)?, p)?)))
        .collect()
}

/// `ℓ^q` aggregate of a sequence (`q = ∞` is the maximum).
pub fn lq_sum(terms: impl IntoIterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        terms.into_iter().fold(0.0, f64::max)
    } else {
        terms.into_iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `‖(2^{js}‖Δ̇_j f‖_{L^p})_j‖_{ℓ^q}` over the resolvable blocks.
pub fn besov_norm(f: &Field, bp: BesovParams, part: &DyadicPartition) -> Result<f64> {
    let norms = block_lp_norms(f, bp.p, part)?;
    Ok(besov_from_blocks(&norms, bp))
}

pub fn besov_from_blocks(norms: &[(i32, f64)], bp: BesovParams) -> f64 {
    lq_sum(
        norms.iter().map(|&(j, v)| 2f64.powf(j as f64 * bp.s) * v),
        bp.q,
    )
}

/// Kato norm of a sampled trajectory: `sup_t t^{-s/2}‖f(t)‖_{L^p}` for
/// `q = ∞`, otherwise the trapezoid rule in `ln t` applied to the `q`-th power.
pub fn kato_norm(traj: &Trajectory, s: f64, p: f64, q: f64) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(s < 0.0) {
        return Err(Error::param("s", format!("Kato norm needs s < 0, got {s}")));
    }
    check_p(p)?;
    let mut pts = Vec::with_capacity(traj.len());
    for (t, f) in traj.iter() {
        pts.push((t, t.powf(-0.5 * s) * lp_norm(f, p)?));
    }
    Ok(kato_from_samples(&pts, q))
}

/// Kato aggregate from `(t, t^{-s/2}‖f(t)‖)` pairs.
pub fn kato_from_samples(pts: &[(f64, f64)], q: f64) -> f64 {
    if q.is_infinite() {
        return pts.iter().fold(0.0, |m, &(_, v)| m.max(v));
    }
    let pos: Vec<(f64, f64)> = pts.iter().copied().filter(|&(t, _)| t > 0.0).collect();
    if pos.len() < 2 {
        // a single sample carries no measure in dt/t
        return 0.0;
    }
    let mut acc = 0.0;
    for w in pos.windows(2) {
        let h = (w[1].0 / w[0].0).ln();
        acc += 0.5 * h * (w[0].1.powf(q) + w[1].1.powf(q));
    }
    acc.powf(1.0 / q)
}

/// Geometric sample times, `per_decade` per factor of ten, covering
/// `[t_lo, t_hi]` with both ends included.
pub fn geometric_times(t_lo: f64, t_hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (t_hi / t_lo).log10();
    let count = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=count)
        .map(|i| t_lo * (t_hi / t_lo).powf(i as f64 / count as f64))
        .collect()
}

/// Heat-flow sampling window for Kato norms on `grid`: from the squared
/// grid spacing to ten diffusion times of the lowest mode.
pub fn kato_window(grid: &crate::grid::Grid) -> (f64, f64) {
    let h = grid.spacing();
    (h * h, 10.0 / (grid.k0() * grid.k0()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatFlowRatio {
    pub kato: f64,
    pub besov: f64,
    pub ratio: f64,
}

/// Kato norm of `t ↦ e^{tΔ}f` over the geometric window against the Besov
/// norm of `f`; both are homogeneous of degree one in `f`.
pub fn heat_flow_besov_ratio(f: &Field, bp: BesovParams) -> Result<HeatFlowRatio> {
    if !(bp.s < 0.0) {
        return Err(Error::param("s", format!("needs s < 0, got {}", bp.s)));
    }
    let part = DyadicPartition::new(f.grid())?;
    let (lo, hi) = kato_window(f.grid());
    let mut traj = Trajectory::new();
    for t in geometric_times(lo, hi, 8) {
        traj.push(t, heat_semigroup(f, t)?)?;
    }
    let kato = kato_norm(&traj, bp.s, bp.p, bp.q)?;
    let besov = besov_norm(f, bp, &part)?;
    if besov == 0.0 {
        return Err(Error::InsufficientSignal("zero Besov norm".into()));
    }
    Ok(HeatFlowRatio {
        kato,
        besov,
        ratio: kato / besov,
    })
}

/// `|D|^{-1+3/p}|f|` sampled on the collocation lattice, in absolute value.
pub(crate) fn potential_of_magnitude(f: &Field, p: f64) -> Result<Vec<f64>> {
    if !(p > 3.0) {
        return Err(Error::param("p", format!("needs p > 3, got {p}")));
    }
    let grid = f.grid();
    let mag = magnitude(&f.to_physical());
    let g = Field::from_physical(grid, &[mag])?;
    let eta = riesz_potential(&g, 1.0 - 3.0 / p)?;
    Ok(eta.to_physical().swap_remove(0).into_iter().map(f64::abs).collect())
}

/// `∫ η^p / ln(e + η)^a` with `η = |D|^{-1+3/p}|f|`.
pub fn weighted_log_functional(f: &Field, p: f64, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::param("a", format!("needs 0 <= a <= 1, got {a}")));
    }
    let eta = potential_of_magnitude(f, p)?;
    Ok(weighted_log_of_potential(&eta, p, a, f.grid().cell_volume()))
}

pub(crate) fn weighted_log_of_potential(eta: &[f64], p: f64, a: f64, vol: f64) -> f64 {
    eta.iter()
        .map(|&e| e.powf(p) / (std::f64::consts::E + e).ln().powf(a))
        .sum::<f64>()
        * vol
}

/// Unit directions: the 26 face, edge and corner directions of the cube
/// (faces first), then Fibonacci points relaxed by pairwise repulsion.
pub fn sphere_directions(count: usize) -> Result<Vec<[f64; 3]>> {
    if count < 6 {
        return Err(Error::param("n_dirs", format!("need at least 6 directions, got {count}")));
    }
    let mut cube: Vec<[f64; 3]> = Vec::with_capacity(26);
    for order in 1..=3 {
        for z in -1i32..=1 {
            for y in -1i32..=1 {
                for x in -1i32..=1 {
                    if x.abs() + y.abs() + z.abs() == order {
                        cube.push(normalize([x as f64, y as f64, z as f64]));
                    }
                }
            }
        }
    }
    if count <= 26 {
        cube.truncate(count);
        return Ok(cube);
    }
    let extra = count - 26;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut free: Vec<[f64; 3]> = (0..extra)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / extra as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            [r * th.cos(), r * th.sin(), z]
        })
        .collect();
    for _ in 0..30 {
        let snapshot = free.clone();
        for (i, d) in free.iter_mut().enumerate() {
            let mut force = [0.0; 3];
            let others = snapshot
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, o)| o)
                .chain(cube.iter());
            for o in others {
                let diff = [d[0] - o[0], d[1] - o[1], d[2] - o[2]];
                let r2 = diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2] + 1e-9;
                let w = 1.0 / (r2 * r2.sqrt());
                for a in 0..3 {
                    force[a] += w * diff[a];
                }
            }
            let step = 0.02 / (count as f64).sqrt();
            let fnorm = (force[0] * force[0] + force[1] * force[1] + force[2] * force[2]).sqrt();
            if fnorm > 0.0 {
                for a in 0..3 {
                    d[a] += step * force[a] / fnorm;
                }
            }
            *d = normalize(*d);
        }
    }
    cube.extend(free);
    Ok(cube)
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

/// Periodic 1D fractional integral `|D|^{-sigma}` of uniformly spaced
/// samples over a period `length`; the mean is discarded.
pub fn fractional_integral_1d(samples: &[f64], length: f64, sigma: f64) -> Vec<f64> {
    let m = samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let k0 = 2.0 * PI / length;
    for (i, c) in buf.iter_mut().enumerate() {
        let s = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
        if i == 0 || (m % 2 == 0 && i == m / 2) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= (k0 * s.abs()).powf(-sigma) / m as f64;
        }
    }
    inv.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Ray samples of `|f|` along `center + λ e`, `λ ∈ [-L/2, L/2)`.
pub fn ray_samples(f: &Field, e: [f64; 3], count: usize) -> Vec<f64> {
    let l = f.grid().box_length();
    let c = 0.5 * l;
    let pts: Vec<[f64; 3]> = (0..count)
        .map(|i| {
            let lam = -0.5 * l + l * i as f64 / count as f64;
            [c + lam * e[0], c + lam * e[1], c + lam * e[2]]
        })
        .collect();
    magnitude(&f.evaluate(&pts))
}

/// `‖|D|_λ^{-1+1/p}|f|(λe)‖_{L^p(dλ)}^p` along one direction.
pub fn ray_value(f: &Field, p: f64, e: [f64; 3]) -> Result<f64> {
    if !(p > 3.0) {
        return Err(Error::param("p", format!("needs p > 3, got {p}")));
    }
    let count = 4 * f.grid().n();
    let l = f.grid().box_length();
    let g = fractional_integral_1d(&ray_samples(f, e, count), l, 1.0 - 1.0 / p);
    Ok(lp_of_samples(&g, p, l / count as f64).powf(p))
}

/// Maximum of [`ray_value`] over `n_dirs` sampled directions.
pub fn ray_functional(f: &Field, p: f64, n_dirs: usize) -> Result<f64> {
    let dirs = sphere_directions(n_dirs)?;
    let mut best: f64 = 0.0;
    for e in dirs {
        best = best.max(ray_value(f, p, e)?);
    }
    Ok(best)
}

/// Exponents of the `L^r` interpolation between `L²`, `Ḣ¹` and
/// `Ḃ^{-1+3/p}_{p,∞}`.
pub fn interpolation_exponents(p: f64, r: f64) -> Result<[f64; 3]> {
    if !(2.0 < r && r <= 3.0 && 3.0 < p) {
        return Err(Error::param("p, r", format!("need 2 < r <= 3 < p, got p={p}, r={r}")));
    }
    let den = p * r + 2.0 * p - 4.0 * r;
    assert!(den != 0.0, "denominator vanishes only outside the admissible range");
    Ok([
        2.0 * (4.0 * p + r - p * r - 6.0) / den,
        6.0 * (p - r) * (r - 2.0) / (r * den),
        3.0 * p * (r - 2.0) * (r - 2.0) / (r * den),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationCheck {
    pub lhs: f64,
    /// `‖w‖_{L²}`, `‖∇w‖_{L²}`, `‖w‖_{Ḃ^{-1+3/p}_{p,∞}}`.
    pub factors: [f64; 3],
    pub exponents: [f64; 3],
    pub constant: f64,
}

pub fn interpolation_check(w: &Field, p: f64, r: f64) -> Result<InterpolationCheck> {
    let exponents = interpolation_exponents(p, r)?;
    let part = DyadicPartition::new(w.grid())?;
    let lhs = lp_norm(w, r)?;
    let grad = if w.ncomp() == 3 {
        gradient_tensor(w)?
    } else {
        crate::spectral::gradient(w)?
    };
    let factors = [
        lp_norm(w, 2.0)?,
        lp_norm(&grad, 2.0)?,
        besov_norm(w, BesovParams::critical(p, f64::INFINITY)?, &part)?,
    ];
    let rhs: f64 = factors.iter().zip(&exponents).map(|(f, a)| f.powf(*a)).product();
    if rhs == 0.0 {
        return Err(Error::InsufficientSignal("vanishing interpolation factors".into()));
    }
    Ok(InterpolationCheck {
        lhs,
        factors,
        exponents,
        constant: lhs / rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BernsteinCheck {
    /// `‖∇u‖_{L^p} / (2^j ‖u‖_{L^p})`.
    pub gradient_ratio: f64,
    /// `‖u‖_{L^q} / (2^{3j(1/p - 1/q)} ‖u‖_{L^p})`.
    pub lq_ratio: f64,
}

/// Bernstein ratios for a field localized at scale `2^j`.
pub fn bernstein_check(u: &Field, j: i32, p: f64, q: f64) -> Result<BernsteinCheck> {
    check_p(p)?;
    check_p(q)?;
    let grad = if u.ncomp() == 3 {
        gradient_tensor(u)?
    } else {
        crate::spectral::gradient(u)?
    };
    let base = lp_norm(u, p)?;
    if base == 0.0 {
        return Err(Error::InsufficientSignal("zero field".into()));
    }
    let scale = 2f64.powi(j);
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    Ok(BernsteinCheck {
        gradient_ratio: lp_norm(&grad, p)? / (scale * base),
        lq_ratio: lp_norm(u, q)? / (scale.powf(3.0 * (inv(p) - inv(q))) * base),
    })
}

/// Empirical constant of `‖f‖_{Ḃ^{s-3(1/p1-1/p2)}_{p2,∞}} <= C ‖f‖_{Ḃ^s_{p1,∞}}`.
pub fn embedding_constant(f: &Field, s: f64, p1: f64, p2: f64, part: &DyadicPartition) -> Result<f64> {
    if !(p1 <= p2) {
        return Err(Error::param("p1, p2", "need p1 <= p2"));
    }
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let lhs = besov_norm(
        f,
        BesovParams::new(s - 3.0 * (inv(p1) - inv(p2)), p2, f64::INFINITY)?,
        part,
    )?;
    let rhs = besov_norm(f, BesovParams::new(s, p1, f64::INFINITY)?, part)?;
    if rhs == 0.0 {
        return Err(Error::InsufficientSignal("zero field".into()));
    }
    Ok(lhs / rhs)
}

/// Per-time norm values with the parameters that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub norm_kind: String,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub a: Option<f64>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Shortest round-tripping text for a float, `inf` for infinity.
pub fn format_real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl NormReport {
    pub fn new(norm_kind: impl Into<String>) -> Self {
        NormReport {
            norm_kind: norm_kind.into(),
            s: None,
            p: None,
            q: None,
            a: None,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn with_params(mut self, s: Option<f64>, p: Option<f64>, q: Option<f64>, a: Option<f64>) -> Self {
        self.s = s;
        self.p = p;
        self.q = q;
        self.a = a;
        self
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NonFinite(format!(
                "{} value {value} at t = {t}",
                self.norm_kind
            )));
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let opt = |x: Option<f64>| x.map(format_real).unwrap_or_default();
        w.write_record(["time", "value", "norm_kind", "s", "p", "q", "a"])?;
        let params = [opt(self.s), opt(self.p), opt(self.q), opt(self.a)];
        for (&t, &v) in self.times.iter().zip(&self.values) {
            w.write_record([
                format_real(t).as_str(),
                format_real(v).as_str(),
                self.norm_kind.as_str(),
                params[0].as_str(),
                params[1].as_str(),
                params[2].as_str(),
                params[3].as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Norm report of `‖f(t)‖_{L^p}` along a trajectory.
pub fn lp_report(traj: &Trajectory, p: f64) -> Result<NormReport> {
    let mut r = NormReport::new("lp").with_params(None, Some(p), None, None);
    for (t, f) in traj.iter() {
        r.push(t, lp_norm(f, p)?)?;
    }
    Ok(r)
}

/// Norm report of `‖f(t)‖_{Ḃ^s_{p,q}}` along a trajectory.
pub fn besov_report(traj: &Trajectory, bp: BesovParams) -> Result<NormReport> {
    let part = DyadicPartition::new(traj.first()?.grid())?;
    let mut r = NormReport::new("besov").with_params(Some(bp.s), Some(bp.p), Some(bp.q), None);
    for (t, f) in traj.iter() {
        r.push(t, besov_norm(f, bp, &part)?)?;
    }
    Ok(r)
}

/// Norm report of the weighted-log functional along a trajectory.
pub fn weighted_log_report(traj: &Trajectory, p: f64, a: f64) -> Result<NormReport> {
    let mut r = NormReport::new("weighted_log").with_params(None, Some(p), None, Some(a));
    for (t, f) in traj.iter() {
        r.push(t, weighted_log_functional(f, p, a)?)?;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_field_lp() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |_| vec![-3.0]).unwrap();
        let vol = (2.0 * PI).powi(3);
        for p in [1.0, 2.0, 4.0] {
            let v = lp_norm(&f, p).unwrap();
            assert!((v - 3.0 * vol.powf(1.0 / p)).abs() < 1e-12 * v);
        }
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 3.0).abs() < 1e-12);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn sine_l2() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |x| vec![x[0].sin()]).unwrap();
        let expect = (2.0 * PI).powf(1.5) / 2f64.sqrt();
        assert!((lp_norm(&f, 2.0).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn exponents_at_four_three() {
        let a = interpolation_exponents(4.0, 3.0).unwrap();
        assert!((a[0] - 0.25).abs() < 1e-15);
        assert!((a[1] - 0.25).abs() < 1e-15);
        assert!((a[2] - 0.5).abs() < 1e-15);
        assert!(interpolation_exponents(3.0, 3.0).is_err());
        assert!(interpolation_exponents(4.0, 2.0).is_err());
    }

    #[test]
    fn kato_single_sample_and_zero() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(&g, 1, |x| vec![x[1].cos()]).unwrap();
        let t = 0.3;
        let mut traj = Trajectory::new();
        traj.push(t, f.clone()).unwrap();
        let s = -0.25;
        let v = kato_norm(&traj, s, 4.0, f64::INFINITY).unwrap();
        let expect = t.powf(0.125) * lp_norm(&f, 4.0).unwrap();
        assert!((v - expect).abs() < 1e-14 * expect);
        let mut z = Trajectory::new();
        z.push(0.1, Field::zeros(&g, 1)).unwrap();
        z.push(0.2, Field::zeros(&g, 1)).unwrap();
        assert_eq!(kato_norm(&z, s, 4.0, 2.0).unwrap(), 0.0);
        assert!(kato_norm(&Trajectory::new(), s, 4.0, 2.0).is_err());
        assert!(kato_norm(&traj, 0.1, 4.0, 2.0).is_err());
    }

    #[test]
    fn direction_sets() {
        assert!(sphere_directions(5).is_err());
        let d = sphere_directions(6).unwrap();
        assert_eq!(d.len(), 6);
        let d = sphere_directions(40).unwrap();
        assert_eq!(d.len(), 40);
        for e in &d {
            assert!(((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fractional_integral_of_cosine() {
        let m = 64;
        let l = 2.0 * PI;
        let s: Vec<f64> = (0..m).map(|i| 2.0 + (3.0 * l * i as f64 / m as f64).cos()).collect();
        let g = fractional_integral_1d(&s, l, 0.5);
        for (i, v) in g.iter().enumerate() {
            let x = l * i as f64 / m as f64;
            assert!((v - (3.0 * x).cos() / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn report_rejects_negative() {
        let mut r = NormReport::new("lp");
        assert!(r.push(0.0, -1.0).is_err());
        assert!(r.push(0.0, f64::NAN).is_err());
        r.push(0.0, 1.0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,value,norm_kind,s,p,q,a\n"));
    }
}
