//! Linear cascade `u = u_{1L} + … + u_{mL} + v`.
//!
//! Layer one is the heat flow of the data; layer `k + 1` is the Duhamel
//! response to `u_{kL} ⊗ u_{kL} + Σ_{i<k} (u_{iL} ⊗ u_{kL} + u_{kL} ⊗ u_{iL})`.
//! The remainder `v` solves the perturbed system with zero data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::littlewood_paley::DyadicPartition;
use crate::norms::{besov_norm, lp_norm, BesovParams, NormReport};
use crate::spectral::{
    gradient_tensor, heat_semigroup, laplacian, projected_divergence, relative_divergence,
    symmetric_tensor_from_physical,
};
use crate::trajectory::Trajectory;

/// `(1 - e^{-z})/z` and `(z - 1 + e^{-z})/z²`.
pub fn phi_weights(z: f64) -> (f64, f64) {
    if z < 0.5 {
        // alternating series, 24 terms is far below rounding for z < 1/2
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut term1 = 1.0; // (-z)^n/(n+1)!
        let mut term2 = 0.5; // (-z)^n/(n+2)!
        for n in 0..24 {
            p1 += term1;
            p2 += term2;
            term1 *= -z / (n as f64 + 2.0);
            term2 *= -z / (n as f64 + 3.0);
        }
        (p1, p2)
    } else {
        let e = (-z).exp();
        ((1.0 - e) / z, (z - 1.0 + e) / (z * z))
    }
}

/// Streams `I(t) = ∫_0^t e^{(t-s)Δ} G(s) ds` for a vector forcing `G` given
/// at increasing times, treating `G` as piecewise linear in `s` and the heat
/// factor exactly, mode by mode.
#[derive(Clone, Debug)]
pub struct DuhamelStepper {
    grid: Grid,
    time: f64,
    value: Field,
    last: Field,
    cache: Option<(f64, Vec<[f64; 3]>)>,
}

impl DuhamelStepper {
    pub fn new(t0: f64, g0: Field) -> Self {
        let grid = g0.grid().clone();
        let value = Field::zeros(&grid, g0.ncomp());
        DuhamelStepper {
            grid,
            time: t0,
            value,
            last: g0,
            cache: None,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn value(&self) -> &Field {
        &self.value
    }

    fn weights(&mut self, h: f64) -> &[[f64; 3]] {
        let fresh = !matches!(&self.cache, Some((hc, _)) if hc.to_bits() == h.to_bits());
        if fresh {
            let w = self
                .grid
                .ksq()
                .iter()
                .map(|&k2| {
                    let z = k2 * h;
                    let (p1, p2) = phi_weights(z);
                    [(-z).exp(), h * (p1 - p2), h * p2]
                })
                .collect();
            self.cache = Some((h, w));
        }
        &self.cache.as_ref().expect("filled above").1
    }

    /// Advances to `t` where the forcing equals `g`.
    pub fn advance(&mut self, t: f64, g: Field) -> Result<()> {
        let h = t - self.time;
        if !(h > 0.0) {
            return Err(Error::SamplingMismatch(format!("step to {t} from {}", self.time)));
        }
        self.last.check_compatible(&g)?;
        let len = self.grid.band_len();
        let ncomp = g.ncomp();
        let w = self.weights(h).to_vec();
        let prev = std::mem::replace(&mut self.last, g);
        let cur = &self.last;
        let out = self.value.coeffs_mut();
        for c in 0..ncomp {
            for idx in 0..len {
                let [e, w0, w1] = w[idx];
                let k = c * len + idx;
                out[k] = out[k] * e + prev.coeffs()[k] * w0 + cur.coeffs()[k] * w1;
            }
        }
        self.time = t;
        Ok(())
    }
}

/// `-∫_0^t e^{(t-s)Δ} ℙ∇·F(s) ds` for a tensor trajectory `F`.
pub fn duhamel_integral(forcing: &Trajectory, t: f64) -> Result<Field> {
    let first = forcing.first()?;
    first.expect_components(9)?;
    let times = forcing.times();
    let (lo, hi) = (times[0], *times.last().expect("nonempty"));
    if t < lo || t > hi {
        return Err(Error::TimeOutOfSpan { t, lo, hi });
    }
    let source = |f: &Field| -> Result<Field> { Ok(projected_divergence(f)?.scaled(-1.0)) };
    let mut stepper = DuhamelStepper::new(lo, source(first)?);
    for i in 1..forcing.len() {
        let ti = times[i];
        if ti <= t {
            stepper.advance(ti, source(forcing.field(i))?)?;
        } else {
            // partial step against the linearly interpolated forcing
            if t > stepper.time() {
                let theta = (t - times[i - 1]) / (ti - times[i - 1]);
                let mut g = forcing.field(i - 1).scaled(1.0 - theta);
                g.axpy(theta, forcing.field(i))?;
                stepper.advance(t, source(&g)?)?;
            }
            break;
        }
    }
    Ok(stepper.value.clone())
}

/// Duhamel response at every sample time of `forcing`.
pub fn duhamel_trajectory(forcing: &Trajectory) -> Result<Trajectory> {
    let first = forcing.first()?;
    first.expect_components(9)?;
    let source = |f: &Field| -> Result<Field> { Ok(projected_divergence(f)?.scaled(-1.0)) };
    let mut stepper = DuhamelStepper::new(forcing.time(0), source(first)?);
    let mut out = Trajectory::new();
    out.push(forcing.time(0), stepper.value().clone())?;
    for i in 1..forcing.len() {
        stepper.advance(forcing.time(i), source(forcing.field(i))?)?;
        out.push(forcing.time(i), stepper.value().clone())?;
    }
    Ok(out)
}

/// Number of layers used for integrability index `p`.
pub fn layer_count(p: f64) -> usize {
    p.floor() as usize + 3
}

/// The layers `u_{1L}, …, u_{mL}` sampled on common times.
#[derive(Clone, Debug)]
pub struct CascadeState {
    p: f64,
    layers: Vec<Trajectory>,
}

impl CascadeState {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn m(&self) -> usize {
        self.layers.len()
    }

    pub fn times(&self) -> &[f64] {
        self.layers[0].times()
    }

    pub fn grid(&self) -> &Grid {
        self.layers[0].field(0).grid()
    }

    /// Layer `k` (1-based).
    pub fn layer(&self, k: usize) -> Result<&Trajectory> {
        if k == 0 || k > self.layers.len() {
            return Err(Error::param("k", format!("layer {k} outside 1..={}", self.layers.len())));
        }
        Ok(&self.layers[k - 1])
    }

    pub fn layers(&self) -> &[Trajectory] {
        &self.layers
    }

    fn partial(&self, i: usize, upto: usize) -> Field {
        let mut acc = Field::zeros(self.grid(), 3);
        for layer in &self.layers[..upto] {
            acc.axpy(1.0, layer.field(i)).expect("layers share a grid");
        }
        acc
    }

    /// `V₁ = Σ_{k<=m} u_{kL}` at sample `i`.
    pub fn v1(&self, i: usize) -> Field {
        self.partial(i, self.m())
    }

    /// `V₂ = Σ_{k<m} u_{kL}` at sample `i`.
    pub fn v2(&self, i: usize) -> Field {
        self.partial(i, self.m() - 1)
    }

    /// `V₃ = u_{mL}` at sample `i`.
    pub fn v3(&self, i: usize) -> Field {
        self.layers[self.m() - 1].field(i).clone()
    }

    /// Largest relative spectral divergence over all layers and samples.
    pub fn max_divergence(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.fields().iter().map(relative_divergence))
            .fold(0.0, f64::max)
    }
}

/// Forcing of layer `k + 1`: `-ℙ∇·(u_k ⊗ u_k + W ⊗ u_k + u_k ⊗ W)` with
/// `W = Σ_{i<k} u_i`.
fn layer_source(uk: &Field, w: &Field) -> Result<Field> {
    let grid = uk.grid();
    let n3 = grid.physical_len();
    let pu = uk.to_physical();
    let pw = w.to_physical();
    let pair = |a: usize, b: usize| -> Vec<f64> {
        (0..n3)
            .map(|x| pu[a][x] * pu[b][x] + pw[a][x] * pu[b][x] + pu[a][x] * pw[b][x])
            .collect()
    };
    let sym = [pair(0, 0), pair(0, 1), pair(0, 2), pair(1, 1), pair(1, 2), pair(2, 2)];
    let t = symmetric_tensor_from_physical(grid, &sym)?;
    Ok(projected_divergence(&t)?.scaled(-1.0))
}

fn check_data(u0: &Field, p: f64) -> Result<()> {
    u0.expect_components(3)?;
    if !(p > 3.0) {
        return Err(Error::param("p", format!("needs p > 3, got {p}")));
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite("initial data".into()));
    }
    let div = relative_divergence(u0);
    if div > 1e-10 {
        return Err(Error::NotSolenoidal(div));
    }
    Ok(())
}

/// Cascade on a uniform grid of step `dt` (shortened so it divides `horizon`).
pub fn compute_cascade(u0: &Field, p: f64, horizon: f64, dt: f64) -> Result<CascadeState> {
    if !(horizon > 0.0) || !(dt > 0.0) {
        return Err(Error::param("horizon, dt", "must be positive"));
    }
    let k = u0.grid().k_max();
    let bound = 1.0 / (k * k);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let times: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
    compute_cascade_at(u0, p, &times)
}

/// Cascade sampled at arbitrary increasing `times` starting from zero.
pub fn compute_cascade_at(u0: &Field, p: f64, times: &[f64]) -> Result<CascadeState> {
    check_data(u0, p)?;
    if times.first() != Some(&0.0) {
        return Err(Error::SamplingMismatch("cascade times must start at 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::SamplingMismatch("cascade times must increase".into()));
    }
    let m = layer_count(p);
    let mut layers = Vec::with_capacity(m);
    let mut first = Trajectory::new();
    for &t in times {
        first.push(t, heat_semigroup(u0, t)?)?;
    }
    layers.push(first);
    // running sum of the layers below the current one
    let mut below: Vec<Field> = vec![Field::zeros(u0.grid(), 3); times.len()];
    for k in 1..m {
        let current = &layers[k - 1];
        let mut stepper = DuhamelStepper::new(0.0, layer_source(current.field(0), &below[0])?);
        let mut next = Trajectory::new();
        next.push(0.0, Field::zeros(u0.grid(), 3))?;
        for i in 1..times.len() {
            stepper.advance(times[i], layer_source(current.field(i), &below[i])?)?;
            next.push(times[i], stepper.value().clone())?;
        }
        for (b, f) in below.iter_mut().zip(current.fields()) {
            b.axpy(1.0, f)?;
        }
        layers.push(next);
    }
    Ok(CascadeState { p, layers })
}

/// Remainder `v` and the relative residual of its equation.
#[derive(Clone, Debug)]
pub struct Remainder {
    pub v: Trajectory,
    /// `‖residual(t)‖_{L²} / (‖Δu(t)‖_{L²} + ‖ℙ∇·(u⊗u)(t)‖_{L²})` at interior samples.
    pub residual: NormReport,
}

impl Remainder {
    pub fn max_residual(&self) -> Option<f64> {
        self.residual.values.iter().copied().reduce(f64::max)
    }
}

/// `v = u - Σ_k u_{kL}` and the residual of
/// `∂_t v - Δv + ℙ∇·(v⊗v + V₁⊗v + v⊗V₁ + V₃⊗V₁ + V₂⊗V₃) = 0`
/// with three-point time differences.
pub fn remainder_residual(u_traj: &Trajectory, state: &CascadeState) -> Result<Remainder> {
    let layer1 = state.layer(1)?;
    u_traj.check_aligned(layer1)?;
    u_traj.first()?.check_compatible(layer1.field(0))?;
    let mut v = Trajectory::new();
    for (i, (t, u)) in u_traj.iter().enumerate() {
        v.push(t, u.sub(&state.v1(i))?)?;
    }
    let mut residual = NormReport::new("remainder_residual");
    let times = u_traj.times();
    let grid = state.grid().clone();
    let n3 = grid.physical_len();
    for i in 1..times.len().saturating_sub(1) {
        let (h1, h2) = (times[i] - times[i - 1], times[i + 1] - times[i]);
        let mut dv = v.field(i - 1).scaled(-h2 / (h1 * (h1 + h2)));
        dv.axpy((h2 - h1) / (h1 * h2), v.field(i))?;
        dv.axpy(h1 / (h2 * (h1 + h2)), v.field(i + 1))?;

        let pv = v.field(i).to_physical();
        let p1 = state.v1(i).to_physical();
        let p2 = state.v2(i).to_physical();
        let p3 = state.v3(i).to_physical();
        let mut comps = Vec::with_capacity(9);
        for a in 0..3 {
            for b in 0..3 {
                comps.push(
                    (0..n3)
                        .map(|x| {
                            pv[a][x] * pv[b][x]
                                + p1[a][x] * pv[b][x]
                                + pv[a][x] * p1[b][x]
                                + p3[a][x] * p1[b][x]
                                + p2[a][x] * p3[b][x]
                        })
                        .collect::<Vec<f64>>(),
                );
            }
        }
        let nonlinear = projected_divergence(&Field::from_physical(&grid, &comps)?)?;
        let mut r = dv.sub(&laplacian(v.field(i)))?;
        r.axpy(1.0, &nonlinear)?;

        let u = u_traj.field(i);
        let uu = crate::spectral::outer_product(u, u)?;
        let scale = laplacian(u).l2_norm() + projected_divergence(&uu)?.l2_norm();
        let value = if scale > 0.0 { r.l2_norm() / scale } else { r.l2_norm() };
        residual.push(times[i], value)?;
    }
    Ok(Remainder { v, residual })
}

/// Temporal decay fit of one dyadic block of one layer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockDecay {
    pub j: i32,
    /// `-d ln‖Δ̇_j u_{kL}(t)‖ / dt` over the fitting window.
    pub rate: f64,
    /// `rate · 2^{-2j}`.
    pub c_fit: f64,
    /// Fitted `ln‖Δ̇_j u_{kL}‖` extrapolated to `t = 0`.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub k: usize,
    pub r: f64,
    pub blocks: Vec<BlockDecay>,
    /// Slope of the intercepts against `j ln 2`.
    pub spatial_slope: Option<f64>,
    pub spatial_r_squared: Option<f64>,
}

impl DecayFit {
    pub fn block(&self, j: i32) -> Option<&BlockDecay> {
        self.blocks.iter().find(|b| b.j == j)
    }
}

/// Least squares line through `(x, y)`: slope, intercept, R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Per-block exponential decay of layer `k` in `L^r`.
pub fn fit_dyadic_decay(state: &CascadeState, k: usize, r: f64) -> Result<DecayFit> {
    let layer = state.layer(k)?;
    let floor = 3f64.max(state.p() / k as f64);
    if !(r >= floor) {
        return Err(Error::param("r", format!("needs r >= {floor}, got {r}")));
    }
    let part = DyadicPartition::new(state.grid())?;
    let times = layer.times();
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); part.len()];
    for f in layer.fields() {
        for (slot, j) in part.indices().enumerate() {
            series[slot].push(lp_norm(&part.block(f, j)?, r)?);
        }
    }
    let mut blocks = Vec::new();
    for (slot, j) in part.indices().enumerate() {
        let s = &series[slot];
        let peak = s.iter().copied().fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        let floor = 1e-12 * peak;
        let Some(last) = (0..times.len()).rev().find(|&i| s[i] > floor && times[i] > 0.0) else {
            continue;
        };
        let span = times[last];
        let lo = span / 8.0;
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..=last)
            .filter(|&i| times[i] >= lo && s[i] > floor)
            .map(|i| (times[i], s[i].ln()))
            .unzip();
        if xs.len() < 3 {
            continue;
        }
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        let rate = -slope;
        blocks.push(BlockDecay {
            j,
            rate,
            c_fit: rate * 2f64.powi(-2 * j),
            intercept,
            r_squared: r2,
            points: xs.len(),
            window: (lo, span),
        });
    }
    if blocks.is_empty() {
        return Err(Error::InsufficientSignal(format!("no block of layer {k} has 3 usable samples")));
    }
    let (spatial_slope, spatial_r_squared) = if blocks.len() >= 2 {
        let xs: Vec<f64> = blocks.iter().map(|b| b.j as f64 * std::f64::consts::LN_2).collect();
        let ys: Vec<f64> = blocks.iter().map(|b| b.intercept).collect();
        let (s, _, r2) = linear_fit(&xs, &ys);
        (Some(s), Some(r2))
    } else {
        (None, None)
    };
    Ok(DecayFit {
        k,
        r,
        blocks,
        spatial_slope,
        spatial_r_squared,
    })
}

/// Both summands of the `X_T` norm per time and their supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct XNorm {
    pub times: Vec<f64>,
    /// `t^{-1}‖v(t)‖_{Ḃ⁰_{1,∞}}`.
    pub low: Vec<f64>,
    /// `‖v(t)‖_{Ḃ²_{1,∞}}`.
    pub high: Vec<f64>,
    pub sup: f64,
}

impl XNorm {
    pub fn report(&self) -> Result<NormReport> {
        let mut r = NormReport::new("x_norm").with_params(None, Some(1.0), Some(f64::INFINITY), None);
        for i in 0..self.times.len() {
            r.push(self.times[i], self.low[i] + self.high[i])?;
        }
        Ok(r)
    }
}

/// `sup_t [t^{-1}‖v(t)‖_{Ḃ⁰_{1,∞}} + ‖v(t)‖_{Ḃ²_{1,∞}}]` over samples with `t > 0`.
pub fn x_norm(v_traj: &Trajectory, part: &DyadicPartition) -> Result<XNorm> {
    let b0 = BesovParams::new(0.0, 1.0, f64::INFINITY)?;
    let b2 = BesovParams::new(2.0, 1.0, f64::INFINITY)?;
    let mut out = XNorm {
        times: Vec::new(),
        low: Vec::new(),
        high: Vec::new(),
        sup: 0.0,
    };
    for (t, f) in v_traj.iter().filter(|(t, _)| *t > 0.0) {
        let low = besov_norm(f, b0, part)? / t;
        let high = besov_norm(f, b2, part)?;
        out.sup = out.sup.max(low + high);
        out.times.push(t);
        out.low.push(low);
        out.high.push(high);
    }
    Ok(out)
}

/// `sup_t t^{(1-3/q)/2}‖u_{kL}(t)‖_{L^q}` for each layer and each `q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerKato {
    pub k: usize,
    pub q: f64,
    pub value: f64,
}

pub fn layer_kato_profile(state: &CascadeState) -> Result<Vec<LayerKato>> {
    let p = state.p();
    let mut out = Vec::new();
    for k in 1..=state.m() {
        let layer = state.layer(k)?;
        let mut qs = vec![(p / k as f64).max(1.0), p, f64::INFINITY];
        qs.dedup_by(|a, b| a == b);
        for q in qs {
            let weight = if q.is_infinite() { 0.5 } else { 0.5 * (1.0 - 3.0 / q) };
            let mut sup: f64 = 0.0;
            for (t, f) in layer.iter().filter(|(t, _)| *t > 0.0) {
                sup = sup.max(t.powf(weight) * lp_norm(f, q)?);
            }
            out.push(LayerKato { k, q, value: sup });
        }
    }
    Ok(out)
}

/// Energy-type scalars of the remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBound {
    /// `sup_t t^{-1/4}‖v(t)‖_{L²}`.
    pub sup_l2: f64,
    /// `sup_t t^{-1/4}‖∇v‖_{L²(Q_t)}`, time integral by the trapezoid rule.
    pub sup_dissipation: f64,
}

pub fn energy_bound(v_traj: &Trajectory) -> Result<EnergyBound> {
    let mut sup_l2: f64 = 0.0;
    let mut sup_diss: f64 = 0.0;
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, v) in v_traj.iter() {
        let g = gradient_tensor(v)?.l2_norm().powi(2);
        if let Some((tp, gp)) = prev {
            acc += 0.5 * (t - tp) * (g + gp);
        }
        prev = Some((t, g));
        if t > 0.0 {
            let w = t.powf(-0.25);
            sup_l2 = sup_l2.max(w * v.l2_norm());
            sup_diss = sup_diss.max(w * acc.sqrt());
        }
    }
    Ok(EnergyBound {
        sup_l2,
        sup_dissipation: sup_diss,
    })
}
