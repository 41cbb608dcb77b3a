//! Blowup-criterion quantities: the constant ladder, log-domain bound
//! evaluators, and scans for frequency concentration, bounded speed, epochs
//! and annuli of regularity.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::cascade::linear_fit;
use crate::error::{Error, Result};
use crate::field::{magnitude, Field};
use crate::grid::Grid;
use crate::littlewood_paley::DyadicPartition;
use crate::norms::{
    besov_norm, format_real, lp_norm, lp_of_samples, potential_of_magnitude,
    weighted_log_of_potential, BesovParams,
};
use crate::spectral::{curl, gradient_tensor, heat_semigroup, projected_divergence};
use crate::tower::Tower;
use crate::trajectory::Trajectory;

/// `M₀ = M` and `M_i = M_{i-1}^{c_p}` for `i = 1..=6`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantLadder {
    c_p: f64,
    d_p: f64,
    levels: [Tower; 7],
}

impl ConstantLadder {
    pub fn new(m: f64, c_p: f64, d_p: f64) -> Result<Self> {
        if !(m >= 2.0) || !m.is_finite() {
            return Err(Error::param("M", format!("needs 2 <= M < inf, got {m}")));
        }
        if !(c_p >= 1.0) || !c_p.is_finite() {
            return Err(Error::param("c_p", format!("needs c_p >= 1, got {c_p}")));
        }
        if !(d_p > 1.0) || !d_p.is_finite() {
            return Err(Error::param("d_p", format!("needs d_p > 1, got {d_p}")));
        }
        let mut levels = [Tower::new(m); 7];
        for i in 1..7 {
            levels[i] = levels[i - 1].pow(c_p);
        }
        Ok(ConstantLadder { c_p, d_p, levels })
    }

    /// `c_p = 2`, `d_p = 10`.
    pub fn standard(m: f64) -> Result<Self> {
        Self::new(m, 2.0, 10.0)
    }

    pub fn c_p(&self) -> f64 {
        self.c_p
    }

    pub fn d_p(&self) -> f64 {
        self.d_p
    }

    /// `M_i`, `0 <= i <= 6`.
    pub fn level(&self, i: usize) -> Tower {
        self.levels[i]
    }

    /// `M_i` as a float (`+∞` past the `f64` range).
    pub fn value(&self, i: usize) -> f64 {
        self.levels[i].to_f64()
    }

    /// `M_i^{c_p} <= M_{i+1} <= M_i^{d_p c_p}` at every rung, compared in
    /// logarithms with a relative slack of `1e-12`.
    pub fn check_invariants(&self) -> bool {
        (0..6).all(|i| {
            let (lo, hi) = (self.levels[i].ln(), self.levels[i + 1].ln());
            match (lo, hi) {
                (Some(lo), Some(hi)) => {
                    lo.mul_const(self.c_p * (1.0 - 1e-12)) <= hi
                        && hi <= lo.mul_const(self.d_p * self.c_p * (1.0 + 1e-12))
                }
                _ => false,
            }
        })
    }
}

pub fn constant_ladder(m: f64, c_p: f64, d_p: f64) -> Result<ConstantLadder> {
    ConstantLadder::new(m, c_p, d_p)
}

/// A nonnegative value with its iterated logarithms. Logarithms that leave
/// the reals (`ln` of something below one) are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogBound {
    pub tower: Tower,
    pub value: f64,
    pub ln: f64,
    pub lnln: Option<f64>,
    pub lnlnln: Option<f64>,
}

impl LogBound {
    pub fn from_tower(tower: Tower) -> Self {
        let real = |x: f64| if x.is_nan() { None } else { Some(x) };
        LogBound {
            tower,
            value: tower.to_f64(),
            ln: tower.ln_f64(),
            lnln: real(tower.iterated_ln(2)),
            lnlnln: real(tower.iterated_ln(3)),
        }
    }

    /// `x <= self` compared exactly in the log domain.
    pub fn dominates(&self, x: f64) -> bool {
        x <= 0.0 || Tower::new(x) <= self.tower
    }
}

fn check_unit_a(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::param("a", format!("needs 0 <= a <= 1, got {a}")))
    }
}

/// `exp(2^{|α|} A^{1/(1-a)} exp(exp(M^{c_p})/(1-a)))` for `a < 1` and
/// `exp(2^{|α|} exp(A exp(exp(M^{c_p}))))` for `a = 1`.
pub fn theorem11_bound(m: f64, a_big: f64, a: f64, alpha_order: u32, ladder: &ConstantLadder) -> Result<LogBound> {
    if !(m >= 2.0) || !(a_big >= 2.0) || !m.is_finite() || !a_big.is_finite() {
        return Err(Error::param("M, A", format!("need M, A >= 2, got {m}, {a_big}")));
    }
    check_unit_a(a)?;
    if alpha_order > 1 {
        return Err(Error::param("alpha_order", "must be 0 or 1"));
    }
    let weight = 2f64.powi(alpha_order as i32);
    let eem = Tower::new(m).pow(ladder.c_p()).exp();
    let t = if a < 1.0 {
        let inv = 1.0 / (1.0 - a);
        eem.mul_const(inv).exp().mul(Tower::new(a_big).pow(inv))
    } else {
        eem.exp().mul_const(a_big).exp()
    };
    Ok(LogBound::from_tower(t.mul_const(weight).exp()))
}

/// `exp(exp(M)) A / |ln(T* - t)|^b`.
pub fn theorem13_quantity(m: f64, a_big: f64, t: f64, t_star: f64, b: f64) -> Result<LogBound> {
    if !(t < t_star) {
        return Err(Error::param("t", format!("needs t < T* = {t_star}, got {t}")));
    }
    if !(b > 0.0) || !(a_big >= 0.0) || !m.is_finite() || !a_big.is_finite() {
        return Err(Error::param("b, M, A", "need b > 0 and finite M, A >= 0"));
    }
    if a_big == 0.0 {
        return Ok(LogBound::from_tower(Tower::ZERO));
    }
    let denom = (t_star - t).ln().abs().powf(b);
    if denom == 0.0 {
        return Ok(LogBound::from_tower(Tower::new(f64::INFINITY)));
    }
    let ee = Tower::new(m.max(0.0)).exp().exp();
    Ok(LogBound::from_tower(ee.mul_const(a_big / denom)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KeyLemma {
    /// `ln(T 2^{2 j₀})`.
    pub ln_lhs: f64,
    pub rhs: LogBound,
    pub satisfied: bool,
}

fn key_lemma_rhs(a_big: f64, a: f64, ladder: &ConstantLadder) -> Result<Tower> {
    check_unit_a(a)?;
    if !(a_big > 0.0) || !a_big.is_finite() {
        return Err(Error::param("A", format!("must be positive, got {a_big}")));
    }
    let eem6 = ladder.level(6).pow(ladder.c_p()).exp();
    Ok(if a < 1.0 {
        let inv = 1.0 / (1.0 - a);
        eem6.mul_const(inv).exp().mul(Tower::new(a_big).pow(inv)).exp()
    } else {
        eem6.exp().mul_const(a_big).exp().exp()
    })
}

/// `T 2^{2 j₀} <= exp(A^{1/(1-a)} exp(exp(M₆^{c_p})/(1-a)))`, with one more
/// exponential for `a = 1`.
pub fn key_lemma_check(t: f64, j0: i32, a_big: f64, a: f64, ladder: &ConstantLadder) -> Result<KeyLemma> {
    if !(t > 0.0) {
        return Err(Error::param("T", format!("must be positive, got {t}")));
    }
    let rhs = key_lemma_rhs(a_big, a, ladder)?;
    let ln_lhs = t.ln() + 2.0 * j0 as f64 * std::f64::consts::LN_2;
    let satisfied = match rhs.ln() {
        Some(ln_rhs) => ln_lhs <= 0.0 || Tower::new(ln_lhs) <= ln_rhs,
        None => ln_lhs <= rhs.ln_f64(),
    };
    Ok(KeyLemma {
        ln_lhs,
        rhs: LogBound::from_tower(rhs),
        satisfied,
    })
}

/// Largest `j` with `T 2^{2j}` under the key-lemma bound; `+∞` when that
/// index exceeds the `f64` range.
pub fn frequency_cutoff(t: f64, a_big: f64, a: f64, ladder: &ConstantLadder) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param("T", format!("must be positive, got {t}")));
    }
    let ln_rhs = key_lemma_rhs(a_big, a, ladder)?.ln_f64();
    Ok(((ln_rhs - t.ln()) / (2.0 * std::f64::consts::LN_2)).floor())
}

/// A sample where a dyadic block is large: `|Δ̇_j u(t, x)| >= 2^j / M₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcentrationEvent {
    pub t: f64,
    pub x: [f64; 3],
    pub j: i32,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScanOptions {
    /// Points per axis of the sampling lattice; `None` is `4n`.
    pub lattice: Option<usize>,
    /// Keep at most this many of the strongest events per `(t, j)`.
    pub cap: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationScan {
    pub events: Vec<ConcentrationEvent>,
    /// Number of lattice samples above threshold, before any cap.
    pub total: usize,
}

pub fn concentration_threshold(j: i32, ladder: &ConstantLadder) -> f64 {
    2f64.powi(j) / ladder.value(1)
}

struct BlockScan {
    events: Vec<ConcentrationEvent>,
    total: usize,
    maxima: Vec<(i32, f64)>,
}

fn scan_sample(
    u: &Field,
    t: f64,
    part: &DyadicPartition,
    ladder: &ConstantLadder,
    m: usize,
    cap: Option<usize>,
) -> Result<BlockScan> {
    let grid = u.grid();
    let mut out = BlockScan {
        events: Vec::new(),
        total: 0,
        maxima: Vec::new(),
    };
    for j in part.indices() {
        let mag = part.block(u, j)?.magnitude_on(m);
        let threshold = concentration_threshold(j, ladder);
        out.maxima.push((j, mag.iter().fold(0.0, |a: f64, &b| a.max(b))));
        let mut hits: Vec<(usize, f64)> = mag
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= threshold && v > 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        out.total += hits.len();
        if let Some(k) = cap {
            if hits.len() > k {
                hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                hits.truncate(k);
            }
        }
        out.events.extend(hits.into_iter().map(|(i, value)| ConcentrationEvent {
            t,
            x: grid.point(i, m),
            j,
            value,
            threshold,
        }));
    }
    Ok(out)
}

fn sort_events(events: &mut [ConcentrationEvent]) {
    events.sort_by(|a, b| {
        b.j.cmp(&a.j)
            .then(a.t.total_cmp(&b.t))
            .then(b.value.total_cmp(&a.value))
            .then(a.x[2].total_cmp(&b.x[2]))
            .then(a.x[1].total_cmp(&b.x[1]))
            .then(a.x[0].total_cmp(&b.x[0]))
    });
}

/// Every `4n`-lattice sample meeting the concentration threshold, sorted
/// by `j` descending, then time.
pub fn concentration_scan(
    traj: &Trajectory,
    ladder: &ConstantLadder,
    part: &DyadicPartition,
) -> Result<Vec<ConcentrationEvent>> {
    Ok(concentration_scan_with(traj, ladder, part, ScanOptions::default())?.events)
}

pub fn concentration_scan_with(
    traj: &Trajectory,
    ladder: &ConstantLadder,
    part: &DyadicPartition,
    opts: ScanOptions,
) -> Result<ConcentrationScan> {
    let mut events = Vec::new();
    let mut total = 0;
    for (t, u) in traj.iter() {
        part.grid().check_same(u.grid())?;
        let m = opts.lattice.unwrap_or(4 * u.grid().n());
        let s = scan_sample(u, t, part, ladder, m, opts.cap)?;
        events.extend(s.events);
        total += s.total;
    }
    sort_events(&mut events);
    Ok(ConcentrationScan { events, total })
}

/// Distance on the periodic box.
pub fn periodic_distance(a: [f64; 3], b: [f64; 3], box_length: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let d = (a[i] - b[i]).rem_euclid(box_length);
        let d = d.min(box_length - d);
        s += d * d;
    }
    s.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BackPropagation {
    /// Events whose antecedent window holds at least one sample time.
    pub checked: usize,
    pub matched: usize,
    /// Events with an empty antecedent window.
    pub skipped: usize,
    /// Indices (into the event list) without an antecedent.
    pub unmatched: Vec<usize>,
}

impl BackPropagation {
    pub fn all_matched(&self) -> bool {
        self.unmatched.is_empty()
    }
}

/// For each event `(t₁, x₁, j₁)`, searches the list for `(t₂, x₂, j₂)` with
/// `t₂ ∈ [t₁ - M₃ 2^{-2j₁}, t₁ - 2^{-2j₁}/M₃]`, `|x₂ - x₁| <= M₄ 2^{-j₁}` and
/// `2^{j₂} ∈ [2^{j₁}/M₂, M₂ 2^{j₁}]`.
pub fn back_propagation_check(
    events: &[ConcentrationEvent],
    sample_times: &[f64],
    ladder: &ConstantLadder,
    box_length: f64,
) -> BackPropagation {
    let (m2, m3, m4) = (ladder.value(2), ladder.value(3), ladder.value(4));
    let mut out = BackPropagation {
        checked: 0,
        matched: 0,
        skipped: 0,
        unmatched: Vec::new(),
    };
    for (idx, e) in events.iter().enumerate() {
        let scale = 2f64.powi(-2 * e.j);
        let (lo, hi) = (e.t - m3 * scale, e.t - scale / m3);
        if !sample_times.iter().any(|&s| s >= lo && s <= hi) {
            out.skipped += 1;
            continue;
        }
        out.checked += 1;
        let radius = m4 * 2f64.powi(-e.j);
        let (klo, khi) = (2f64.powi(e.j) / m2, m2 * 2f64.powi(e.j));
        let found = events.iter().any(|f| {
            let k = 2f64.powi(f.j);
            f.t >= lo
                && f.t <= hi
                && k >= klo
                && k <= khi
                && periodic_distance(f.x, e.x, box_length) <= radius
        });
        if found {
            out.matched += 1;
        } else {
            out.unmatched.push(idx);
        }
    }
    out
}

/// `[‖u‖_∞, ‖∇u‖_∞, ‖ω‖_∞, ‖∇ω‖_∞]` on the padded lattice.
pub fn sup_norms(u: &Field) -> Result<[f64; 4]> {
    u.expect_components(3)?;
    let w = curl(u)?;
    Ok([
        lp_norm(u, f64::INFINITY)?,
        lp_norm(&gradient_tensor(u)?, f64::INFINITY)?,
        lp_norm(&w, f64::INFINITY)?,
        lp_norm(&gradient_tensor(&w)?, f64::INFINITY)?,
    ])
}

fn window_indices(traj: &Trajectory, lo: f64, hi: f64) -> Result<Vec<usize>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let times = traj.times();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let slack = 1e-12 * t1.abs().max(1.0);
    for t in [lo, hi] {
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::TimeOutOfSpan { t, lo: t0, hi: t1 });
        }
    }
    if !(hi > lo) {
        return Err(Error::param("window", format!("needs t_lo < t_hi, got [{lo}, {hi}]")));
    }
    Ok((0..times.len())
        .filter(|&i| times[i] >= lo - slack && times[i] <= hi + slack)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TotalSpeed {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Trapezoid value of `∫ ‖u(t)‖_∞ dt` over the samples in the window.
    pub integral: f64,
    /// `integral / (M^{c_p} |I|^{1/2})`.
    pub ratio: f64,
}

pub fn total_speed(traj: &Trajectory, t_lo: f64, t_hi: f64, ladder: &ConstantLadder) -> Result<TotalSpeed> {
    let idx = window_indices(traj, t_lo, t_hi)?;
    if idx.len() < 2 {
        return Err(Error::InsufficientSignal(format!(
            "{} samples in [{t_lo}, {t_hi}]",
            idx.len()
        )));
    }
    let sups: Vec<f64> = idx
        .iter()
        .map(|&i| lp_norm(traj.field(i), f64::INFINITY))
        .collect::<Result<_>>()?;
    let mut integral = 0.0;
    for w in 0..idx.len() - 1 {
        let dt = traj.time(idx[w + 1]) - traj.time(idx[w]);
        integral += 0.5 * dt * (sups[w] + sups[w + 1]);
    }
    let denom = ladder.value(1) * (t_hi - t_lo).sqrt();
    Ok(TotalSpeed {
        t_lo,
        t_hi,
        integral,
        ratio: integral / denom,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Epoch {
    pub t_lo: f64,
    pub t_hi: f64,
    /// `|I|^{1/2} sup ‖u‖_∞` and `|I| sup ‖∇u‖_∞` over the subinterval.
    pub scaled: [f64; 2],
    /// `|I| sup ‖ω‖_∞` and `|I|^{3/2} sup ‖∇ω‖_∞`.
    pub scaled_vorticity: [f64; 2],
    pub samples: usize,
}

impl Epoch {
    pub fn score(&self) -> f64 {
        self.scaled[0].max(self.scaled[1])
    }
}

/// Splits `[t_lo, t_hi]` into `n_sub` equal pieces and returns the one with
/// the smallest scaled sup norms, scaled by the full window length `|I|`.
pub fn epoch_scan(traj: &Trajectory, t_lo: f64, t_hi: f64, n_sub: usize) -> Result<Epoch> {
    if n_sub < 4 {
        return Err(Error::param("n_sub", format!("needs at least 4, got {n_sub}")));
    }
    let idx = window_indices(traj, t_lo, t_hi)?;
    let sups: Vec<(f64, [f64; 4])> = idx
        .iter()
        .map(|&i| Ok((traj.time(i), sup_norms(traj.field(i))?)))
        .collect::<Result<_>>()?;
    epoch_from_sups(&sups, t_lo, t_hi, n_sub)
}

fn epoch_from_sups(sups: &[(f64, [f64; 4])], t_lo: f64, t_hi: f64, n_sub: usize) -> Result<Epoch> {
    let len = t_hi - t_lo;
    let width = len / n_sub as f64;
    let slack = 1e-12 * t_hi.abs().max(1.0);
    let mut best: Option<Epoch> = None;
    for s in 0..n_sub {
        let a = t_lo + s as f64 * width;
        let b = if s + 1 == n_sub { t_hi } else { a + width };
        let inside: Vec<&[f64; 4]> = sups
            .iter()
            .filter(|(t, _)| *t >= a - slack && *t <= b + slack)
            .map(|(_, v)| v)
            .collect();
        if inside.is_empty() {
            continue;
        }
        let mut top = [0.0f64; 4];
        for v in &inside {
            for c in 0..4 {
                top[c] = top[c].max(v[c]);
            }
        }
        let e = Epoch {
            t_lo: a,
            t_hi: b,
            scaled: [len.sqrt() * top[0], len * top[1]],
            scaled_vorticity: [len * top[2], len.powf(1.5) * top[3]],
            samples: inside.len(),
        };
        if best.as_ref().map_or(true, |b| e.score() < b.score()) {
            best = Some(e);
        }
    }
    best.ok_or_else(|| Error::InsufficientSignal("no subinterval holds a sample".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Annulus {
    pub r_inner: f64,
    pub r_outer: f64,
    /// `T'^{1/2} sup ‖u‖` and `T' sup ‖∇u‖` on the shell.
    pub scaled: [f64; 2],
    /// `T' sup ‖ω‖` on the shell.
    pub scaled_vorticity: f64,
    pub points: usize,
    pub candidates: usize,
    /// No candidate shell holds a lattice point.
    pub degenerate: bool,
}

impl Annulus {
    pub fn score(&self) -> f64 {
        self.scaled[0].max(self.scaled[1])
    }
}

/// Sweeps `R = R₀ 2^{k/4}` up to `exp(M₆^{c_p}) R₀` over shells
/// `R <= |x - x₀| <= M₆ R` (outer radius capped at half the box) and keeps
/// the shell with the smallest scaled sups.
pub fn annuli_scan(
    u: &Field,
    grad_u: &Field,
    omega: &Field,
    x0: [f64; 3],
    r0: f64,
    t_prime: f64,
    ladder: &ConstantLadder,
) -> Result<Annulus> {
    u.expect_components(3)?;
    grad_u.expect_components(9)?;
    omega.expect_components(3)?;
    u.grid().check_same(grad_u.grid())?;
    u.grid().check_same(omega.grid())?;
    if !(r0 > 0.0) || !(t_prime >= 0.0) {
        return Err(Error::param("R0, T'", "need R0 > 0 and T' >= 0"));
    }
    let grid = u.grid();
    let box_length = grid.box_length();
    let m = 2 * grid.n();
    let mags = [u.magnitude_on(m), grad_u.magnitude_on(m), omega.magnitude_on(m)];
    let dist: Vec<f64> = (0..m * m * m)
        .map(|i| periodic_distance(grid.point(i, m), x0, box_length))
        .collect();
    let cap = 0.5 * box_length;
    let r_limit = ladder.level(6).pow(ladder.c_p()).exp().mul_const(r0);
    let m6 = ladder.value(6);
    let mut best: Option<Annulus> = None;
    let mut candidates = 0;
    for k in 0.. {
        let r = r0 * 2f64.powf(k as f64 / 4.0);
        if r >= cap || Tower::new(r) > r_limit {
            break;
        }
        candidates += 1;
        let outer = (m6 * r).min(cap);
        let mut top = [0.0f64; 3];
        let mut points = 0;
        for (i, &d) in dist.iter().enumerate() {
            if d >= r && d <= outer {
                points += 1;
                for c in 0..3 {
                    top[c] = top[c].max(mags[c][i]);
                }
            }
        }
        if points == 0 {
            continue;
        }
        let a = Annulus {
            r_inner: r,
            r_outer: outer,
            scaled: [t_prime.sqrt() * top[0], t_prime * top[1]],
            scaled_vorticity: t_prime * top[2],
            points,
            candidates: 0,
            degenerate: false,
        };
        if best.as_ref().map_or(true, |b| a.score() < b.score()) {
            best = Some(a);
        }
    }
    Ok(match best {
        Some(mut a) => {
            a.candidates = candidates;
            a
        }
        None => Annulus {
            r_inner: r0,
            r_outer: r0,
            scaled: [0.0; 2],
            scaled_vorticity: 0.0,
            points: 0,
            candidates,
            degenerate: true,
        },
    })
}

/// `sup_{t,x} |Δ̇_j u(t, x)| / 2^j` per block on the padded lattice.
pub fn pointwise_dyadic_bounds(traj: &Trajectory, part: &DyadicPartition) -> Result<Vec<(i32, f64)>> {
    let mut out: Vec<(i32, f64)> = part.indices().map(|j| (j, 0.0)).collect();
    for (_, u) in traj.iter() {
        let m = 2 * u.grid().n();
        for (slot, j) in out.iter_mut().zip(part.indices()) {
            let top = part.block(u, j)?.magnitude_on(m).into_iter().fold(0.0, f64::max);
            slot.1 = slot.1.max(top / 2f64.powi(j));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OseenFit {
    pub t: f64,
    pub radii: Vec<f64>,
    pub shell_max: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Radial decay of the kernel of `e^{tΔ}ℙ∇·` at `t = (L/n)²`: the operator
/// is applied to a unit delta in one tensor component on the full band, and
/// shell maxima over `[4L/n, L/4]` (24 logarithmic shells, padded lattice)
/// are fitted in log-log coordinates.
pub fn oseen_kernel_fit(n: usize, box_length: f64) -> Result<OseenFit> {
    let grid = Grid::new(n, box_length, 1.0)?;
    let mut delta = Field::zeros(&grid, 9);
    for c in delta.comp_mut(1) {
        c.re = 1.0 / grid.volume();
    }
    let t = (box_length / n as f64).powi(2);
    let kernel = heat_semigroup(&projected_divergence(&delta)?, t)?;
    let m = 2 * n;
    let mag = magnitude(&kernel.to_lattice(m));
    let (rlo, rhi) = (4.0 * box_length / n as f64, box_length / 4.0);
    let shells = 24;
    let mut shell_max = vec![0.0f64; shells];
    for (i, &v) in mag.iter().enumerate() {
        let r = periodic_distance(grid.point(i, m), [0.0; 3], box_length);
        if r < rlo || r > rhi {
            continue;
        }
        let b = (((r / rlo).ln() / (rhi / rlo).ln()) * shells as f64).min(shells as f64 - 1.0) as usize;
        shell_max[b] = shell_max[b].max(v);
    }
    let radii: Vec<f64> = (0..shells)
        .map(|b| rlo * (rhi / rlo).powf((b as f64 + 0.5) / shells as f64))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&shell_max)
        .filter(|(_, &v)| v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientSignal("fewer than three populated shells".into()));
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(OseenFit {
        t,
        radii,
        shell_max,
        slope,
        intercept,
        r_squared,
    })
}

/// Knobs of [`monitor`] beyond the criterion parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorOptions {
    /// Blowup time and log exponent for the composite rate quantity.
    pub t_star: Option<f64>,
    pub b: f64,
    /// Strongest concentration events kept per `(t, j)`.
    pub event_cap: Option<usize>,
    pub epoch_subintervals: usize,
    /// Annuli centre and inner radius; defaults to the vorticity maximum at
    /// the last sample and two grid spacings.
    pub annulus_center: Option<[f64; 3]>,
    pub annulus_r0: Option<f64>,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions {
            t_star: None,
            b: 1.0,
            event_cap: Some(32),
            epoch_subintervals: 4,
            annulus_center: None,
            annulus_r0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorRow {
    pub t: f64,
    /// `‖u‖_{Ḃ^{-1+3/p}_{p,∞}}`.
    pub besov: f64,
    /// `‖|D|^{-1+3/p}|u|‖_{L^p}`.
    pub potential: f64,
    /// Weighted-log functional at the monitor's `a`.
    pub weighted_log: f64,
    /// `t^{(1+|α|)/2} ‖∇^α u‖_∞` for `|α| = 0, 1`.
    pub lhs: [f64; 2],
    pub theorem13: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorSummary {
    pub p: f64,
    pub a: f64,
    pub ladder: ConstantLadder,
    pub sup_besov: f64,
    pub sup_potential: f64,
    pub sup_weighted_log: f64,
    /// `M` and `A` fed to the bound, floored at 2.
    pub bound_m: f64,
    pub bound_a: f64,
    pub rhs: [LogBound; 2],
    pub lhs_within_rhs: bool,
    pub event_total: usize,
    pub events: Vec<ConcentrationEvent>,
    pub pointwise: Vec<(i32, f64)>,
    pub speed: Option<TotalSpeed>,
    pub epoch: Option<Epoch>,
    pub annulus: Option<Annulus>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub rows: Vec<MonitorRow>,
    pub summary: MonitorSummary,
}

impl MonitorReport {
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| {
            [r.t, r.besov, r.potential, r.weighted_log, r.lhs[0], r.lhs[1]]
                .iter()
                .all(|v| v.is_finite())
                && r.theorem13.map_or(true, |q| !q.is_nan())
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "time",
            "besov",
            "potential",
            "weighted_log",
            "lhs_alpha0",
            "lhs_alpha1",
            "theorem13",
        ])?;
        for r in &self.rows {
            w.write_record([
                format_real(r.t),
                format_real(r.besov),
                format_real(r.potential),
                format_real(r.weighted_log),
                format_real(r.lhs[0]),
                format_real(r.lhs[1]),
                r.theorem13.map(format_real).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }

    /// Writes `monitor.csv` and `monitor.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let csv_path = dir.join("monitor.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json_path = dir.join("monitor.json");
        std::fs::write(&json_path, self.summary_json()?).map_err(|e| Error::io(&json_path, e))
    }
}

/// Evaluates the hypothesis functionals, both sides of the pointwise bound,
/// and every scan along a trajectory.
pub fn monitor(
    traj: &Trajectory,
    p: f64,
    a: f64,
    ladder: &ConstantLadder,
    opts: &MonitorOptions,
) -> Result<MonitorReport> {
    check_unit_a(a)?;
    if !(p > 3.0) {
        return Err(Error::param("p", format!("needs p > 3, got {p}")));
    }
    let grid = traj.first()?.grid().clone();
    let part = DyadicPartition::new(&grid)?;
    let bp = BesovParams::critical(p, f64::INFINITY)?;
    let m = 2 * grid.n();
    let mut rows = Vec::with_capacity(traj.len());
    let mut sups = Vec::with_capacity(traj.len());
    let mut events = Vec::new();
    let mut event_total = 0;
    let mut pointwise: Vec<(i32, f64)> = part.indices().map(|j| (j, 0.0)).collect();
    for (t, u) in traj.iter() {
        u.expect_components(3)?;
        grid.check_same(u.grid())?;
        let eta = potential_of_magnitude(u, p)?;
        let potential = lp_of_samples(&eta, p, grid.cell_volume());
        let weighted_log = weighted_log_of_potential(&eta, p, a, grid.cell_volume());
        let besov = besov_norm(u, bp, &part)?;
        let s = sup_norms(u)?;
        let scan = scan_sample(u, t, &part, ladder, m, opts.event_cap)?;
        events.extend(scan.events);
        event_total += scan.total;
        for (slot, (j, top)) in pointwise.iter_mut().zip(scan.maxima) {
            slot.1 = slot.1.max(top / 2f64.powi(j));
        }
        let theorem13 = match opts.t_star {
            Some(ts) => Some(theorem13_quantity(besov, potential, t, ts, opts.b)?.value),
            None => None,
        };
        rows.push(MonitorRow {
            t,
            besov,
            potential,
            weighted_log,
            lhs: [t.sqrt() * s[0], t * s[1]],
            theorem13,
        });
        sups.push((t, s));
    }
    sort_events(&mut events);
    let sup = |f: fn(&MonitorRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (sup_besov, sup_potential, sup_weighted_log) =
        (sup(|r| r.besov), sup(|r| r.potential), sup(|r| r.weighted_log));
    let bound_m = sup_besov.max(ladder.value(0)).max(2.0);
    let bound_a = sup_weighted_log.max(2.0);
    let rhs = [
        theorem11_bound(bound_m, bound_a, a, 0, ladder)?,
        theorem11_bound(bound_m, bound_a, a, 1, ladder)?,
    ];
    let lhs_within_rhs = rows
        .iter()
        .all(|r| rhs[0].dominates(r.lhs[0]) && rhs[1].dominates(r.lhs[1]));

    let (t0, t1) = (traj.time(0), traj.time(traj.len() - 1));
    let (speed, epoch) = if traj.len() >= 2 {
        (
            Some(total_speed(traj, t0, t1, ladder)?),
            Some(epoch_from_sups(&sups, t0, t1, opts.epoch_subintervals.max(4))?),
        )
    } else {
        (None, None)
    };
    let last = traj.last()?;
    let omega = curl(last)?;
    let center = match opts.annulus_center {
        Some(c) => c,
        None => {
            let mag = omega.magnitude_on(m);
            let (imax, _) = mag
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            grid.point(imax, m)
        }
    };
    let r0 = opts.annulus_r0.unwrap_or(2.0 * grid.spacing());
    let annulus = Some(annuli_scan(
        last,
        &gradient_tensor(last)?,
        &omega,
        center,
        r0,
        t1,
        ladder,
    )?);

    Ok(MonitorReport {
        rows,
        summary: MonitorSummary {
            p,
            a,
            ladder: ladder.clone(),
            sup_besov,
            sup_potential,
            sup_weighted_log,
            bound_m,
            bound_a,
            rhs,
            lhs_within_rhs,
            event_total,
            events,
            pointwise,
            speed,
            epoch,
            annulus,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn ladder_levels() {
        let l = ConstantLadder::new(2.0, 2.0, 10.0).unwrap();
        let expect = [2.0, 4.0, 16.0, 256.0, 65536.0, 4294967296.0, 1.8446744073709552e19];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(l.value(i), *e);
        }
        assert!(l.check_invariants());
        let flat = ConstantLadder::new(2.0, 1.0, 10.0).unwrap();
        assert!((1..7).all(|i| flat.value(i) == 2.0));
        assert!(ConstantLadder::new(1.0, 2.0, 10.0).is_err());
    }

    #[test]
    fn theorem11_small_case() {
        let l = ConstantLadder::new(2.0, 1.0, 10.0).unwrap();
        let b = theorem11_bound(2.0, 2.0, 0.0, 0, &l).unwrap();
        let expect = 2f64.ln() + E * E;
        assert!((b.lnln.unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn theorem13_small_case() {
        let q = theorem13_quantity(1.0, 1.0, 5.0 - (-10f64).exp(), 5.0, 1.0).unwrap();
        assert!((q.value - E.exp() / 10.0).abs() < 1e-12);
        assert_eq!(theorem13_quantity(1.0, 0.0, 0.0, 1.0, 1.0).unwrap().value, 0.0);
        assert!(theorem13_quantity(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn key_lemma_branches() {
        let l = ConstantLadder::standard(2.0).unwrap();
        let k0 = key_lemma_check(1.0, 3, 2.0, 0.0, &l).unwrap();
        assert!((k0.ln_lhs - 64f64.ln()).abs() < 1e-12);
        assert!(k0.satisfied);
        let k1 = key_lemma_check(1.0, 3, 2.0, 1.0, &l).unwrap();
        assert!(k1.rhs.tower > k0.rhs.tower);
        let small = ConstantLadder::new(2.0, 1.0, 10.0).unwrap();
        let cut = frequency_cutoff(1.0, 2.0, 0.0, &small).unwrap();
        assert!(cut.is_finite());
        assert!(key_lemma_check(1.0, cut as i32, 2.0, 0.0, &small).unwrap().satisfied);
        assert!(!key_lemma_check(1.0, cut as i32 + 1, 2.0, 0.0, &small).unwrap().satisfied);
    }

    #[test]
    fn periodic_distance_wraps() {
        let l = 2.0 * std::f64::consts::PI;
        assert!((periodic_distance([0.1, 0.0, 0.0], [l - 0.1, 0.0, 0.0], l) - 0.2).abs() < 1e-12);
    }
}
