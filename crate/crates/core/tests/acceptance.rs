//! The fifteen acceptance criteria, each at its stated tolerance. Every
//! criterion prints one PASS/FAIL line; the test fails if any criterion does.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use nscb::cascade::{compute_cascade_at, duhamel_integral, fit_dyadic_decay, remainder_residual};
use nscb::diagnostics::{
    concentration_scan, monitor, periodic_distance, oseen_kernel_fit, ConstantLadder, MonitorOptions,
};
use nscb::io::RunConfig;
use nscb::littlewood_paley::phi;
use nscb::norms::{
    bernstein_check, besov_norm, heat_flow_besov_ratio, interpolation_check, interpolation_exponents,
    lp_norm, weighted_log_functional, BesovParams,
};
use nscb::pipeline::{run_stage, Stage};
use nscb::random::{annulus_field, random_field, random_solenoidal, rng};
use nscb::solver::{energy_series, integrate, make_initial_data, InitialData, SolverConfig};
use nscb::spectral::{leray_project, parabolic_dilation, relative_divergence};
use nscb::{DyadicPartition, Field, Grid, Result, Trajectory};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn smooth(k: f64) -> f64 {
    (-(k / 5.0).powi(2)).exp()
}

fn c01_partition_of_unity() -> Result<Outcome> {
    let grid = Grid::standard(64)?;
    let part = DyadicPartition::new(&grid)?;
    let mut raw: f64 = 0.0;
    let mut lumped: f64 = 0.0;
    for (idx, &k2) in grid.ksq().iter().enumerate() {
        if k2 == 0.0 {
            continue;
        }
        let r = k2.sqrt();
        let s: f64 = (-30..=30).map(|j| phi(2f64.powi(-j) * r)).sum();
        raw = raw.max((s - 1.0).abs());
        let l: f64 = part.indices().map(|j| part.symbol(j).unwrap()[idx]).sum();
        lumped = lumped.max((l - 1.0).abs());
    }
    let worst = raw.max(lumped);
    outcome(worst <= 1e-10, format!("max |Σφ - 1| = {raw:.2e} (dyadic), {lumped:.2e} (band blocks)"))
}

fn c02_quasi_orthogonality() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let f = random_field(&grid, 3, |_| 1.0, &mut rng(seed));
        let blocks = part.blocks(&f)?;
        for (a, j) in part.indices().enumerate() {
            for k in part.indices() {
                if (j - k).abs() > 1 {
                    let jk = part.block(&blocks[a], k)?;
                    worst = worst.max(jk.l2_norm() / f.l2_norm());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max ‖Δ_jΔ_k f‖/‖f‖ = {worst:.2e}"))
}

fn c03_leray() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let (mut div, mut idem, mut oracle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..20 {
        let f = random_field(&grid, 3, smooth, &mut rng(100 + seed));
        let pf = leray_project(&f)?;
        div = div.max(relative_divergence(&pf));
        idem = idem.max(leray_project(&pf)?.sub(&pf)?.l2_norm() / f.l2_norm());
        let mut err = 0.0;
        for idx in 0..grid.band_len() {
            let k = grid.wavevector(idx);
            let k2 = grid.ksq()[idx];
            let v = [f.comp(0)[idx], f.comp(1)[idx], f.comp(2)[idx]];
            let dot = if k2 > 0.0 {
                (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2
            } else {
                Complex64::new(0.0, 0.0)
            };
            for a in 0..3 {
                let want = v[a] - dot * k[a];
                err += (pf.comp(a)[idx] - want).norm_sqr();
            }
        }
        let norm: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        oracle = oracle.max((err / norm).sqrt());
    }
    let pass = div <= 1e-13 && idem <= 1e-13 && oracle <= 1e-13;
    outcome(pass, format!("divergence {div:.2e}, idempotence {idem:.2e}, per-mode oracle {oracle:.2e}"))
}

fn c04_bernstein() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let ps = [2.0, 4.0, f64::INFINITY];
    let (mut grad, mut lq): (f64, f64) = (0.0, 0.0);
    let mut r = rng(4);
    for _ in 0..20 {
        for j in part.indices() {
            let u = annulus_field(&part, 3, j, &mut r)?;
            for &p in &ps {
                for &q in ps.iter().filter(|&&q| q >= p) {
                    let b = bernstein_check(&u, j, p, q)?;
                    grad = grad.max(b.gradient_ratio);
                    lq = lq.max(b.lq_ratio);
                }
            }
        }
    }
    outcome(grad <= 8.0 && lq <= 8.0, format!("max C: gradient {grad:.3}, L^p→L^q {lq:.3}"))
}

fn c05_besov_kato() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let bp = BesovParams::critical(4.0, f64::INFINITY)?;
    let mut ratios = Vec::new();
    for seed in 0..20u64 {
        let alpha = 0.1 * seed as f64;
        let cut = 2.0 + 0.4 * seed as f64;
        let u = random_solenoidal(
            &grid,
            |k| k.powf(-alpha - 1.0) * (-(k / cut).powi(2)).exp(),
            &mut rng(500 + seed),
        )?;
        ratios.push(heat_flow_besov_ratio(&u, bp)?.ratio);
    }
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    outcome(hi / lo <= 10.0, format!("ratio range [{lo:.3}, {hi:.3}], spread {:.3}", hi / lo))
}

fn c06_interpolation() -> Result<Outcome> {
    let e = interpolation_exponents(4.0, 3.0)?;
    let sum_err = (e.iter().sum::<f64>() - 1.0).abs();
    let grid = Grid::standard(32)?;
    let (mut lo, mut hi) = (f64::MAX, 0.0f64);
    for seed in 0..100u64 {
        let cut = 1.5 + 0.1 * seed as f64;
        let w = random_field(&grid, 3, |k| (-(k / cut).powi(2)).exp() / k, &mut rng(600 + seed));
        let c = interpolation_check(&w, 4.0, 3.0)?.constant;
        lo = lo.min(c);
        hi = hi.max(c);
    }
    outcome(
        sum_err <= 1e-14 && lo > 0.0 && hi <= 50.0,
        format!("exponent sum error {sum_err:.1e}, constant range [{lo:.3}, {hi:.3}]"),
    )
}

fn single_mode_tensor(grid: &Grid, scale: f64) -> Result<Field> {
    Field::from_fn(grid, 9, |x| {
        let s = scale * (x[0] + 2.0 * x[1]).cos();
        let mut v = vec![0.0; 9];
        v[3 * 1 + 2] = s;
        v[3 * 2 + 0] = 0.5 * s;
        v
    })
}

fn c07_duhamel() -> Result<Outcome> {
    let grid = Grid::standard(16)?;
    let f0 = single_mode_tensor(&grid, 1.0)?;
    let t_end = 0.7;
    let mut constant = Trajectory::new();
    for i in 0..=7 {
        constant.push(0.1 * i as f64, f0.clone())?;
    }
    let got = duhamel_integral(&constant, t_end)?;
    let k2 = 5.0;
    let g = nscb::spectral::projected_divergence(&f0)?;
    let exact = g.scaled(-(1.0 - (-k2 * t_end).exp()) / k2);
    let closed = rel(&got, &exact);

    let solve = |steps: usize| -> Result<Field> {
        let mut tr = Trajectory::new();
        for i in 0..=steps {
            let t = t_end * i as f64 / steps as f64;
            tr.push(t, single_mode_tensor(&grid, (3.0 * t).cos() + t * t)?)?;
        }
        duhamel_integral(&tr, t_end)
    };
    let (a, b, c) = (solve(10)?, solve(20)?, solve(40)?);
    let order = (a.sub(&b)?.l2_norm() / b.sub(&c)?.l2_norm()).log2();
    outcome(
        closed <= 1e-10 && order >= 1.9,
        format!("closed-form error {closed:.2e}, Richardson order {order:.3}"),
    )
}

fn c08_solver() -> Result<Outcome> {
    let g32 = Grid::standard(32)?;
    let tg = make_initial_data(&InitialData::TaylorGreen { amplitude: 1.0 }, &g32)?;
    let traj = integrate(&tg, &SolverConfig::new(&g32, 1e-3, 0.5, 100)?)?;
    let exact_err = rel(traj.last()?, &tg.scaled((-1.0f64).exp()));

    let g64 = Grid::standard(64)?;
    let data = InitialData::TaylorGreen3d { amplitude: 1.0 };
    let coarse = integrate(&make_initial_data(&data, &g32)?, &SolverConfig::new(&g32, 5e-4, 0.5, 1000)?)?;
    let fine = integrate(&make_initial_data(&data, &g64)?, &SolverConfig::new(&g64, 5e-4, 0.5, 1000)?)?;
    let fine_on_coarse = fine.last()?.resample(&g32)?;
    let self_conv = rel(coarse.last()?, &fine_on_coarse);

    let energy = energy_series(&integrate(
        &make_initial_data(&data, &g32)?,
        &SolverConfig::new(&g32, 1e-3, 0.5, 1)?,
    )?);
    let rise = energy
        .windows(2)
        .map(|w| (w[1] - w[0]) / energy[0])
        .fold(f64::MIN, f64::max);
    outcome(
        exact_err <= 1e-6 && self_conv <= 1e-5 && rise <= 1e-10,
        format!("Taylor–Green error {exact_err:.2e}, n=32 vs 64 {self_conv:.2e}, max relative energy increase {rise:.2e}"),
    )
}

/// Uniform steps of `1/k_max²` to `0.5`, then geometric growth to `6`.
fn decay_times(grid: &Grid) -> Vec<f64> {
    let dt = 1.0 / grid.k_max().powi(2);
    let mut times = vec![0.0];
    while times.last().unwrap() + dt <= 0.5 + 1e-12 {
        times.push(times.last().unwrap() + dt);
    }
    while *times.last().unwrap() < 6.0 {
        times.push(times.last().unwrap() * 1.08);
    }
    times
}

fn c09_cascade_decay() -> Result<Outcome> {
    let started = std::time::Instant::now();
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let kc = grid.k_max() / 2.0;
    let mut u0 = random_solenoidal(&grid, |k| (-(k / kc).powi(2)).exp() / k, &mut rng(9))?;
    let bp = BesovParams::critical(4.0, f64::INFINITY)?;
    u0.scale(1.0 / besov_norm(&u0, bp, &part)?);
    let state = compute_cascade_at(&u0, 4.0, &decay_times(&grid))?;
    let normalized = |k: usize| -> Result<Vec<(i32, f64)>> {
        fit_dyadic_decay(&state, k, 4.0)?
            .blocks
            .iter()
            .map(|b| Ok((b.j, b.rate / part.support_min_ksq(b.j)?)))
            .collect()
    };
    let first = normalized(1)?;
    let worst1 = first.iter().map(|(_, r)| (r - 1.0).abs()).fold(0.0, f64::max);
    let all_blocks = first.len() == part.len();
    let second = normalized(2)?;
    let positive = second.iter().all(|(_, r)| *r > 0.0);
    let hi = second.iter().map(|x| x.1).fold(f64::MIN, f64::max);
    let lo = second.iter().map(|x| x.1).fold(f64::MAX, f64::min);
    let secs = started.elapsed().as_secs_f64();
    let fmt = |v: &[(i32, f64)]| v.iter().map(|(j, r)| format!("{j}:{r:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        all_blocks && worst1 <= 0.25 && positive && hi / lo <= 3.0 && secs <= 600.0,
        format!(
            "k=1 rate/min|k|² [{}] (max dev {worst1:.3}); k=2 [{}] spread {:.3}; {secs:.1}s",
            fmt(&first),
            fmt(&second),
            hi / lo
        ),
    )
}

fn c10_remainder() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let mut worst = Vec::new();
    for data in [
        InitialData::TaylorGreen { amplitude: 1.0 },
        InitialData::TaylorGreen3d { amplitude: 1.0 },
    ] {
        let u0 = make_initial_data(&data, &grid)?;
        let traj = integrate(&u0, &SolverConfig::new(&grid, 0.5 / 504.0, 0.5, 8)?)?;
        assert_eq!(traj.len(), 64);
        let state = compute_cascade_at(&u0, 4.0, traj.times())?;
        worst.push(remainder_residual(&traj, &state)?.max_residual().unwrap_or(f64::NAN));
    }
    outcome(
        worst.iter().all(|&w| w <= 1e-4),
        format!("max residual: 2D {:.2e}, 3D {:.2e}", worst[0], worst[1]),
    )
}

fn c11_monitor() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let ladder = ConstantLadder::standard(2.0)?;
    let runs = [
        InitialData::TaylorGreen { amplitude: 1.0 },
        InitialData::TaylorGreen3d { amplitude: 1.0 },
        InitialData::RandomBesov { p: 4.0, target: 2.0, seed: 21 },
    ];
    let mut bound_ok = true;
    let mut finite = true;
    let mut monotone = true;
    for data in runs {
        let u0 = make_initial_data(&data, &grid)?;
        let traj = integrate(&u0, &SolverConfig::new(&grid, 2e-3, 0.2, 20)?)?;
        for a in [0.0, 0.5, 1.0] {
            let rep = monitor(&traj, 4.0, a, &ladder, &MonitorOptions { t_star: Some(1.0), ..Default::default() })?;
            bound_ok &= rep.summary.lhs_within_rhs;
            finite &= rep.all_finite();
        }
        for u in traj.fields() {
            let vals: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
                .iter()
                .map(|&a| weighted_log_functional(u, 4.0, a))
                .collect::<Result<_>>()?;
            monotone &= vals.windows(2).all(|w| w[1] <= w[0]);
        }
    }
    outcome(
        bound_ok && finite && monotone,
        format!("lhs <= rhs: {bound_ok}, finite: {finite}, A_a decreasing in a: {monotone}"),
    )
}

fn c12_concentration() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let ladder = ConstantLadder::standard(2.0)?;
    let j = 3;
    let mut u0 = leray_project(&annulus_field(&part, 3, j, &mut rng(12))?)?;
    u0.scale(2f64.powi(j + 1) / ladder.value(1) / lp_norm(&u0, f64::INFINITY)?);
    let traj = integrate(&u0, &SolverConfig::new(&grid, 2e-3, 0.006, 1)?)?;
    let events = concentration_scan(&traj, &ladder, &part)?;
    let l = grid.box_length();
    let scan_m = 4 * grid.n();
    let h = l / scan_m as f64;
    let reach = 0.5 * 3f64.sqrt() * h * (1.0 + 1e-9);
    let cell = |x: [f64; 3]| x.map(|v| (v / h).floor() as i64);
    let fine = 2 * scan_m;
    let mut missed = 0;
    let mut strong = 0;
    for (t, u) in traj.iter() {
        for jj in part.indices() {
            let thr = 2f64.powi(jj) / ladder.value(1);
            let mut buckets: HashMap<[i64; 3], Vec<[f64; 3]>> = HashMap::new();
            for e in events.iter().filter(|e| e.t == t && e.j == jj) {
                buckets.entry(cell(e.x)).or_default().push(e.x);
            }
            let mag = part.block(u, jj)?.magnitude_on(fine);
            for (i, &v) in mag.iter().enumerate() {
                if v < 1.05 * thr {
                    continue;
                }
                strong += 1;
                let x = grid.point(i, fine);
                let c = cell(x);
                let mut covered = false;
                for d in 0..27i64 {
                    let key = [0, 1, 2].map(|a| (c[a] + (d / 3i64.pow(a as u32)) % 3 - 1).rem_euclid(scan_m as i64));
                    if buckets
                        .get(&key)
                        .is_some_and(|b| b.iter().any(|e| periodic_distance(*e, x, l) <= reach))
                    {
                        covered = true;
                        break;
                    }
                }
                if !covered {
                    missed += 1;
                }
            }
        }
    }
    let sorted = events.windows(2).all(|w| w[0].j >= w[1].j);
    let spike = events.iter().any(|e| e.j == j);
    outcome(
        missed == 0 && sorted && spike && strong > 0,
        format!(
            "{} events, {strong} samples above 1.05× threshold on the 8n rescan, {missed} missed",
            events.len()
        ),
    )
}

fn c13_scaling() -> Result<Outcome> {
    let grid = Grid::standard(32)?;
    let part = DyadicPartition::new(&grid)?;
    let mut worst: f64 = 0.0;
    for p in [4.0, 6.0] {
        let bp = BesovParams::critical(p, f64::INFINITY)?;
        for seed in 0..5 {
            let u = random_solenoidal(
                &grid,
                |k| (-((k.ln() - 5f64.ln()) / 0.4).powi(2)).exp(),
                &mut rng(1300 + seed),
            )?;
            let v = parabolic_dilation(&u, 2.0)?;
            let b0 = besov_norm(&u, bp, &part)?;
            let b1 = besov_norm(&v, bp, &DyadicPartition::new(v.grid())?)?;
            worst = worst.max((b1 / b0 - 1.0).abs());
        }
    }
    outcome(worst <= 0.05, format!("max relative change {worst:.2e}"))
}

fn c14_oseen() -> Result<Outcome> {
    let fit = oseen_kernel_fit(64, 2.0 * PI)?;
    outcome(
        fit.slope <= -3.5,
        format!("fitted exponent {:.3} (R² {:.4})", fit.slope, fit.r_squared),
    )
}

fn c15_determinism() -> Result<Outcome> {
    let text = "grid.n = 16\nsolver.dt = 0.004\nsolver.horizon = 0.08\nsolver.save_every = 5\n\
                initial_data.kind = random_besov\ninitial_data.M = 2.0\ninitial_data.seed = 77\n";
    let cfg = RunConfig::parse(text)?;
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| nscb::Error::Config(e.to_string()))?;
        for stage in [Stage::Simulate, Stage::Decompose, Stage::Norms, Stage::Monitor] {
            run_stage(stage, &cfg, dir.path())?;
        }
        let mut files = Vec::new();
        for rel_path in [
            "trajectory/energy.csv",
            "cascade/residual.csv",
            "norms/besov.csv",
            "norms/lp.csv",
            "norms/linf.csv",
            "norms/weighted_log.csv",
            "monitor/monitor.csv",
        ] {
            files.push(std::fs::read(dir.path().join(rel_path)).expect("csv written"));
        }
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1];
    outcome(same, format!("{} CSV files compared byte for byte", outputs[0].len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Result<Outcome>); 15] = [
        ("partition of unity", c01_partition_of_unity),
        ("quasi-orthogonality", c02_quasi_orthogonality),
        ("Leray exactness", c03_leray),
        ("Bernstein constants", c04_bernstein),
        ("Besov-Kato equivalence", c05_besov_kato),
        ("interpolation inequality", c06_interpolation),
        ("Duhamel quadrature", c07_duhamel),
        ("solver accuracy", c08_solver),
        ("cascade decay", c09_cascade_decay),
        ("remainder residual", c10_remainder),
        ("monitor consistency", c11_monitor),
        ("concentration completeness", c12_concentration),
        ("scaling invariance", c13_scaling),
        ("Oseen kernel decay", c14_oseen),
        ("determinism", c15_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let line = format!(
            "criterion {:>2} {:<28} {} ({:.1}s) {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        // written past the test harness capture so the summary always shows
        let _ = writeln!(std::io::stdout().lock(), "{line}");
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
