//! End-to-end stages behind the `nscb` subcommands. Each stage reads what
//! the previous one persisted under the output directory:
//!
//! ```text
//! out/trajectory/time_NNNN.nscb  manifest.json  energy.csv
//! out/cascade/layer_K/time_NNNN.nscb  remainder/  residual.csv  decay.json  manifest.json
//! out/norms/{besov,lp,linf,weighted_log}.csv  kato.json
//! out/monitor/monitor.csv  monitor.json  back_propagation.json
//! out/verify/verify.csv
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::cascade::{compute_cascade_at, fit_dyadic_decay, layer_count, layer_kato_profile, remainder_residual};
use crate::diagnostics::{
    back_propagation_check, monitor as run_monitor, theorem11_bound, ConstantLadder, MonitorOptions,
};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::io::{load_trajectory, save_trajectory, thread_cap, RawSnapshot, RunConfig};
use crate::littlewood_paley::{phi, DyadicPartition};
use crate::norms::{
    besov_report, critical_index, format_real, interpolation_exponents, kato_norm, lp_report,
    weighted_log_report, BesovParams, NormReport,
};
use crate::random::{random_field, rng};
use crate::solver::{integrate_until_failure, make_initial_data, SolverConfig};
use crate::spectral::{curl, divergence, heat_semigroup, leray_project, riesz_potential};
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Decompose,
    Norms,
    Monitor,
    Verify,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Decompose => "decompose",
            Stage::Norms => "norms",
            Stage::Monitor => "monitor",
            Stage::Verify => "verify",
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn save_report(cfg: &RunConfig, path: &Path, report: &NormReport) -> Result<()> {
    if cfg.writes("csv") {
        report.save_csv(path)?;
    }
    Ok(())
}

pub fn trajectory_dir(out: &Path) -> PathBuf {
    out.join("trajectory")
}

/// Loads the trajectory written by `simulate`.
pub fn load_run(cfg: &RunConfig, out: &Path) -> Result<Trajectory> {
    load_trajectory(&trajectory_dir(out), &cfg.grid()?)
}

fn manifest(stage: Stage, cfg: &RunConfig, started: Instant, extra: serde_json::Value) -> Result<serde_json::Value> {
    let mut m = json!({
        "stage": stage.name(),
        "config": cfg,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "threads": thread_cap()?,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (m.as_object_mut(), extra) {
        obj.extend(more);
    }
    Ok(m)
}

/// Integrates the configured initial data. An unstable run still writes the
/// states reached and a manifest with `status = "failed"`, then reports the
/// failure as an error.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Trajectory> {
    let started = Instant::now();
    let grid = cfg.grid()?;
    let solver = cfg.solver_config(&grid)?;
    let u0 = make_initial_data(&cfg.initial_data()?, &grid)?;
    let run = integrate_until_failure(&u0, &solver)?;
    let dir = trajectory_dir(out);
    save_trajectory(&dir, &run.trajectory)?;
    let mut energy = NormReport::new("energy");
    for (t, u) in run.trajectory.iter() {
        energy.push(t, u.l2_norm().powi(2))?;
    }
    save_report(cfg, &dir.join("energy.csv"), &energy)?;
    let m = manifest(
        Stage::Simulate,
        cfg,
        started,
        json!({
            "status": if run.failure.is_some() { "failed" } else { "ok" },
            "error": run.failure.as_ref().map(|e| e.to_string()),
            "steps": run.steps,
            "samples": run.trajectory.len(),
            "times": run.trajectory.times(),
        }),
    )?;
    write_json(&dir.join("manifest.json"), &m)?;
    match run.failure {
        Some(e) => Err(e),
        None => Ok(run.trajectory),
    }
}

/// Splits the stored trajectory into `m = ⌊p⌋ + 3` cascade layers plus the
/// remainder.
pub fn decompose(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let started = Instant::now();
    let traj = load_run(cfg, out)?;
    let p = cfg.physics.p;
    let state = compute_cascade_at(traj.first()?, p, traj.times())?;
    let dir = out.join("cascade");
    create_dir(&dir)?;
    let remainder = remainder_residual(&traj, &state)?;
    if cfg.writes("nscb") {
        for (k, layer) in state.layers().iter().enumerate() {
            save_trajectory(&dir.join(format!("layer_{}", k + 1)), layer)?;
        }
        save_trajectory(&dir.join("remainder"), &remainder.v)?;
    }
    save_report(cfg, &dir.join("residual.csv"), &remainder.residual)?;
    if cfg.writes("json") {
        let r = 3f64.max(p);
        let decay = fit_dyadic_decay(&state, 1, r).ok();
        write_json(&dir.join("decay.json"), &decay)?;
        write_json(&dir.join("layer_kato.json"), &layer_kato_profile(&state)?)?;
    }
    let m = manifest(
        Stage::Decompose,
        cfg,
        started,
        json!({
            "status": "ok",
            "p": p,
            "layers": state.m(),
            "samples": traj.len(),
            "max_divergence": state.max_divergence(),
            "max_residual": remainder.max_residual(),
        }),
    )?;
    write_json(&dir.join("manifest.json"), &m)?;
    Ok(state.m())
}

/// Critical Besov, `L^p`, `L^∞` and weighted-log series plus the Kato norm.
pub fn norms(cfg: &RunConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let traj = load_run(cfg, out)?;
    let (p, a) = (cfg.physics.p, cfg.physics.a);
    let dir = out.join("norms");
    create_dir(&dir)?;
    save_report(cfg, &dir.join("besov.csv"), &besov_report(&traj, BesovParams::critical(p, f64::INFINITY)?)?)?;
    save_report(cfg, &dir.join("lp.csv"), &lp_report(&traj, p)?)?;
    save_report(cfg, &dir.join("linf.csv"), &lp_report(&traj, f64::INFINITY)?)?;
    save_report(cfg, &dir.join("weighted_log.csv"), &weighted_log_report(&traj, p, a)?)?;
    if cfg.writes("json") {
        let s = critical_index(p);
        let kato = json!({
            "s": s,
            "p": p,
            "q": "inf",
            "value": format_real(kato_norm(&traj, s, p, f64::INFINITY)?),
        });
        write_json(&dir.join("kato.json"), &kato)?;
    }
    let m = manifest(Stage::Norms, cfg, started, json!({"status": "ok", "samples": traj.len()}))?;
    write_json(&dir.join("manifest.json"), &m)
}

pub fn ladder(cfg: &RunConfig) -> Result<ConstantLadder> {
    let ph = &cfg.physics;
    ConstantLadder::new(ph.ladder_m, ph.c_p, ph.d_p).map_err(|e| Error::Config(e.to_string()))
}

pub fn monitor(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let started = Instant::now();
    let traj = load_run(cfg, out)?;
    let ladder = ladder(cfg)?;
    let opts = MonitorOptions {
        t_star: cfg.physics.t_star,
        b: cfg.physics.b,
        ..MonitorOptions::default()
    };
    let report = run_monitor(&traj, cfg.physics.p, cfg.physics.a, &ladder, &opts)?;
    let dir = out.join("monitor");
    create_dir(&dir)?;
    if cfg.writes("csv") {
        let path = dir.join("monitor.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        report.write_csv(std::io::BufWriter::new(file))?;
    }
    if cfg.writes("json") {
        std::fs::write(dir.join("monitor.json"), report.summary_json()?)
            .map_err(|e| Error::io(dir.join("monitor.json"), e))?;
        let bp = back_propagation_check(
            &report.summary.events,
            traj.times(),
            &ladder,
            traj.first()?.grid().box_length(),
        );
        write_json(&dir.join("back_propagation.json"), &bp)?;
    }
    let ok = report.summary.lhs_within_rhs && report.all_finite();
    let m = manifest(
        Stage::Monitor,
        cfg,
        started,
        json!({"status": if ok { "ok" } else { "violated" }, "samples": traj.len()}),
    )?;
    write_json(&dir.join("manifest.json"), &m)?;
    Ok(ok)
}

/// One invariant of the self-check suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn rel(a: &Field, b: &Field) -> Result<f64> {
    let scale = b.l2_norm().max(f64::MIN_POSITIVE);
    Ok(a.sub(b)?.l2_norm() / scale)
}

/// Runs the invariant suite on the configured grid (capped at `n = 32`).
pub fn verify_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let n = cfg.grid.n.min(32);
    let grid = Grid::new(n, cfg.grid.box_length, cfg.grid.dealias)?;
    let mut r = rng(cfg.initial_data.seed);
    let f = random_field(&grid, 3, |k| (-(k * k) / 50.0).exp(), &mut r);
    let s = random_field(&grid, 1, |k| (-(k * k) / 50.0).exp(), &mut r);
    let mut out = Vec::new();

    let mut dev: f64 = 0.0;
    for &k2 in grid.ksq() {
        if k2 > 0.0 {
            let sum: f64 = (-40..=40).map(|j| phi(2f64.powi(-j) * k2.sqrt())).sum();
            dev = dev.max((sum - 1.0).abs());
        }
    }
    out.push(check("partition_of_unity", dev, 1e-10));

    let mut back = Field::from_physical(&grid, &f.to_physical())?;
    back.symmetrize();
    out.push(check("transform_round_trip", rel(&back, &f)?, 1e-13));

    let pf = leray_project(&f)?;
    out.push(check(
        "leray_divergence",
        divergence(&pf)?.l2_norm() / (grid.max_wavenumber() * f.l2_norm()),
        1e-13,
    ));
    out.push(check("leray_idempotent", rel(&leray_project(&pf)?, &pf)?, 1e-13));

    let two = heat_semigroup(&heat_semigroup(&f, 0.03)?, 0.07)?;
    out.push(check("heat_semigroup", rel(&two, &heat_semigroup(&f, 0.1)?)?, 1e-13));

    let rr = riesz_potential(&riesz_potential(&s, 0.75)?, 1.25)?;
    out.push(check("riesz_composition", rel(&rr, &riesz_potential(&s, 2.0)?)?, 1e-13));

    out.push(check(
        "div_curl",
        divergence(&curl(&f)?)?.l2_norm() / (grid.max_wavenumber() * f.l2_norm()),
        1e-13,
    ));

    let tg = make_initial_data(&crate::solver::InitialData::TaylorGreen { amplitude: 1.0 }, &grid)?;
    let horizon = 0.1;
    let traj = crate::solver::integrate(&tg, &SolverConfig::new(&grid, 1e-3, horizon, 100)?)?;
    let exact = tg.scaled((-2.0 * grid.k0() * grid.k0() * horizon).exp());
    out.push(check("taylor_green_exact", rel(traj.last()?, &exact)?, 1e-6));

    let mut bytes = Vec::new();
    let raw = RawSnapshot::from_field(&f, 0.25);
    raw.write(&mut bytes)?;
    let same = RawSnapshot::from_bytes(&bytes)? == raw;
    out.push(check("snapshot_round_trip", if same { 0.0 } else { 1.0 }, 0.0));

    let ladder = ladder(cfg)?;
    out.push(check("ladder_invariants", if ladder.check_invariants() { 0.0 } else { 1.0 }, 0.0));

    let small = ConstantLadder::new(2.0, 1.0, 10.0)?;
    let b = theorem11_bound(2.0, 2.0, 0.0, 0, &small)?;
    let expect = 2f64.ln() + std::f64::consts::E.powi(2);
    out.push(check("bound_log_domain", (b.lnln.unwrap_or(f64::NAN) - expect).abs(), 1e-12));

    let p = cfg.physics.p;
    out.push(check(
        "layer_count",
        (layer_count(p) as f64 - (p.floor() + 3.0)).abs(),
        0.0,
    ));
    if p > 3.0 {
        let e = interpolation_exponents(p, 3.0)?;
        out.push(check("interpolation_exponents", (e.iter().sum::<f64>() - 1.0).abs(), 1e-14));
    }

    let part = DyadicPartition::new(&grid)?;
    let blocks = part.blocks(&f)?;
    let mut total = Field::zeros(&grid, 3);
    for b in &blocks {
        total.axpy(1.0, b)?;
    }
    let mut centred = f.clone();
    centred.remove_mean();
    out.push(check("blocks_sum_to_field", rel(&total, &centred)?, 1e-13));
    Ok(out)
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let checks = verify_suite(cfg)?;
    let dir = out.join("verify");
    create_dir(&dir)?;
    let path = dir.join("verify.csv");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["check", "value", "tolerance", "passed"])?;
    for c in &checks {
        w.write_record([
            c.name.to_string(),
            format_real(c.value),
            format_real(c.tolerance),
            c.passed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(checks.iter().all(|c| c.passed))
}

/// Runs one stage; `Ok(false)` means the stage finished but a checked
/// property failed.
pub fn run_stage(stage: Stage, cfg: &RunConfig, out: &Path) -> Result<bool> {
    create_dir(out)?;
    match stage {
        Stage::Simulate => simulate(cfg, out).map(|_| true),
        Stage::Decompose => decompose(cfg, out).map(|_| true),
        Stage::Norms => norms(cfg, out).map(|_| true),
        Stage::Monitor => monitor(cfg, out),
        Stage::Verify => verify(cfg, out),
    }
}
