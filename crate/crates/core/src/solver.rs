//! Pseudospectral Navier–Stokes on the periodic box in projection form,
//! `∂_t u = Δu - ℙ∇·(u ⊗ u)`, advanced with second-order exponential time
//! differencing.

use serde::{Deserialize, Serialize};

use crate::cascade::phi_weights;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::littlewood_paley::DyadicPartition;
use crate::norms::{besov_norm, BesovParams};
use crate::random::{random_solenoidal, rng};
use crate::spectral::{advection_from_physical, curl, relative_divergence};
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EtdRk2,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub grid: Grid,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub save_every: usize,
}

impl SolverConfig {
    pub fn new(grid: &Grid, dt: f64, horizon: f64, save_every: usize) -> Result<Self> {
        let cfg = SolverConfig {
            grid: grid.clone(),
            dt,
            horizon,
            scheme: Scheme::EtdRk2,
            save_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::param("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if self.save_every == 0 {
            return Err(Error::param("save_every", "must be at least 1"));
        }
        let k = self.grid.k_max();
        let bound = 10.0 / (k * k);
        if self.dt > bound {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        Ok(())
    }

    /// Step count and the step that lands exactly on the horizon.
    pub fn steps(&self) -> (usize, f64) {
        let steps = (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize;
        (steps, self.horizon / steps as f64)
    }
}

/// Families of initial velocity fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `A (sin x cos y, -cos x sin y, 0)` in units of the fundamental wavenumber.
    TaylorGreen { amplitude: f64 },
    /// `A (sin x cos y cos z, -cos x sin y cos z, 0)`.
    TaylorGreen3d { amplitude: f64 },
    /// `A sin(k·x)` along a unit polarization orthogonal to `k`.
    SingleMode {
        wavevector: [i64; 3],
        amplitude: f64,
        polarization: [f64; 3],
    },
    /// Random solenoidal field rescaled to critical Besov norm `target`.
    RandomBesov { p: f64, target: f64, seed: u64 },
}

/// Smooth random spectrum used for Besov-normalized data.
pub fn random_spectrum(k: f64, k_peak: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        let x = k / k_peak;
        x * x * (-x * x).exp() / (k * k)
    }
}

pub fn make_initial_data(cfg: &InitialData, grid: &Grid) -> Result<Field> {
    let k0 = grid.k0();
    let u = match *cfg {
        InitialData::TaylorGreen { amplitude } => Field::from_fn(grid, 3, |x| {
            let (a, b) = (k0 * x[0], k0 * x[1]);
            vec![
                amplitude * a.sin() * b.cos(),
                -amplitude * a.cos() * b.sin(),
                0.0,
            ]
        })?,
        InitialData::TaylorGreen3d { amplitude } => Field::from_fn(grid, 3, |x| {
            let (a, b, c) = (k0 * x[0], k0 * x[1], k0 * x[2]);
            vec![
                amplitude * a.sin() * b.cos() * c.cos(),
                -amplitude * a.cos() * b.sin() * c.cos(),
                0.0,
            ]
        })?,
        InitialData::SingleMode {
            wavevector,
            amplitude,
            polarization,
        } => {
            let k = [
                wavevector[0] as f64 * k0,
                wavevector[1] as f64 * k0,
                wavevector[2] as f64 * k0,
            ];
            let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let e = polarization;
            let en = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
            if kk == 0.0 || en == 0.0 {
                return Err(Error::param("single_mode", "wavevector and polarization must be nonzero"));
            }
            if (k[0] * e[0] + k[1] * e[1] + k[2] * e[2]).abs() > 1e-12 * kk * en {
                return Err(Error::param("polarization", "must be orthogonal to the wavevector"));
            }
            if grid.mode_index(wavevector).is_none() {
                return Err(Error::param("wavevector", "outside the retained band"));
            }
            Field::from_fn(grid, 3, |x| {
                let s = amplitude * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin() / en;
                vec![s * e[0], s * e[1], s * e[2]]
            })?
        }
        InitialData::RandomBesov { p, target, seed } => {
            if !(p > 3.0) || !(target > 0.0) {
                return Err(Error::param("random_besov", "needs p > 3 and a positive target"));
            }
            let peak = 0.25 * grid.k_max();
            let mut r = rng(seed);
            let mut u = random_solenoidal(grid, |k| random_spectrum(k, peak), &mut r)?;
            let part = DyadicPartition::new(grid)?;
            let bp = BesovParams::critical(p, f64::INFINITY)?;
            let norm = besov_norm(&u, bp, &part)?;
            if !(norm > 0.0) {
                return Err(Error::InsufficientSignal("seed field has zero Besov norm".into()));
            }
            u.scale(target / norm);
            u
        }
    };
    let mut u = u;
    u.remove_mean();
    Ok(u)
}

/// Output of a run that may stop early.
#[derive(Debug)]
pub struct Run {
    pub trajectory: Trajectory,
    pub steps: usize,
    pub failure: Option<Error>,
}

fn nonlinear(u: &Field) -> Result<Field> {
    advection_from_physical(u.grid(), &u.to_physical())
}

fn check_state(u: &Field, t: f64, dt: f64) -> Result<()> {
    if !u.is_finite() {
        return Err(Error::Numerical {
            t,
            reason: "non-finite coefficients".into(),
        });
    }
    let phys = u.to_physical();
    let vmax = crate::field::magnitude(&phys).into_iter().fold(0.0, f64::max);
    let cfl = dt * vmax / u.grid().spacing();
    if cfl > 1.0 {
        return Err(Error::Numerical {
            t,
            reason: format!("CFL number {cfl:.3} exceeds 1"),
        });
    }
    Ok(())
}

/// Integrates until the horizon or the first failed check; the trajectory
/// holds every saved state up to the last valid one.
pub fn integrate_until_failure(u0: &Field, cfg: &SolverConfig) -> Result<Run> {
    cfg.validate()?;
    u0.expect_components(3)?;
    cfg.grid.check_same(u0.grid())?;
    let div = relative_divergence(u0);
    if div > 1e-10 {
        return Err(Error::NotSolenoidal(div));
    }
    let (steps, h) = cfg.steps();
    let grid = &cfg.grid;
    let len = grid.band_len();
    let weights: Vec<[f64; 3]> = grid
        .ksq()
        .iter()
        .map(|&k2| {
            let z = k2 * h;
            let (p1, p2) = phi_weights(z);
            [(-z).exp(), h * p1, h * p2]
        })
        .collect();

    let mut traj = Trajectory::new();
    let mut u = u0.clone();
    traj.push(0.0, u.clone())?;
    if let Err(e) = check_state(&u, 0.0, h) {
        return Ok(Run {
            trajectory: traj,
            steps: 0,
            failure: Some(e),
        });
    }
    for step in 1..=steps {
        let t = h * step as f64;
        let n0 = nonlinear(&u)?;
        let mut a = u.clone();
        {
            let ac = a.coeffs_mut();
            for (i, c) in ac.iter_mut().enumerate() {
                let [e, w1, _] = weights[i % len];
                *c = *c * e + n0.coeffs()[i] * w1;
            }
        }
        let na = nonlinear(&a)?;
        {
            let ac = a.coeffs_mut();
            for (i, c) in ac.iter_mut().enumerate() {
                let w2 = weights[i % len][2];
                *c += (na.coeffs()[i] - n0.coeffs()[i]) * w2;
            }
        }
        if let Err(e) = check_state(&a, t, h) {
            let last = t - h;
            if traj.times().last().is_some_and(|&s| s < last) {
                traj.push(last, u)?;
            }
            return Ok(Run {
                trajectory: traj,
                steps: step - 1,
                failure: Some(e),
            });
        }
        u = a;
        if step % cfg.save_every == 0 || step == steps {
            traj.push(t, u.clone())?;
        }
    }
    Ok(Run {
        trajectory: traj,
        steps,
        failure: None,
    })
}

/// Like [`integrate_until_failure`], turning an early stop into an error.
pub fn integrate(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    let run = integrate_until_failure(u0, cfg)?;
    match run.failure {
        Some(e) => Err(e),
        None => Ok(run.trajectory),
    }
}

/// Vorticity `ω = ∇ × u` at every sample.
pub fn vorticity_traj(traj: &Trajectory) -> Result<Trajectory> {
    traj.map(|_, u| curl(u))
}

/// Kinetic energy `‖u‖²_{L²}` at every sample.
pub fn energy_series(traj: &Trajectory) -> Vec<f64> {
    traj.fields().iter().map(|u| u.l2_norm().powi(2)).collect()
}
