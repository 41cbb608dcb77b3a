//! Sampled time series of fields on a common grid.

use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::SamplingMismatch(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        let mut out = Trajectory::new();
        for (t, f) in times.into_iter().zip(fields) {
            out.push(t, f)?;
        }
        Ok(out)
    }

    /// Appends a sample; times must increase strictly and grids must agree.
    pub fn push(&mut self, t: f64, f: Field) -> Result<()> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::param("time", format!("{t} is not a valid sample time")));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::SamplingMismatch(format!(
                    "time {t} does not follow {last}"
                )));
            }
            self.fields[0].check_compatible(&f)?;
        }
        self.times.push(t);
        self.fields.push(f);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn field(&self, i: usize) -> &Field {
        &self.fields[i]
    }

    pub fn first(&self) -> Result<&Field> {
        self.fields.first().ok_or(Error::EmptyTrajectory)
    }

    pub fn last(&self) -> Result<&Field> {
        self.fields.last().ok_or(Error::EmptyTrajectory)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Field)> {
        self.times.iter().copied().zip(&self.fields)
    }

    /// Index of the sample closest to `t`.
    pub fn nearest(&self, t: f64) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let (lo, hi) = (self.times[0], *self.times.last().unwrap());
        if t < lo - 1e-12 * hi.abs().max(1.0) || t > hi + 1e-12 * hi.abs().max(1.0) {
            return Err(Error::TimeOutOfSpan { t, lo, hi });
        }
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        Ok(best)
    }

    /// Applies `op` sample by sample.
    pub fn map<F>(&self, mut op: F) -> Result<Trajectory>
    where
        F: FnMut(f64, &Field) -> Result<Field>,
    {
        let mut out = Trajectory::new();
        for (t, f) in self.iter() {
            out.push(t, op(t, f)?)?;
        }
        Ok(out)
    }

    /// Checks that two trajectories share sample times.
    pub fn check_aligned(&self, other: &Trajectory) -> Result<()> {
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::SamplingMismatch("sample times differ".into()));
        }
        Ok(())
    }
}
