//! Time grids and sampled curves.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};

/// Strictly increasing, finite, non-negative evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(FptError::Config("time grid is empty".into()));
        }
        let mut previous = f64::NEG_INFINITY;
        for &t in &times {
            if !t.is_finite() || t < 0.0 || t <= previous {
                return Err(FptError::Config(format!(
                    "time grid must be finite, non-negative and strictly increasing (got {t} after {previous})"
                )));
            }
            previous = t;
        }
        Ok(Self { times })
    }

    /// `start, start + step, …` up to `stop` inclusive (within half a step's rounding).
    pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(FptError::Config(format!(
                "invalid grid {start}:{stop}:{step}; need start <= stop and step > 0"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let times = (0..count).map(|i| start + step * i as f64).collect();
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.times[0]
    }

    pub fn last(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().copied()
    }
}

impl FromStr for TimeGrid {
    type Err = FptError;

    /// `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(FptError::Config(format!("grid '{s}' is not start:stop:step")));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| FptError::Config(format!("grid '{s}': '{p}' is not a number")))
        };
        Self::uniform(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

/// Analytic values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub times: TimeGrid,
    pub values: Vec<f64>,
}

impl Curve {
    /// Evaluates `f` at every grid time, stopping at the first error.
    pub fn tabulate(times: &TimeGrid, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = times.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.clone(),
            values,
        })
    }
}

/// Fraction of realizations still alive at each grid time, with binomial
/// standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub times: TimeGrid,
    pub estimate: Vec<f64>,
    pub std_err: Vec<f64>,
    pub realizations: usize,
}

impl EmpiricalCurve {
    /// `P̂(τ > t)` from kill times; censored realizations carry `+∞`.
    pub fn from_kill_times(times: &TimeGrid, kills: &[f64]) -> Result<Self> {
        if kills.is_empty() {
            return Err(FptError::Config("no realizations".into()));
        }
        if kills.iter().any(|k| k.is_nan()) {
            return Err(FptError::domain("from_kill_times", "kill time is NaN"));
        }
        let mut sorted = kills.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut estimate = Vec::with_capacity(times.len());
        let mut std_err = Vec::with_capacity(times.len());
        for t in times.iter() {
            let killed = sorted.partition_point(|&k| k <= t);
            let p = (sorted.len() - killed) as f64 / n;
            estimate.push(p);
            std_err.push((p * (1.0 - p) / n).sqrt());
        }
        Ok(Self {
            times: times.clone(),
            estimate,
            std_err,
            realizations: kills.len(),
        })
    }
}
