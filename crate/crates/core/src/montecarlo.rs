//! Stochastic oracles: exact event-driven simulation of the jump models and
//! Euler–Maruyama simulation of the two-particle single file.
//!
//! Realization `i` draws from its own ChaCha8 stream `(seed, i)`, so results
//! do not depend on how rayon splits the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipoisson::BiPoissonParams;
use crate::curve::{EmpiricalCurve, TimeGrid};
use crate::error::{FptError, Result};
use crate::trivpoisson::TriPoissonParams;

/// Largest `dt / horizon` accepted for diffusion runs.
pub const MAX_RELATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_realizations: usize,
    pub seed: u64,
    pub horizon: f64,
    /// Diffusion time step; ignored by the jump models.
    pub dt: f64,
    pub grid: TimeGrid,
}

impl McConfig {
    pub fn new(n_realizations: usize, seed: u64, horizon: f64, dt: f64, grid: TimeGrid) -> Result<Self> {
        if n_realizations == 0 {
            return Err(FptError::Config("need at least one realization".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(FptError::Config(format!("horizon {horizon} must be > 0")));
        }
        if !(dt > 0.0) {
            return Err(FptError::Config(format!("dt {dt} must be > 0")));
        }
        if grid.last() > horizon {
            return Err(FptError::Config(format!(
                "grid ends at {} beyond the horizon {horizon}",
                grid.last()
            )));
        }
        Ok(Self {
            n_realizations,
            seed,
            horizon,
            dt,
            grid,
        })
    }

    /// Horizon at the last grid point.
    pub fn jump(n_realizations: usize, seed: u64, grid: TimeGrid) -> Result<Self> {
        let horizon = grid.last().max(f64::MIN_POSITIVE);
        Self::new(n_realizations, seed, horizon, 1.0, grid)
    }

    fn check_diffusion(&self) -> Result<()> {
        if self.dt > MAX_RELATIVE_STEP * self.horizon {
            return Err(FptError::Config(format!(
                "dt {} is coarser than {MAX_RELATIVE_STEP}·horizon",
                self.dt
            )));
        }
        Ok(())
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Runs `f` once per realization, in index order.
    fn run<T: Send>(&self, f: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
        (0..self.n_realizations)
            .into_par_iter()
            .map(|i| f(&mut self.rng(i)))
            .collect()
    }
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Index of the stream that fired, chosen proportionally to `rates`.
fn pick(rng: &mut ChaCha8Rng, rates: &[f64], total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (k, &r) in rates.iter().enumerate() {
        if u < r {
            return k;
        }
        u -= r;
    }
    rates.iter().rposition(|&r| r > 0.0).unwrap_or(0)
}

/// First and last kill times of one bivariate realization; `+∞` if not
/// reached by `horizon`.
pub fn bipoisson_kill_times(params: &BiPoissonParams, horizon: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let m = params.barrier;
    let mut count = [0u32; 2];
    let mut alive = [true; 2];
    let mut kills = Vec::with_capacity(2);
    let mut t = 0.0;
    while alive[0] || alive[1] {
        let rates = [
            if alive[0] { params.lambda1 } else { 0.0 },
            if alive[1] { params.lambda2 } else { 0.0 },
            if alive[0] && alive[1] { params.lambda12 } else { 0.0 },
        ];
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            break;
        }
        t += exponential(rng, total);
        if t > horizon {
            break;
        }
        match pick(rng, &rates, total) {
            0 => count[0] += 1,
            1 => count[1] += 1,
            _ => {
                count[0] += 1;
                count[1] += 1;
            }
        }
        for c in 0..2 {
            if alive[c] && count[c] >= m {
                alive[c] = false;
                kills.push(t);
            }
        }
    }
    let first = kills.first().copied().unwrap_or(f64::INFINITY);
    let last = if kills.len() == 2 { kills[1] } else { f64::INFINITY };
    (first, last)
}

/// Empirical `S²` (first kill) and `S¹` (last kill) of the bivariate model.
pub fn simulate_bipoisson(params: &BiPoissonParams, cfg: &McConfig) -> Result<(EmpiricalCurve, EmpiricalCurve)> {
    let horizon = cfg.horizon;
    let kills = cfg.run(|rng| bipoisson_kill_times(params, horizon, rng));
    let first: Vec<f64> = kills.iter().map(|k| k.0).collect();
    let last: Vec<f64> = kills.iter().map(|k| k.1).collect();
    Ok((
        EmpiricalCurve::from_kill_times(&cfg.grid, &first)?,
        EmpiricalCurve::from_kill_times(&cfg.grid, &last)?,
    ))
}

/// Unkilled counts `(X₁(t), X₂(t))` for `n` independent realizations.
pub fn sample_bivariate_counts(params: &BiPoissonParams, t: f64, n: usize, seed: u64) -> Result<Vec<(u64, u64)>> {
    let draw = |rate: f64, rng: &mut ChaCha8Rng| -> Result<u64> {
        if rate * t <= 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(rate * t).map_err(|e| FptError::domain("sample_bivariate_counts", e.to_string()))?;
        Ok(d.sample(rng) as u64)
    };
    let cfg = McConfig::jump(n, seed, TimeGrid::new(vec![t.max(0.0)])?)?;
    cfg.run(|rng| {
        let y1 = draw(params.lambda1, rng)?;
        let y2 = draw(params.lambda2, rng)?;
        let y12 = draw(params.lambda12, rng)?;
        Ok((y1 + y12, y2 + y12))
    })
    .into_iter()
    .collect()
}

/// Kill events of one trivariate realization: `(time, mask of coordinates killed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillHistory {
    pub events: Vec<(f64, u32)>,
}

impl KillHistory {
    /// Kill masks of the events up to and including `t`.
    pub fn steps_until(&self, t: f64) -> Vec<u32> {
        self.events.iter().take_while(|e| e.0 <= t).map(|e| e.1).collect()
    }

    /// Time at which at least `k` coordinates are dead, `+∞` if never.
    pub fn kth_kill(&self, k: u32) -> f64 {
        let mut dead = 0;
        for &(time, mask) in &self.events {
            dead += mask.count_ones();
            if dead >= k {
                return time;
            }
        }
        f64::INFINITY
    }
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// One trivariate realization up to `horizon`.
pub fn trivariate_history(params: &TriPoissonParams, horizon: f64, rng: &mut ChaCha8Rng) -> KillHistory {
    let mut alive = 0b111u32;
    let mut events = Vec::with_capacity(3);
    let mut t = 0.0;
    let mut rates = [0.0; 6];
    while alive != 0 {
        for (i, rate) in rates.iter_mut().take(3).enumerate() {
            *rate = if alive & (1 << i) != 0 { params.lambda[i] } else { 0.0 };
        }
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            let both = (1 << i) | (1 << j);
            rates[3 + p] = if alive & both == both { params.cross[p] } else { 0.0 };
        }
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            break;
        }
        t += exponential(rng, total);
        if t > horizon {
            break;
        }
        let k = pick(rng, &rates, total);
        let mask = if k < 3 {
            1 << k
        } else {
            let (i, j) = PAIRS[k - 3];
            (1 << i) | (1 << j)
        };
        alive &= !mask;
        events.push((t, mask));
    }
    KillHistory { events }
}

/// Kill histories for every realization, in realization order.
pub fn simulate_trivariate_histories(params: &TriPoissonParams, cfg: &McConfig) -> Vec<KillHistory> {
    let horizon = cfg.horizon;
    cfg.run(|rng| trivariate_history(params, horizon, rng))
}

/// Empirical `S³`, `S²`, `S¹`: survival of the first, second and third kill.
pub fn simulate_trivariate(params: &TriPoissonParams, cfg: &McConfig) -> Result<[EmpiricalCurve; 3]> {
    let histories = simulate_trivariate_histories(params, cfg);
    let curve = |k: u32| {
        let kills: Vec<f64> = histories.iter().map(|h| h.kth_kill(k)).collect();
        EmpiricalCurve::from_kill_times(&cfg.grid, &kills)
    };
    Ok([curve(1)?, curve(2)?, curve(3)?])
}

/// One single-file realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleFileRun {
    /// Kill time of the rightmost particle.
    pub first_kill: f64,
    /// Kill time of the leftmost particle.
    pub last_kill: f64,
    /// Leftmost position when the rightmost is killed, if that happened.
    pub survivor_position: Option<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Two ordered particles, unit diffusivity, reflecting at 0, killed at 1.
pub fn singlefile_run(dt: f64, horizon: f64, rng: &mut ChaCha8Rng) -> SingleFileRun {
    let sigma = (2.0 * dt).sqrt();
    let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
    let (mut left, mut right) = (a.min(b), a.max(b));
    let steps = (horizon / dt).round() as u64;
    let mut run = SingleFileRun {
        first_kill: f64::INFINITY,
        last_kill: f64::INFINITY,
        survivor_position: None,
    };
    let mut step = 0;
    while step < steps {
        step += 1;
        left = (left + sigma * gaussian(rng)).abs();
        right = (right + sigma * gaussian(rng)).abs();
        if left > right {
            std::mem::swap(&mut left, &mut right);
        }
        if right >= 1.0 {
            let t = step as f64 * dt;
            run.first_kill = t;
            if left >= 1.0 {
                run.last_kill = t;
                return run;
            }
            run.survivor_position = Some(left);
            break;
        }
    }
    while step < steps {
        step += 1;
        left = (left + sigma * gaussian(rng)).abs();
        if left >= 1.0 {
            run.last_kill = step as f64 * dt;
            break;
        }
    }
    run
}

/// All single-file realizations, in realization order.
pub fn simulate_singlefile_runs(cfg: &McConfig) -> Result<Vec<SingleFileRun>> {
    cfg.check_diffusion()?;
    let (dt, horizon) = (cfg.dt, cfg.horizon);
    Ok(cfg.run(|rng| singlefile_run(dt, horizon, rng)))
}

/// Empirical survival of the rightmost (`S²`) and leftmost (`S¹`) particle.
pub fn simulate_singlefile(cfg: &McConfig) -> Result<(EmpiricalCurve, EmpiricalCurve)> {
    let runs = simulate_singlefile_runs(cfg)?;
    let first: Vec<f64> = runs.iter().map(|r| r.first_kill).collect();
    let last: Vec<f64> = runs.iter().map(|r| r.last_kill).collect();
    Ok((
        EmpiricalCurve::from_kill_times(&cfg.grid, &first)?,
        EmpiricalCurve::from_kill_times(&cfg.grid, &last)?,
    ))
}

/// One particle from a uniform start under the same scheme.
pub fn simulate_free_particle(cfg: &McConfig) -> Result<EmpiricalCurve> {
    cfg.check_diffusion()?;
    let sigma = (2.0 * cfg.dt).sqrt();
    let steps = (cfg.horizon / cfg.dt).round() as u64;
    let dt = cfg.dt;
    let kills = cfg.run(|rng| {
        let mut x = rng.random::<f64>();
        for step in 1..=steps {
            x = (x + sigma * gaussian(rng)).abs();
            if x >= 1.0 {
                return step as f64 * dt;
            }
        }
        f64::INFINITY
    });
    EmpiricalCurve::from_kill_times(&cfg.grid, &kills)
}
