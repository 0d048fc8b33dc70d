//! Bivariate Poisson process with a killing barrier.
//!
//! `X₁ = Y₁ + Y₁₂` and `X₂ = Y₂ + Y₁₂` are built from three independent
//! Poisson streams. A coordinate is killed when its count reaches `M`; once a
//! coordinate is gone the shared stream `Y₁₂` stops acting on the survivor.
//!
//! `S²` (both alive) is a finite sum over the joint PMF. The last-exit survival
//! `S¹` adds, for each killing order, the integral over the first killing time
//! of the survivor's remaining survival, which reduces to the convolution
//! integrals of [`crate::specfun::conv_integral`].

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::numeric::{ln_binomial, ln_pow, ln_pow_over_factorial, signed_exp, CompensatedSum};
use crate::specfun::{ln_conv_integral, ln_conv_integral_dt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiPoissonParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda12: f64,
    pub barrier: u32,
}

impl BiPoissonParams {
    pub fn new(lambda1: f64, lambda2: f64, lambda12: f64, barrier: u32) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("lambda12", lambda12)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(FptError::Config(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if barrier == 0 {
            return Err(FptError::Config("barrier M must be >= 1".into()));
        }
        if lambda1 + lambda12 <= 0.0 && lambda2 + lambda12 <= 0.0 {
            return Err(FptError::Config(
                "at least one coordinate needs a positive total intensity".into(),
            ));
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda12,
            barrier,
        })
    }

    /// Sum of the three stream intensities.
    pub fn total_rate(&self) -> f64 {
        self.lambda1 + self.lambda2 + self.lambda12
    }

    /// Marginal intensities `(λ₁+λ₁₂, λ₂+λ₁₂)` while both coordinates are alive.
    pub fn marginal_rates(&self) -> (f64, f64) {
        (self.lambda1 + self.lambda12, self.lambda2 + self.lambda12)
    }

    /// Pearson correlation of `(X₁, X₂)` at any fixed time.
    pub fn correlation(&self) -> f64 {
        let (m1, m2) = self.marginal_rates();
        self.lambda12 / (m1 * m2).sqrt()
    }

    fn swapped(&self) -> Self {
        Self {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
            ..*self
        }
    }
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FptError::domain(op, format!("t = {t} must be finite and >= 0")));
    }
    Ok(())
}

fn check_positive_time(op: &'static str, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FptError::domain(op, format!("t = {t} must be finite and > 0")));
    }
    Ok(())
}

/// `P_λ(k, t) = (λt)^k e^{−λt} / k!`.
pub fn poisson_pmf(k: u32, rate: f64, t: f64) -> f64 {
    signed_exp(1.0, ln_pow_over_factorial(rate * t, k) - rate * t)
}

/// Survival of a single Poisson coordinate with killing barrier `M`.
pub fn marginal_survival(rate: f64, barrier: u32, t: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 0..barrier {
        acc.add(poisson_pmf(k, rate, t));
    }
    acc.value()
}

/// First-passage density of a single Poisson coordinate to the barrier `M`.
///
/// The defining sum `Σ_{k<M} λ^k t^{k−1}/k! (λt−k) e^{−λt}` telescopes to
/// `λ P_λ(M−1, t)`, which is what is evaluated.
pub fn marginal_fpt(rate: f64, barrier: u32, t: f64) -> f64 {
    if barrier == 0 {
        return 0.0;
    }
    rate * poisson_pmf(barrier - 1, rate, t)
}

/// `ln` of one addend of the joint PMF: `(λ₁t)^{x−k}(λ₂t)^{y−k}(λ₁₂t)^k / ((x−k)!(y−k)!k!)`.
fn ln_joint_addend(x1: u32, x2: u32, k: u32, p: &BiPoissonParams, t: f64) -> f64 {
    ln_pow_over_factorial(p.lambda1 * t, x1 - k)
        + ln_pow_over_factorial(p.lambda2 * t, x2 - k)
        + ln_pow_over_factorial(p.lambda12 * t, k)
}

/// Joint PMF `P(X₁ = x₁, X₂ = x₂)` at time `t` of the unkilled process.
pub fn joint_pmf(x1: u32, x2: u32, params: &BiPoissonParams, t: f64) -> f64 {
    let decay = params.total_rate() * t;
    let mut acc = CompensatedSum::new();
    for k in 0..=x1.min(x2) {
        acc.add(signed_exp(1.0, ln_joint_addend(x1, x2, k, params, t) - decay));
    }
    acc.value()
}

/// `P(X₁ = x, t | X₂ = y, t)`: a Poisson(λ₁t) count convolved with the
/// binomial share of the `y` events of `X₂` that came from `Y₁₂`.
pub fn conditional_pmf(x: u32, y: u32, params: &BiPoissonParams, t: f64) -> f64 {
    let mu = params.lambda2 + params.lambda12;
    let (p, q) = if mu > 0.0 {
        (params.lambda12 / mu, params.lambda2 / mu)
    } else {
        (0.0, 1.0)
    };
    let mut acc = CompensatedSum::new();
    for j in 0..=x.min(y) {
        let ln_term =
            ln_binomial(y, j) + ln_pow(p, j) + ln_pow(q, y - j) + ln_pow_over_factorial(params.lambda1 * t, x - j)
                - params.lambda1 * t;
        acc.add(signed_exp(1.0, ln_term));
    }
    acc.value()
}

/// `S²(t)`: probability that neither coordinate has been killed.
pub fn survival_both(params: &BiPoissonParams, t: f64) -> Result<f64> {
    check_time("survival_both", t)?;
    let m = params.barrier;
    let decay = params.total_rate() * t;
    let mut acc = CompensatedSum::new();
    for x in 0..m {
        for y in 0..m {
            for k in 0..=x.min(y) {
                acc.add(signed_exp(1.0, ln_joint_addend(x, y, k, params, t) - decay));
            }
        }
    }
    Ok(acc.value())
}

/// `F²(t) = −dS²/dt`, the density of the first killing time.
pub fn fpt_both(params: &BiPoissonParams, t: f64) -> Result<f64> {
    check_positive_time("fpt_both", t)?;
    let m = params.barrier;
    let a = params.total_rate();
    let decay = a * t;
    let mut acc = CompensatedSum::new();
    for x in 0..m {
        for y in 0..m {
            for k in 0..=x.min(y) {
                // −d/dt [t^n e^{−at}] = (a − n/t) t^n e^{−at}, n = x + y − k
                let n = f64::from(x + y - k);
                let factor = a - n / t;
                let mag = ln_joint_addend(x, y, k, params, t) - decay;
                acc.add(signed_exp(factor.signum(), mag + factor.abs().ln()));
            }
        }
    }
    Ok(acc.value())
}

/// One killing order of the last-exit correction: coordinate "other" is
/// killed first at `τ`, the survivor (coordinate 1 of `p`) then needs to move
/// from `i` to `j < M` during `(τ, t]` at rate `λ₁`.
///
/// Returns the contribution to `S¹` and, when `with_derivative`, its
/// negative time derivative.
fn survivor_branch(p: &BiPoissonParams, t: f64, with_derivative: bool) -> Result<(f64, f64)> {
    let m = p.barrier;
    let lam = p.lambda1;
    let mu = p.lambda2 + p.lambda12;
    if mu <= 0.0 || t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let share_shared = p.lambda12 / mu;
    let share_own = p.lambda2 / mu;
    let ln_mu = mu.ln();

    let mut value = CompensatedSum::new();
    let mut deriv = CompensatedSum::new();
    for j in 0..m {
        for i in 0..=j {
            let ln_move = ln_pow_over_factorial(lam, j - i);
            if ln_move == f64::NEG_INFINITY {
                continue;
            }
            for k in 0..=i {
                // share of the M events of the killed coordinate carried by Y₁₂
                let ln_binom = ln_binomial(m, k) + ln_pow(share_shared, k) + ln_pow(share_own, m - k);
                let ln_prior = ln_pow_over_factorial(lam, i - k);
                let ln_front = ln_move + ln_binom + ln_prior;
                if ln_front == f64::NEG_INFINITY {
                    continue;
                }
                let alpha = j - i;
                for l in 0..m {
                    let ln_coef = ln_front + ln_pow_over_factorial(mu, l) - lam * t;
                    let beta = i - k + l;
                    // H₁: μ ∫ (t−τ)^α τ^β e^{−μτ} dτ
                    let ln_h1 = ln_mu + ln_conv_integral(alpha, beta, mu, t)?;
                    value.add(signed_exp(1.0, ln_coef + ln_h1));
                    // H₂: −l ∫ (t−τ)^α τ^{β−1} e^{−μτ} dτ, absent for l = 0
                    let ln_h2 = if l > 0 {
                        f64::from(l).ln() + ln_conv_integral(alpha, beta - 1, mu, t)?
                    } else {
                        f64::NEG_INFINITY
                    };
                    value.add(signed_exp(-1.0, ln_coef + ln_h2));

                    if with_derivative {
                        // −d/dt [e^{−λt} g(t)] = e^{−λt} (λ g − g')
                        let ln_h1_dt = ln_mu + ln_conv_integral_dt(alpha, beta, mu, t)?;
                        let ln_h2_dt = if l > 0 {
                            f64::from(l).ln() + ln_conv_integral_dt(alpha, beta - 1, mu, t)?
                        } else {
                            f64::NEG_INFINITY
                        };
                        if lam > 0.0 {
                            deriv.add(signed_exp(1.0, lam.ln() + ln_coef + ln_h1));
                            deriv.add(signed_exp(-1.0, lam.ln() + ln_coef + ln_h2));
                        }
                        deriv.add(signed_exp(-1.0, ln_coef + ln_h1_dt));
                        deriv.add(signed_exp(1.0, ln_coef + ln_h2_dt));
                    }
                }
            }
        }
    }
    Ok((value.value(), deriv.value()))
}

/// `S¹(t)`: probability that at least one coordinate is still alive.
pub fn survival_last(params: &BiPoissonParams, t: f64) -> Result<f64> {
    check_time("survival_last", t)?;
    let s2 = survival_both(params, t)?;
    let (first_killed_2, _) = survivor_branch(params, t, false)?;
    let (first_killed_1, _) = survivor_branch(&params.swapped(), t, false)?;
    Ok(s2 + first_killed_2 + first_killed_1)
}

/// `F¹(t) = −dS¹/dt`, evaluated by differentiating each convolution term.
pub fn fpt_last(params: &BiPoissonParams, t: f64) -> Result<f64> {
    check_positive_time("fpt_last", t)?;
    let f2 = fpt_both(params, t)?;
    let (_, d2) = survivor_branch(params, t, true)?;
    let (_, d1) = survivor_branch(&params.swapped(), t, true)?;
    Ok(f2 + d2 + d1)
}
