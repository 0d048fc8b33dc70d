//! Two hard-core Brownian particles in `[0, 1]` (unit diffusivity) with a
//! reflecting wall at 0 and a killing wall at 1, both started uniformly.
//!
//! Single-particle modes are `φ_k(x) = √2 cos((2k+1)πx/2)` with eigenvalues
//! `λ_k = (2k+1)²π²/4`, orthonormal on `[0, 1]`. With `c_k = ∫₀¹ φ_k` the
//! uniform-start weights are `Ψ_{k₁,k₂} = c_{k₁} c_{k₂}` and
//! `Λ_{k₁,k₂} = λ_{k₁} + λ_{k₂}`.
//!
//! Double series are truncated at `K` modes per index. Sums over the second
//! index of the post-kill term converge only like `1/K`, so that remainder is
//! added in closed form.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::error::{FptError, Result};
use crate::numeric::CompensatedSum;
use crate::specfun::{adaptive_quad, adaptive_quad_vec, QuadTolerance};

pub const MIN_MODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    /// Modes kept per index.
    pub k_trunc: usize,
    pub quad_tol: QuadTolerance,
    /// Smallest time at which the series are evaluated.
    pub time_floor: f64,
}

impl SpectralParams {
    pub fn new(k_trunc: usize, quad_tol: QuadTolerance, time_floor: f64) -> Result<Self> {
        if k_trunc < MIN_MODES {
            return Err(FptError::Config(format!("K = {k_trunc} must be >= {MIN_MODES}")));
        }
        if !(time_floor > 0.0) || !time_floor.is_finite() {
            return Err(FptError::Config(format!("time floor {time_floor} must be > 0")));
        }
        Ok(Self {
            k_trunc,
            quad_tol,
            time_floor,
        })
    }

    /// Bound on the first neglected pair mode, `e^{−Λ_{K,0} t}`.
    pub fn truncation_tail(&self, t: f64) -> f64 {
        (-(eigenvalue(self.k_trunc as u32) + eigenvalue(0)) * t).exp()
    }

    fn check_time(&self, op: &'static str, t: f64) -> Result<()> {
        if !t.is_finite() || t < self.time_floor {
            return Err(FptError::domain(
                op,
                format!("t = {t} is below the time floor {}", self.time_floor),
            ));
        }
        let tail = self.truncation_tail(t);
        if tail > self.quad_tol.abs_tol {
            return Err(FptError::Truncation { op, t, tail });
        }
        Ok(())
    }
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            k_trunc: 64,
            quad_tol: QuadTolerance::default(),
            time_floor: 1e-3,
        }
    }
}

fn odd(k: u32) -> f64 {
    f64::from(2 * k + 1)
}

fn parity(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `λ_k = (2k+1)²π²/4`.
pub fn eigenvalue(k: u32) -> f64 {
    let w = odd(k) * FRAC_PI_2;
    w * w
}

/// `φ_k(x) = √2 cos((2k+1)πx/2)`.
pub fn phi(k: u32, x: f64) -> f64 {
    SQRT_2 * (odd(k) * FRAC_PI_2 * x).cos()
}

/// `dφ_k/dx`.
pub fn phi_prime(k: u32, x: f64) -> f64 {
    let w = odd(k) * FRAC_PI_2;
    -SQRT_2 * w * (w * x).sin()
}

/// `dφ_k/dx` at the killing wall, `−√2 (2k+1)π(−1)^k / 2`.
pub fn phi_prime_at_wall(k: u32) -> f64 {
    -SQRT_2 * odd(k) * FRAC_PI_2 * parity(k)
}

/// `c_k = ∫₀¹ φ_k = 2√2 (−1)^k / ((2k+1)π)`.
pub fn phi_mean(k: u32) -> f64 {
    2.0 * SQRT_2 * parity(k) / (odd(k) * PI)
}

/// `Ψ_{k₁,k₂} = 8(−1)^{k₁+k₂} / (π²(2k₁+1)(2k₂+1))`.
pub fn psi(k1: u32, k2: u32) -> f64 {
    8.0 * parity(k1) * parity(k2) / (PI * PI * odd(k1) * odd(k2))
}

/// `Σ_{k₁,k₂<K} Ψ²`.
pub fn psi_square_sum(k_trunc: usize) -> f64 {
    let single: f64 = compensated((0..k_trunc as u32).map(|k| phi_mean(k).powi(2)));
    single * single
}

/// `V'_{k₁,k₂}(1)` for `V_{k₁,k₂}(x) = 2φ_{k₁}(x) ∫₀ˣ φ_{k₂}`.
pub fn v_prime_at_wall(k1: u32, k2: u32) -> f64 {
    2.0 * phi_prime_at_wall(k1) * phi_mean(k2) + 2.0 * phi(k1, 1.0) * phi(k2, 1.0)
}

fn compensated(iter: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Truncated single-mode sums at time `t`.
struct ModeSums {
    /// `s_K = Σ c_k² e^{−λ_k t}`.
    survival: f64,
    /// `Σ λ_k c_k² e^{−λ_k t} = −ds_K/dt`.
    flux: f64,
    /// `Σ φ'_k(1) c_k e^{−λ_k t}`.
    wall_slope: f64,
}

fn mode_sums(k_trunc: usize, t: f64) -> ModeSums {
    let mut survival = CompensatedSum::new();
    let mut flux = CompensatedSum::new();
    let mut wall_slope = CompensatedSum::new();
    for k in 0..k_trunc as u32 {
        let e = (-eigenvalue(k) * t).exp();
        let c = phi_mean(k);
        survival.add(c * c * e);
        flux.add(eigenvalue(k) * c * c * e);
        wall_slope.add(phi_prime_at_wall(k) * c * e);
    }
    ModeSums {
        survival: survival.value(),
        flux: flux.value(),
        wall_slope: wall_slope.value(),
    }
}

/// `S²(t) = Σ Ψ² e^{−Λt}`: both particles alive.
pub fn survival_both_sf(sp: &SpectralParams, t: f64) -> Result<f64> {
    sp.check_time("survival_both_sf", t)?;
    let s = mode_sums(sp.k_trunc, t).survival;
    Ok(s * s)
}

/// `F²(t) = Σ Λ Ψ² e^{−Λt}`: density of the first kill.
pub fn fpt_both_sf(sp: &SpectralParams, t: f64) -> Result<f64> {
    sp.check_time("fpt_both_sf", t)?;
    let m = mode_sums(sp.k_trunc, t);
    Ok(2.0 * m.survival * m.flux)
}

/// Outward flux normalizer `C(τ) = −Σ V'_{k₁,k₂}(1) Ψ e^{−Λτ}`, positive.
fn flux_normalizer_unchecked(k_trunc: usize, tau: f64) -> f64 {
    let m = mode_sums(k_trunc, tau);
    // V'Ψ separates as 2 φ'_{k₁}(1)c_{k₁} · c_{k₂}²
    -2.0 * m.wall_slope * m.survival
}

/// `C(τ)`, the normalizer of the density at the first kill.
pub fn flux_normalizer(sp: &SpectralParams, tau: f64) -> Result<f64> {
    sp.check_time("flux_normalizer", tau)?;
    checked_normalizer("flux_normalizer", sp.k_trunc, tau)
}

fn checked_normalizer(op: &'static str, k_trunc: usize, tau: f64) -> Result<f64> {
    let c = flux_normalizer_unchecked(k_trunc, tau);
    if !(c > f64::MIN_POSITIVE) {
        return Err(FptError::DegenerateDenominator { op, value: c });
    }
    Ok(c)
}

/// Density of the surviving particle's position at the moment the other is
/// killed at `t`.
pub fn conditioned_density(sp: &SpectralParams, x1: f64, t: f64) -> Result<f64> {
    sp.check_time("conditioned_density", t)?;
    if !(0.0..=1.0).contains(&x1) {
        return Err(FptError::domain(
            "conditioned_density",
            format!("x1 = {x1} outside [0, 1]"),
        ));
    }
    let c = checked_normalizer("conditioned_density", sp.k_trunc, t)?;
    let k = sp.k_trunc as u32;
    // 2 Σ φ_{k₁}(x₁) (−φ'_{k₂}(1)) Ψ e^{−Λt}, separated over k₁ and k₂
    let first = compensated((0..k).map(|k1| phi(k1, x1) * phi_mean(k1) * (-eigenvalue(k1) * t).exp()));
    let second = compensated((0..k).map(|k2| -phi_prime_at_wall(k2) * phi_mean(k2) * (-eigenvalue(k2) * t).exp()));
    Ok(2.0 * first * second / c)
}

/// `H(t,i,k₂,l₁,l₂) = ∫₀ᵗ e^{−λᵢ(t−τ)} e^{−(Λ_{i,k₂}+Λ_{l₁,l₂})τ} / C(τ) dτ`.
pub fn h_integral(sp: &SpectralParams, t: f64, i: u32, k2: u32, l1: u32, l2: u32) -> Result<f64> {
    sp.check_time("h_integral", t)?;
    let lam_i = eigenvalue(i);
    let rate = eigenvalue(i) + eigenvalue(k2) + eigenvalue(l1) + eigenvalue(l2);
    let k = sp.k_trunc;
    let mut failure = None;
    let r = adaptive_quad(
        |tau| match checked_normalizer("h_integral", k, tau) {
            Ok(c) => (-lam_i * (t - tau) - rate * tau).exp() / c,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        &sp.quad_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// `H' = λᵢ H − e^{−(Λ_{i,k₂}+Λ_{l₁,l₂})t}/C(t)`, so that `−dH/dt = H'`.
pub fn h_integral_prime(sp: &SpectralParams, t: f64, i: u32, k2: u32, l1: u32, l2: u32) -> Result<f64> {
    let h = h_integral(sp, t, i, k2, l1, l2)?;
    let rate = eigenvalue(i) + eigenvalue(k2) + eigenvalue(l1) + eigenvalue(l2);
    let c = checked_normalizer("h_integral_prime", sp.k_trunc, t)?;
    Ok(eigenvalue(i) * h - (-rate * t).exp() / c)
}

/// `Σ_{l₁,l₂} Λ Ψ² e^{−Λτ} / C(τ)`: the pair-mode sum of the post-kill
/// integrand divided by the normalizer.
fn flux_ratio(k_trunc: usize, tau: f64) -> Result<f64> {
    let m = mode_sums(k_trunc, tau);
    let c = checked_normalizer("flux_ratio", k_trunc, tau)?;
    Ok(2.0 * m.survival * m.flux / c)
}

/// `Σ_{k≥K} c_k² (1 − e^{−λ_k t})` and its time derivative.
fn mode_remainder(k_trunc: usize, t: f64) -> (f64, f64) {
    let head = compensated((0..k_trunc as u32).map(|k| phi_mean(k).powi(2)));
    let mut decayed = CompensatedSum::new();
    let mut derivative = CompensatedSum::new();
    let mut k = k_trunc as u32;
    loop {
        let e = (-eigenvalue(k) * t).exp();
        let c2 = phi_mean(k).powi(2);
        decayed.add(c2 * e);
        derivative.add(eigenvalue(k) * c2 * e);
        if e < 1e-20 || k > k_trunc as u32 + 1_000_000 {
            break;
        }
        k += 1;
    }
    ((1.0 - head) - decayed.value(), derivative.value())
}

/// Post-kill contribution to `S¹` (and to `F¹` when `with_density`):
/// series part over `i, k₂ < K` and closed-form remainder over `k₂ ≥ K`.
struct LastExit {
    series: f64,
    remainder: f64,
    series_density: f64,
    remainder_density: f64,
    /// `h_{k₂}(t)` for `k₂ < K`.
    #[cfg_attr(not(test), allow(dead_code))]
    h: Vec<f64>,
    /// `Σ_l ΛΨ²e^{−Λ_l t}/C(t)`.
    #[cfg_attr(not(test), allow(dead_code))]
    ratio_at_t: f64,
}

fn last_exit_terms(sp: &SpectralParams, t: f64) -> Result<LastExit> {
    let k = sp.k_trunc;
    // h_{k₂}(t) = ∫₀ᵗ e^{−λ_{k₂}τ} Σ_l ΛΨ²e^{−Λ_l τ}/C(τ) dτ, one vector quadrature for all k₂
    let mut failure = None;
    let h = adaptive_quad_vec(
        |tau, out: &mut [f64]| {
            let w = match flux_ratio(k, tau) {
                Ok(w) => w,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            };
            for (k2, o) in out.iter_mut().enumerate() {
                *o = (-eigenvalue(k2 as u32) * tau).exp() * w;
            }
        },
        k,
        0.0,
        t,
        &sp.quad_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let h = h?.value;
    let w_t = flux_ratio(k, t)?;

    let mut series = CompensatedSum::new();
    let mut series_density = CompensatedSum::new();
    for i in 0..k as u32 {
        let lam_i = eigenvalue(i);
        let decay_i = (-lam_i * t).exp();
        for (k2, &h_k2) in h.iter().enumerate() {
            let k2 = k2 as u32;
            // (∫₀¹ φᵢ) · 2(−φ'_{k₂}(1)) Ψ_{i,k₂}
            let a = 2.0 * phi_mean(i) * (-phi_prime_at_wall(k2)) * psi(i, k2);
            series.add(a * decay_i * h_k2);
            series_density.add(a * (lam_i * decay_i * h_k2 - decay_i * (-eigenvalue(k2) * t).exp() * w_t));
        }
    }

    let m = mode_sums(k, t);
    let (rem, rem_dt) = mode_remainder(k, t);
    Ok(LastExit {
        series: series.value(),
        remainder: 2.0 * m.survival * rem,
        series_density: series_density.value(),
        remainder_density: 2.0 * m.flux * rem - 2.0 * m.survival * rem_dt,
        h,
        ratio_at_t: w_t,
    })
}

/// `S¹(t)`: at least one particle alive (survival of the leftmost).
pub fn survival_last_sf(sp: &SpectralParams, t: f64) -> Result<f64> {
    sp.check_time("survival_last_sf", t)?;
    let s2 = survival_both_sf(sp, t)?;
    let terms = last_exit_terms(sp, t)?;
    Ok(s2 + terms.series + terms.remainder)
}

/// `F¹(t) = −dS¹/dt`.
pub fn fpt_last_sf(sp: &SpectralParams, t: f64) -> Result<f64> {
    sp.check_time("fpt_last_sf", t)?;
    let f2 = fpt_both_sf(sp, t)?;
    let terms = last_exit_terms(sp, t)?;
    Ok(f2 + terms.series_density + terms.remainder_density)
}

/// Single-particle survival from a uniform start,
/// `s(t) = (8/π²) Σ_k e^{−λ_k t}/(2k+1)²`, summed until the terms vanish.
pub fn single_particle_survival(t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FptError::domain(
            "single_particle_survival",
            format!("t = {t} must be >= 0"),
        ));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let mut acc = CompensatedSum::new();
    let mut k = 0u32;
    loop {
        let e = (-eigenvalue(k) * t).exp();
        acc.add(e / (odd(k) * odd(k)));
        if e < 1e-18 {
            break;
        }
        k += 1;
        if k > 50_000_000 {
            return Err(FptError::NonConvergence {
                op: "single_particle_survival",
                iterations: k as usize,
            });
        }
    }
    Ok(8.0 / (PI * PI) * acc.value())
}

/// Reflection-principle survival of the last particle, `2s(1 − s) + s²`.
///
/// The general form `2f(s)(1 − s) + s²` is taken with `f(s) = s`, the choice
/// that matches the spectral result.
pub fn locatelli_reference(t: f64) -> Result<f64> {
    let s = single_particle_survival(t)?;
    Ok(2.0 * s * (1.0 - s) + s * s)
}
