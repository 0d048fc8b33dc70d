//! Special functions and quadrature behind the closed-form solutions.
//!
//! The bivariate Poisson last-exit survival reduces to integrals of the form
//! `∫₀ᵗ (t−τ)^α τ^β e^{−λτ} dτ`, evaluated here through the Beta function and
//! Kummer's confluent hypergeometric function. Only non-positive arguments of
//! `₁F₁` occur, so the Kummer transformation turns every evaluation into a
//! series of positive terms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::numeric::{ln_factorial, CompensatedSum};

/// Stopping rule for [`adaptive_quad`] and [`adaptive_quad_vec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadTolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions == 0 {
            return Err(FptError::Config(format!(
                "quadrature tolerance requires abs_tol > 0, rel_tol > 0, max_subdivisions >= 1 \
                 (got {abs_tol}, {rel_tol}, {max_subdivisions})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    /// Same tolerance with both thresholds scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 2000,
        }
    }
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(FptError::domain("ln_gamma", format!("x = {x} must be finite and > 0")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x.fract() == 0.0 && x <= 21.0 {
        return ln_factorial(x as u32 - 1);
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// `ln B(a, b)`, symmetric in its arguments bit for bit.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(FptError::domain("beta", format!("a = {a}, b = {b} must be > 0")));
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Ok(ln_gamma_unchecked(lo) + ln_gamma_unchecked(hi) - ln_gamma_unchecked(lo + hi))
}

/// Beta function `Γ(a)Γ(b)/Γ(a+b)`, computed in log space.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

const KUMMER_MAX_TERMS: usize = 200_000;

/// Natural log of `₁F₁(a; b; x)` for `a ≥ 0`, `b > 0`, `x ≥ 0`, where every
/// term of the defining series is non-negative.
fn ln_kummer_positive(a: f64, b: f64, x: f64) -> Result<f64> {
    debug_assert!(a >= 0.0 && b > 0.0 && x >= 0.0);
    if x == 0.0 || a == 0.0 {
        return Ok(0.0);
    }
    const RESCALE: f64 = 1e250;
    let ln_rescale = RESCALE.ln();
    let mut ln_scale = 0.0;
    let mut term = 1.0_f64;
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    let budget = KUMMER_MAX_TERMS + (10.0 * x) as usize;
    for n in 0..budget {
        let nf = n as f64;
        let ratio = (a + nf) / (b + nf) * x / (nf + 1.0);
        term *= ratio;
        sum.add(term);
        let s = sum.value();
        if s > RESCALE {
            term /= RESCALE;
            let carried = s / RESCALE;
            sum = CompensatedSum::new();
            sum.add(carried);
            ln_scale += ln_rescale;
        }
        // past the peak the ratios decrease, so the tail is bounded by a geometric series
        let next_ratio = (a + nf + 1.0) / (b + nf + 1.0) * x / (nf + 2.0);
        if next_ratio < 1.0 {
            let tail = term * next_ratio / (1.0 - next_ratio);
            if tail <= f64::EPSILON * 0.25 * sum.value() {
                return Ok(sum.value().ln() + ln_scale);
            }
        }
    }
    Err(FptError::NonConvergence {
        op: "kummer_1f1",
        iterations: budget,
    })
}

/// Confluent hypergeometric function of the first kind, `₁F₁(p; q; z)`.
///
/// For `z ≤ 0` and `q ≥ p` the Kummer transformation
/// `₁F₁(p; q; z) = e^z ₁F₁(q−p; q; −z)` is applied, so the working series has
/// positive terms only. Other arguments fall back to the direct series.
pub fn kummer_1f1(p: f64, q: f64, z: f64) -> Result<f64> {
    if !p.is_finite() || !q.is_finite() || !z.is_finite() {
        return Err(FptError::domain("kummer_1f1", "non-finite argument"));
    }
    if q <= 0.0 && q.fract() == 0.0 {
        return Err(FptError::domain(
            "kummer_1f1",
            format!("q = {q} is a non-positive integer"),
        ));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 && q > 0.0 && q - p >= 0.0 {
        let ln_m = ln_kummer_positive(q - p, q, -z)?;
        return Ok((z + ln_m).exp());
    }
    if z > 0.0 && q > 0.0 && p >= 0.0 {
        return ln_kummer_positive(p, q, z).map(f64::exp);
    }
    direct_kummer_series(p, q, z)
}

fn direct_kummer_series(p: f64, q: f64, z: f64) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = CompensatedSum::new();
    sum.add(1.0);
    for n in 0..KUMMER_MAX_TERMS {
        let nf = n as f64;
        term *= (p + nf) / (q + nf) * z / (nf + 1.0);
        sum.add(term);
        if term == 0.0 || (nf > z.abs() && term.abs() <= f64::EPSILON * sum.value().abs()) {
            return Ok(sum.value());
        }
    }
    Err(FptError::NonConvergence {
        op: "kummer_1f1",
        iterations: KUMMER_MAX_TERMS,
    })
}

fn check_conv_args(lambda: f64, t: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() || !(t >= 0.0) || !t.is_finite() {
        return Err(FptError::domain(
            "conv_integral",
            format!("lambda = {lambda}, t = {t} must be finite and >= 0"),
        ));
    }
    Ok(())
}

/// `ln ∫₀ᵗ (t−τ)^α τ^β e^{−λτ} dτ`; `-inf` at `t = 0`.
pub fn ln_conv_integral(alpha: u32, beta: u32, lambda: f64, t: f64) -> Result<f64> {
    check_conv_args(lambda, t)?;
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let a = f64::from(alpha);
    let b = f64::from(beta);
    let ln_b = ln_beta(a + 1.0, b + 1.0)?;
    let ln_power = (a + b + 1.0) * t.ln();
    let x = lambda * t;
    // ₁F₁(β+1; α+β+2; −x) = e^{−x} ₁F₁(α+1; α+β+2; x)
    let ln_hyper = -x + ln_kummer_positive(a + 1.0, a + b + 2.0, x)?;
    Ok(ln_b + ln_power + ln_hyper)
}

/// `∫₀ᵗ (t−τ)^α τ^β e^{−λτ} dτ = B(α+1, β+1) t^{α+β+1} ₁F₁(β+1; α+β+2; −λt)`.
pub fn conv_integral(alpha: u32, beta: u32, lambda: f64, t: f64) -> Result<f64> {
    ln_conv_integral(alpha, beta, lambda, t).map(f64::exp)
}

/// Natural log of `d/dt conv_integral(α, β, λ, t)`.
///
/// For `α ≥ 1` the derivative is `α·conv_integral(α−1, β, λ, t)`; for `α = 0`
/// it is the integrand at the upper limit, `t^β e^{−λt}`.
pub fn ln_conv_integral_dt(alpha: u32, beta: u32, lambda: f64, t: f64) -> Result<f64> {
    check_conv_args(lambda, t)?;
    if alpha == 0 {
        if t == 0.0 {
            return Ok(if beta == 0 { 0.0 } else { f64::NEG_INFINITY });
        }
        return Ok(f64::from(beta) * t.ln() - lambda * t);
    }
    Ok(f64::from(alpha).ln() + ln_conv_integral(alpha - 1, beta, lambda, t)?)
}

pub fn conv_integral_dt(alpha: u32, beta: u32, lambda: f64, t: f64) -> Result<f64> {
    ln_conv_integral_dt(alpha, beta, lambda, t).map(f64::exp)
}

// Gauss–Kronrod 7/15 rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of a scalar quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

fn gk15_nodes(a: f64, b: f64) -> ([f64; 15], f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut xs = [0.0; 15];
    for i in 0..7 {
        xs[2 * i] = center - half * XGK[i];
        xs[2 * i + 1] = center + half * XGK[i];
    }
    xs[14] = center;
    (xs, half)
}

fn gk15_combine(fs: &[f64; 15], half: f64) -> (f64, f64) {
    let mut kronrod = WGK[7] * fs[14];
    let mut gauss = WG[3] * fs[14];
    for i in 0..7 {
        let pair = fs[2 * i] + fs[2 * i + 1];
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug)]
struct Segment {
    lower: f64,
    upper: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    norm_error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.norm_error == other.norm_error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm_error.total_cmp(&other.norm_error)
    }
}

/// Result of a vector-valued quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct VecQuadResult {
    pub value: Vec<f64>,
    pub error: Vec<f64>,
    pub subdivisions: usize,
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[lower, upper]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// error satisfies `error ≤ max(abs_tol, rel_tol·|value|)`. On failure the
/// best estimate travels inside [`FptError::ToleranceNotMet`].
pub fn adaptive_quad<F>(mut f: F, lower: f64, upper: f64, tol: &QuadTolerance) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    let r = adaptive_quad_vec(|x, out: &mut [f64]| out[0] = f(x), 1, lower, upper, tol)?;
    Ok(QuadResult {
        value: r.value[0],
        error: r.error[0],
        subdivisions: r.subdivisions,
    })
}

/// Vector-valued variant of [`adaptive_quad`]: all components share the same
/// subdivision, and the stopping rule is applied to the max-norm.
pub fn adaptive_quad_vec<F>(mut f: F, dim: usize, lower: f64, upper: f64, tol: &QuadTolerance) -> Result<VecQuadResult>
where
    F: FnMut(f64, &mut [f64]),
{
    if !(lower.is_finite() && upper.is_finite()) || upper < lower || dim == 0 {
        return Err(FptError::domain(
            "adaptive_quad",
            format!("invalid interval [{lower}, {upper}] or dimension {dim}"),
        ));
    }
    if upper == lower {
        return Ok(VecQuadResult {
            value: vec![0.0; dim],
            error: vec![0.0; dim],
            subdivisions: 0,
        });
    }

    let mut fx = vec![[0.0_f64; 15]; dim];
    let mut buf = vec![0.0_f64; dim];
    let mut eval_segment = |a: f64, b: f64| -> Result<Segment> {
        let (xs, half) = gk15_nodes(a, b);
        for (node, &x) in xs.iter().enumerate() {
            f(x, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FptError::domain(
                        "adaptive_quad",
                        format!("integrand not finite at x = {x}"),
                    ));
                }
                fx[c][node] = *v;
            }
        }
        let mut value = Vec::with_capacity(dim);
        let mut error = Vec::with_capacity(dim);
        for row in fx.iter() {
            let (v, e) = gk15_combine(row, half);
            value.push(v);
            error.push(e);
        }
        let norm_error = error.iter().fold(0.0_f64, |m, e| m.max(*e));
        Ok(Segment {
            lower: a,
            upper: b,
            value,
            error,
            norm_error,
        })
    };

    let mut heap = BinaryHeap::new();
    heap.push(eval_segment(lower, upper)?);
    let mut subdivisions = 1;

    loop {
        let mut value = vec![CompensatedSum::new(); dim];
        let mut error = vec![0.0_f64; dim];
        for seg in heap.iter() {
            for c in 0..dim {
                value[c].add(seg.value[c]);
                error[c] += seg.error[c];
            }
        }
        let value: Vec<f64> = value.iter().map(CompensatedSum::value).collect();
        let scale = value.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let norm_error = error.iter().fold(0.0_f64, |m, e| m.max(*e));
        let target = tol.abs_tol.max(tol.rel_tol * scale);
        if norm_error <= target {
            return Ok(VecQuadResult {
                value,
                error,
                subdivisions,
            });
        }

        let worst = heap.peek().expect("heap is never empty");
        let mid = 0.5 * (worst.lower + worst.upper);
        let exhausted = subdivisions >= tol.max_subdivisions || mid <= worst.lower || mid >= worst.upper;
        if exhausted {
            let worst_c = (0..dim).max_by(|&a, &b| error[a].total_cmp(&error[b])).unwrap_or(0);
            return Err(FptError::ToleranceNotMet {
                op: "adaptive_quad",
                estimate: value[worst_c],
                error: error[worst_c],
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        heap.push(eval_segment(worst.lower, mid)?);
        heap.push(eval_segment(mid, worst.upper)?);
        subdivisions += 1;
    }
}
