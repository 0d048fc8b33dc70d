//! Finite sums of exponential terms with exact derivatives and discounted
//! integrals.

use serde::{Deserialize, Serialize};

use crate::numeric::CompensatedSum;

/// Relative gap below which two rates are treated as equal.
pub const CONFLUENT_GAP: f64 = 1e-12;

/// Below this value of `|Δ|·T` a divided term is integrated by its Taylor series.
const SERIES_SWITCH: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExpTerm {
    /// `coef · t^power · e^{−rate·t}` with `power ∈ {0, 1}`.
    Exp { coef: f64, rate: f64, power: u8 },
    /// `coef · (e^{−g1·t} − e^{−g2·t}) / (g2 − g1)` with `g1 ≠ g2`.
    Divided { coef: f64, g1: f64, g2: f64 },
}

/// `−expm1(−x)/x`, equal to 1 at `x = 0`.
fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `∫₀ᵀ t e^{−s t} dt`.
fn first_moment_integral(s: f64, horizon: f64) -> f64 {
    let x = s * horizon;
    if x.abs() < 1e-3 {
        let t2 = horizon * horizon;
        t2 * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (s * s)
    }
}

/// `∫₀ᵀ e^{−s t} dt`.
fn zeroth_moment_integral(s: f64, horizon: f64) -> f64 {
    horizon * one_minus_exp_over(s * horizon)
}

impl ExpTerm {
    /// `(e^{−g1 t} − e^{−g2 t})/(g2 − g1)`, or `t e^{−g1 t}` when the rates coincide.
    pub fn divided(coef: f64, g1: f64, g2: f64) -> Self {
        let scale = g1.abs().max(g2.abs());
        if (g2 - g1).abs() <= CONFLUENT_GAP * scale {
            ExpTerm::Exp {
                coef,
                rate: 0.5 * (g1 + g2),
                power: 1,
            }
        } else {
            ExpTerm::Divided { coef, g1, g2 }
        }
    }

    pub fn exp(coef: f64, rate: f64) -> Self {
        ExpTerm::Exp { coef, rate, power: 0 }
    }

    pub fn coef(&self) -> f64 {
        match *self {
            ExpTerm::Exp { coef, .. } | ExpTerm::Divided { coef, .. } => coef,
        }
    }

    fn scaled(self, factor: f64) -> Self {
        match self {
            ExpTerm::Exp { coef, rate, power } => ExpTerm::Exp {
                coef: coef * factor,
                rate,
                power,
            },
            ExpTerm::Divided { coef, g1, g2 } => ExpTerm::Divided {
                coef: coef * factor,
                g1,
                g2,
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ExpTerm::Exp { coef, rate, power } => {
                let e = (-rate * t).exp();
                if power == 0 {
                    coef * e
                } else {
                    coef * t * e
                }
            }
            ExpTerm::Divided { coef, g1, g2 } => coef * t * (-g1 * t).exp() * one_minus_exp_over((g2 - g1) * t),
        }
    }

    /// Value at `t = 0`.
    pub fn at_zero(&self) -> f64 {
        match *self {
            ExpTerm::Exp { coef, power: 0, .. } => coef,
            _ => 0.0,
        }
    }

    fn push_derivative(&self, out: &mut Vec<ExpTerm>) {
        match *self {
            ExpTerm::Exp { coef, rate, power } => {
                if power == 1 {
                    out.push(ExpTerm::exp(coef, rate));
                }
                if rate != 0.0 {
                    out.push(ExpTerm::Exp {
                        coef: -coef * rate,
                        rate,
                        power,
                    });
                }
            }
            ExpTerm::Divided { coef, g1, g2 } => {
                // d/dt D(g1, g2) = e^{−g2 t} − g1 D(g1, g2)
                out.push(ExpTerm::exp(coef, g2));
                if g1 != 0.0 {
                    out.push(ExpTerm::Divided {
                        coef: -coef * g1,
                        g1,
                        g2,
                    });
                }
            }
        }
    }

    /// `∫₀ᵀ e^{−ρt} term(t) dt`.
    pub fn discounted_integral(&self, rho: f64, horizon: f64) -> f64 {
        match *self {
            ExpTerm::Exp { coef, rate, power } => {
                let s = rate + rho;
                if power == 0 {
                    coef * zeroth_moment_integral(s, horizon)
                } else {
                    coef * first_moment_integral(s, horizon)
                }
            }
            ExpTerm::Divided { coef, g1, g2 } => {
                let (a, b) = (g1 + rho, g2 + rho);
                let delta = b - a;
                if (delta * horizon).abs() >= SERIES_SWITCH {
                    coef * (zeroth_moment_integral(a, horizon) - zeroth_moment_integral(b, horizon)) / delta
                } else {
                    coef * divided_series_integral(a, delta, horizon)
                }
            }
        }
    }
}

/// `∫₀ᵀ e^{−a t} (1 − e^{−Δt})/Δ dt` for small `|Δ|T`, expanding
/// `(1 − e^{−Δt})/Δ = Σ_k (−Δ)^k t^{k+1}/(k+1)!`.
fn divided_series_integral(a: f64, delta: f64, horizon: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut coef = 1.0;
    for k in 0..12u32 {
        if k > 0 {
            coef *= -delta / f64::from(k + 1);
        }
        acc.add(coef * power_moment(k + 1, a, horizon));
    }
    acc.value()
}

/// `∫₀ᵀ t^j e^{−a t} dt`.
fn power_moment(j: u32, a: f64, horizon: f64) -> f64 {
    let x = a * horizon;
    let mut acc = CompensatedSum::new();
    let mut term = 1.0 / f64::from(j + 1);
    if x >= 0.0 {
        // T^{j+1} e^{−x} Σ_m x^m / ((j+1)(j+2)…(j+1+m)), all terms positive
        for m in 1..2000u32 {
            acc.add(term);
            term *= x / f64::from(j + 1 + m);
            if term < 1e-18 * acc.value() {
                break;
            }
        }
        horizon.powi(j as i32 + 1) * (-x).exp() * acc.value()
    } else {
        // T^{j+1} Σ_m |x|^m / (m! (j+1+m)), all terms positive
        let mut power = 1.0;
        for m in 0..2000u32 {
            if m > 0 {
                power *= -x / f64::from(m);
                term = power / f64::from(j + 1 + m);
            }
            acc.add(term);
            if m > 0 && term < 1e-18 * acc.value() {
                break;
            }
        }
        horizon.powi(j as i32 + 1) * acc.value()
    }
}

/// A finite sum of [`ExpTerm`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

impl ExpSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<ExpTerm>) -> Self {
        Self { terms }
    }

    /// Appends a term; zero coefficients are dropped.
    pub fn push(&mut self, term: ExpTerm) {
        if term.coef() != 0.0 {
            self.terms.push(term);
        }
    }

    pub fn extend_from(&mut self, other: &ExpSum) {
        self.terms.extend_from_slice(&other.terms);
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.scaled(factor)).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for term in &self.terms {
            acc.add(term.eval(t));
        }
        acc.value()
    }

    /// Value at `t = 0`, exact in the coefficients.
    pub fn at_zero(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for term in &self.terms {
            acc.add(term.at_zero());
        }
        acc.value()
    }

    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for term in &self.terms {
            term.push_derivative(&mut out);
        }
        Self { terms: out }
    }

    /// `−d/dt`, turning a survival function into its first-passage density.
    pub fn negative_derivative(&self) -> Self {
        self.derivative().scaled(-1.0)
    }

    /// `∫₀ᵀ e^{−ρt} f(t) dt`.
    pub fn discounted_integral(&self, rho: f64, horizon: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for term in &self.terms {
            acc.add(term.discounted_integral(rho, horizon));
        }
        acc.value()
    }
}
