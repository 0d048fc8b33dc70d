//! nth-to-default credit default swap on the trivariate model.
//!
//! The fee leg pays `u` at each payment date while at least `N − n + 1`
//! names survive; the protection leg pays one unit at the `n`th default.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::numeric::CompensatedSum;
use crate::trivpoisson::{TriPoissonParams, TrivariateModel, COORDINATES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdsContract {
    basket_size: usize,
    order: usize,
    payment_times: Vec<f64>,
    short_rate: f64,
}

impl CdsContract {
    pub fn new(basket_size: usize, order: usize, payment_times: Vec<f64>, short_rate: f64) -> Result<Self> {
        if basket_size != COORDINATES {
            return Err(FptError::Config(format!(
                "basket size N = {basket_size} is not supported; only N = {COORDINATES}"
            )));
        }
        if order == 0 || order > basket_size {
            return Err(FptError::Config(format!(
                "default order n = {order} must be in 1..={basket_size}"
            )));
        }
        if payment_times.is_empty() {
            return Err(FptError::Config("at least one payment date is required".into()));
        }
        let mut previous = 0.0;
        for &p in &payment_times {
            if !(p > previous) || !p.is_finite() {
                return Err(FptError::Config(format!(
                    "payment dates must be finite, positive and strictly increasing (got {p} after {previous})"
                )));
            }
            previous = p;
        }
        if !(short_rate >= 0.0) || !short_rate.is_finite() {
            return Err(FptError::Config(format!(
                "short rate r = {short_rate} must be finite and >= 0"
            )));
        }
        Ok(Self {
            basket_size,
            order,
            payment_times,
            short_rate,
        })
    }

    /// Payments every `interval` up to and including `maturity`.
    pub fn regular(order: usize, maturity: f64, interval: f64, short_rate: f64) -> Result<Self> {
        if !(interval > 0.0) || !(maturity > 0.0) || !maturity.is_finite() {
            return Err(FptError::Config(format!(
                "maturity {maturity} and payment interval {interval} must be positive"
            )));
        }
        let count = (maturity / interval).round();
        if (count * interval - maturity).abs() > 1e-9 * maturity || count < 1.0 {
            return Err(FptError::Config(format!(
                "maturity {maturity} is not a whole number of payment intervals {interval}"
            )));
        }
        let count = count as usize;
        let mut times: Vec<f64> = (1..=count).map(|i| interval * i as f64).collect();
        times[count - 1] = maturity;
        Self::new(COORDINATES, order, times, short_rate)
    }

    pub fn basket_size(&self) -> usize {
        self.basket_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn maturity(&self) -> f64 {
        *self.payment_times.last().expect("payment dates are non-empty")
    }

    pub fn payment_times(&self) -> &[f64] {
        &self.payment_times
    }

    pub fn short_rate(&self) -> f64 {
        self.short_rate
    }

    /// Survival order `N − n + 1` whose exit triggers the protection payment.
    pub fn survival_order(&self) -> usize {
        self.basket_size - self.order + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadQuote {
    /// Spread per payment per unit notional.
    pub u: f64,
    pub fee_pv: f64,
    pub protection_pv: f64,
}

/// `Σᵢ e^{−rTᵢ} S(Tᵢ)`, the fee-leg value of a unit spread.
pub fn annuity(contract: &CdsContract, model: &TrivariateModel) -> Result<f64> {
    let survival = model.survival_terms(contract.survival_order())?;
    let mut acc = CompensatedSum::new();
    for &ti in contract.payment_times() {
        acc.add((-contract.short_rate() * ti).exp() * survival.eval(ti));
    }
    Ok(acc.value())
}

/// `f = u Σᵢ e^{−rTᵢ} S^{N−n+1}(Tᵢ)`.
pub fn fee_leg(u: f64, contract: &CdsContract, model: &TrivariateModel) -> Result<f64> {
    Ok(u * annuity(contract, model)?)
}

/// `p = −∫₀ᵀ e^{−rt} F^{N−n+1}(t) dt`.
pub fn protection_leg(contract: &CdsContract, model: &TrivariateModel) -> Result<f64> {
    let density = model.fpt_terms(contract.survival_order())?;
    Ok(-density.discounted_integral(contract.short_rate(), contract.maturity()))
}

/// The spread `u` with `f(u) + p = 0`.
pub fn par_spread(contract: &CdsContract, model: &TrivariateModel) -> Result<SpreadQuote> {
    let a = annuity(contract, model)?;
    if !(a > f64::MIN_POSITIVE) {
        return Err(FptError::DegenerateDenominator {
            op: "par_spread",
            value: a,
        });
    }
    let protection_pv = protection_leg(contract, model)?;
    let u = -protection_pv / a;
    Ok(SpreadQuote {
        u,
        fee_pv: u * a,
        protection_pv,
    })
}

/// A contract together with the model intensities, as read from a
/// `key = value` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdsConfig {
    pub contract: CdsContract,
    pub params: TriPoissonParams,
}

const CONFIG_KEYS: [&str; 11] = [
    "N",
    "n",
    "T",
    "payment_interval",
    "r",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda12",
    "lambda13",
    "lambda23",
];

impl FromStr for CdsConfig {
    type Err = FptError;

    /// One `key = value` per line; `#` starts a comment. Every key in
    /// [`CONFIG_KEYS`] must appear exactly once.
    fn from_str(text: &str) -> Result<Self> {
        let mut values: BTreeMap<&str, f64> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| FptError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let canonical = CONFIG_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| FptError::Config(format!("line {}: unknown key '{key}'", lineno + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| FptError::Config(format!("line {}: '{}' is not a number", lineno + 1, value.trim())))?;
            if values.insert(canonical, value).is_some() {
                return Err(FptError::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let get = |k: &str| {
            values
                .get(k)
                .copied()
                .ok_or_else(|| FptError::Config(format!("missing key '{k}'")))
        };
        let as_count = |k: &str| -> Result<usize> {
            let v = get(k)?;
            if v.fract() != 0.0 || v < 0.0 {
                return Err(FptError::Config(format!(
                    "'{k}' must be a non-negative integer, got {v}"
                )));
            }
            Ok(v as usize)
        };
        let basket = as_count("N")?;
        if basket != COORDINATES {
            return Err(FptError::Config(format!(
                "N = {basket} is not supported; only N = {COORDINATES}"
            )));
        }
        let contract = CdsContract::regular(as_count("n")?, get("T")?, get("payment_interval")?, get("r")?)?;
        let params = TriPoissonParams::new(
            [get("lambda1")?, get("lambda2")?, get("lambda3")?],
            [get("lambda12")?, get("lambda13")?, get("lambda23")?],
        )?;
        Ok(Self { contract, params })
    }
}
