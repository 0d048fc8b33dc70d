//! Small numerical helpers shared by the evaluators.

use crate::specfun::ln_gamma_unchecked;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// `ln(x^n / n!)`, with the convention `0^0 = 1` (returns `-inf` for `x = 0, n > 0`).
pub fn ln_pow_over_factorial(x: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    f64::from(n) * x.ln() - ln_factorial(n)
}

/// `ln(x^n)` with `0^0 = 1`.
pub fn ln_pow(x: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::from(n) * x.ln()
    }
}

pub fn ln_factorial(n: u32) -> f64 {
    // exact table for small arguments keeps the common case free of Lanczos error
    const SMALL: usize = 21;
    if (n as usize) < SMALL {
        let mut f = 1.0_f64;
        for m in 2..=n {
            f *= f64::from(m);
        }
        f.ln()
    } else {
        ln_gamma_unchecked(f64::from(n) + 1.0)
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u32, k: u32) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// A term `sign * exp(ln_mag)`; used to accumulate products of large and small
/// factors without intermediate overflow.
#[inline]
pub fn signed_exp(sign: f64, ln_mag: f64) -> f64 {
    if ln_mag == f64::NEG_INFINITY {
        0.0
    } else {
        sign * ln_mag.exp()
    }
}
