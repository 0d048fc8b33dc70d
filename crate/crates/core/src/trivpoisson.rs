//! Trivariate Poisson (Marshall–Olkin type) model with killing barrier 1.
//!
//! `Xᵢ = Yᵢ + Σ_{j≠i} Yᵢⱼ` with six independent Poisson streams. A coordinate
//! dies on its first jump. When it dies, every shared stream carrying its
//! index stops acting on the survivors.
//!
//! Each survival `Sⁿ` (at least `n` coordinates alive) is an [`ExpSum`]
//! assembled once from the kill paths of [`crate::paths`], so densities and
//! discounted integrals are exact.

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::expsum::{ExpSum, ExpTerm};
use crate::numeric::{ln_pow_over_factorial, signed_exp, CompensatedSum};
use crate::paths::{build_gamma, enumerate_paths, KillPath};

pub const COORDINATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriPoissonParams {
    /// Single intensities `(λ₁, λ₂, λ₃)`.
    pub lambda: [f64; 3],
    /// Shared intensities `(λ₁₂, λ₁₃, λ₂₃)`.
    pub cross: [f64; 3],
}

impl TriPoissonParams {
    pub fn new(lambda: [f64; 3], cross: [f64; 3]) -> Result<Self> {
        for (k, v) in lambda.iter().chain(cross.iter()).enumerate() {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(FptError::Config(format!(
                    "intensity #{k} = {v} must be finite and >= 0"
                )));
            }
        }
        let p = Self { lambda, cross };
        if p.total_rate() <= 0.0 {
            return Err(FptError::Config("total intensity must be > 0".into()));
        }
        Ok(p)
    }

    /// Every single and shared intensity equal to `rate`.
    pub fn uniform(rate: f64) -> Result<Self> {
        Self::new([rate; 3], [rate; 3])
    }

    /// `λᵢⱼ` for `i ≠ j` (0-based, order irrelevant).
    pub fn cross_rate(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.cross[0],
            (0, 2) => self.cross[1],
            (1, 2) => self.cross[2],
            _ => panic!("cross_rate needs two distinct coordinates in 0..3, got ({i}, {j})"),
        }
    }

    /// `a = Σλᵢ + Σλᵢⱼ`.
    pub fn total_rate(&self) -> f64 {
        self.lambda.iter().sum::<f64>() + self.cross.iter().sum::<f64>()
    }

    /// Intensity of `Xᵢ` while all coordinates are alive.
    pub fn marginal_rate(&self, i: usize) -> f64 {
        let (j, r) = others(i);
        self.lambda[i] + self.cross_rate(i, j) + self.cross_rate(i, r)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("coordinate {i} out of range 0..3"),
    }
}

fn check_permutation(op: &'static str, i: usize, j: usize, r: usize) -> Result<()> {
    let ok = i < 3 && j < 3 && r < 3 && i != j && j != r && i != r;
    if ok {
        Ok(())
    } else {
        Err(FptError::domain(
            op,
            format!("({i}, {j}, {r}) is not a permutation of 0, 1, 2"),
        ))
    }
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(FptError::domain(op, format!("t = {t} must be finite and >= 0")));
    }
    Ok(())
}

/// `P(X = x)` at time `t` for the unkilled process, summing over the shared
/// counts that keep every single count non-negative.
pub fn trivariate_pmf(x: [u32; 3], params: &TriPoissonParams, t: f64) -> f64 {
    // ln((λt)^k / k!) for k = 0..=limit, one table per stream
    let table =
        |rate: f64, limit: u32| -> Vec<f64> { (0..=limit).map(|k| ln_pow_over_factorial(rate * t, k)).collect() };
    let single: Vec<Vec<f64>> = (0..3).map(|i| table(params.lambda[i], x[i])).collect();
    let c12 = table(params.cross[0], x[0].min(x[1]));
    let c13 = table(params.cross[1], x[0].min(x[2]));
    let c23 = table(params.cross[2], x[1].min(x[2]));
    let decay = params.total_rate() * t;
    let mut acc = CompensatedSum::new();
    for y12 in 0..=x[0].min(x[1]) {
        for y13 in 0..=(x[0] - y12).min(x[2]) {
            let outer = c12[y12 as usize] + c13[y13 as usize] + single[0][(x[0] - y12 - y13) as usize];
            for y23 in 0..=(x[1] - y12).min(x[2] - y13) {
                let ln_term = outer
                    + c23[y23 as usize]
                    + single[1][(x[1] - y12 - y23) as usize]
                    + single[2][(x[2] - y13 - y23) as usize]
                    - decay;
                acc.add(signed_exp(1.0, ln_term));
            }
        }
    }
    acc.value()
}

/// `S³(t) = e^{−at}`.
pub fn survival3(params: &TriPoissonParams, t: f64) -> Result<f64> {
    check_time("survival3", t)?;
    Ok((-params.total_rate() * t).exp())
}

/// `i` dies alone first; `j` and `r` survive to `t`.
fn one_kill_terms(p: &TriPoissonParams, i: usize, j: usize, r: usize) -> ExpSum {
    let a = p.total_rate();
    let rest = p.lambda[j] + p.lambda[r] + p.cross_rate(j, r);
    ExpSum::from_terms(vec![ExpTerm::divided(p.lambda[i], rest, a)])
}

/// `i` dies alone, later `j` dies alone, `r` survives to `t`.
fn two_sequential_terms(p: &TriPoissonParams, i: usize, j: usize, r: usize) -> ExpSum {
    let a = p.total_rate();
    let lr = p.lambda[r];
    let after_first = p.lambda[j] + p.cross_rate(j, r);
    let first_out = a - lr - after_first;
    let numerator = p.lambda[i] * p.lambda[j];
    let mut out = ExpSum::new();
    if numerator == 0.0 {
        return out;
    }
    // second divided difference of e^{−gt} at (λᵣ, λᵣ+B, a), split along the larger gap
    if after_first >= first_out {
        let c = numerator / after_first;
        out.push(ExpTerm::divided(c, lr, a));
        out.push(ExpTerm::divided(-c, lr + after_first, a));
    } else {
        let c = numerator / first_out;
        out.push(ExpTerm::divided(c, lr, lr + after_first));
        out.push(ExpTerm::divided(-c, lr, a));
    }
    out
}

/// `i` and `j` die together through `Yᵢⱼ`, `r` survives to `t`.
fn two_simultaneous_terms(p: &TriPoissonParams, i: usize, j: usize, r: usize) -> ExpSum {
    let mut out = ExpSum::new();
    out.push(ExpTerm::divided(p.cross_rate(i, j), p.lambda[r], p.total_rate()));
    out
}

/// Probability that only `i` has died by `t`, through its own stream.
pub fn contrib_one_kill(params: &TriPoissonParams, i: usize, j: usize, r: usize, t: f64) -> Result<f64> {
    check_permutation("contrib_one_kill", i, j, r)?;
    check_time("contrib_one_kill", t)?;
    Ok(one_kill_terms(params, i, j, r).eval(t))
}

/// Probability that `i` then `j` died at distinct times and `r` is alive at `t`.
pub fn contrib_two_sequential(params: &TriPoissonParams, i: usize, j: usize, r: usize, t: f64) -> Result<f64> {
    check_permutation("contrib_two_sequential", i, j, r)?;
    check_time("contrib_two_sequential", t)?;
    Ok(two_sequential_terms(params, i, j, r).eval(t))
}

/// Probability that `i` and `j` died together and `r` is alive at `t`.
pub fn contrib_two_simultaneous(params: &TriPoissonParams, i: usize, j: usize, r: usize, t: f64) -> Result<f64> {
    check_permutation("contrib_two_simultaneous", i, j, r)?;
    check_time("contrib_two_simultaneous", t)?;
    Ok(two_simultaneous_terms(params, i, j, r).eval(t))
}

/// Exponential sum of the probability of being at the end of `path` at `t`.
fn path_terms(p: &TriPoissonParams, path: &KillPath) -> Result<ExpSum> {
    let steps: Vec<u32> = path.kill_steps().collect();
    let single = |mask: u32| (mask.count_ones() == 1).then(|| mask.trailing_zeros() as usize);
    let remaining = |mask: u32| -> usize { (!mask & 0b111).trailing_zeros() as usize };
    match steps.as_slice() {
        [m] if m.count_ones() == 1 => {
            let i = m.trailing_zeros() as usize;
            let (j, r) = others(i);
            Ok(one_kill_terms(p, i, j, r))
        }
        [m] if m.count_ones() == 2 => {
            let r = remaining(*m);
            let (i, j) = others(r);
            Ok(two_simultaneous_terms(p, i, j, r))
        }
        [m1, m2] => match (single(*m1), single(*m2)) {
            (Some(i), Some(j)) => Ok(two_sequential_terms(p, i, j, remaining(m1 | m2))),
            _ => Err(FptError::domain("path_terms", format!("unexpected path {path}"))),
        },
        _ => Err(FptError::domain("path_terms", format!("unexpected path {path}"))),
    }
}

/// Survivals and densities of the trivariate model, assembled once per
/// parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivariateModel {
    params: TriPoissonParams,
    /// `survival[n − 1] = Sⁿ`.
    survival: [ExpSum; 3],
    fpt: [ExpSum; 3],
}

impl TrivariateModel {
    pub fn new(params: TriPoissonParams) -> Result<Self> {
        let graph = build_gamma(COORDINATES)?;
        let mut s3 = ExpSum::new();
        s3.push(ExpTerm::exp(1.0, params.total_rate()));

        let mut s2 = s3.clone();
        for path in enumerate_paths(&graph, 2)? {
            s2.extend_from(&path_terms(&params, &path)?);
        }
        let mut s1 = s2.clone();
        for path in enumerate_paths(&graph, 1)? {
            s1.extend_from(&path_terms(&params, &path)?);
        }
        let fpt = [
            s1.negative_derivative(),
            s2.negative_derivative(),
            s3.negative_derivative(),
        ];
        Ok(Self {
            params,
            survival: [s1, s2, s3],
            fpt,
        })
    }

    pub fn params(&self) -> &TriPoissonParams {
        &self.params
    }

    fn index(op: &'static str, n: usize) -> Result<usize> {
        if (1..=COORDINATES).contains(&n) {
            Ok(n - 1)
        } else {
            Err(FptError::domain(op, format!("order n = {n} must be in 1..=3")))
        }
    }

    /// `Sⁿ` as an exponential sum.
    pub fn survival_terms(&self, n: usize) -> Result<&ExpSum> {
        Ok(&self.survival[Self::index("survival_terms", n)?])
    }

    /// `Fⁿ = −dSⁿ/dt` as an exponential sum.
    pub fn fpt_terms(&self, n: usize) -> Result<&ExpSum> {
        Ok(&self.fpt[Self::index("fpt_terms", n)?])
    }

    pub fn survival(&self, n: usize, t: f64) -> Result<f64> {
        check_time("survival", t)?;
        Ok(self.survival_terms(n)?.eval(t))
    }

    pub fn fpt(&self, n: usize, t: f64) -> Result<f64> {
        check_time("fpt", t)?;
        Ok(self.fpt_terms(n)?.eval(t))
    }

    /// Each kill path ending with `n_alive` survivors paired with its
    /// probability terms.
    pub fn path_contributions(&self, n_alive: usize) -> Result<Vec<(KillPath, ExpSum)>> {
        let graph = build_gamma(COORDINATES)?;
        enumerate_paths(&graph, n_alive)?
            .into_iter()
            .map(|path| {
                let terms = path_terms(&self.params, &path)?;
                Ok((path, terms))
            })
            .collect()
    }
}

/// `S²(t)`: at least two coordinates alive.
pub fn survival2(params: &TriPoissonParams, t: f64) -> Result<f64> {
    TrivariateModel::new(*params)?.survival(2, t)
}

/// `S¹(t)`: at least one coordinate alive.
pub fn survival1(params: &TriPoissonParams, t: f64) -> Result<f64> {
    TrivariateModel::new(*params)?.survival(1, t)
}

/// `Fⁿ(t)` for `n ∈ {1, 2, 3}`.
pub fn fpt_n(params: &TriPoissonParams, n: usize, t: f64) -> Result<f64> {
    TrivariateModel::new(*params)?.fpt(n, t)
}
