//! Self-checks of the evaluators' structural invariants.

use serde::{Deserialize, Serialize};

use crate::bipoisson::{self, BiPoissonParams};
use crate::cds::{fee_leg, par_spread, CdsContract};
use crate::error::Result;
use crate::numeric::CompensatedSum;
use crate::paths::{build_gamma, enumerate_paths};
use crate::singlefile::{self, SpectralParams};
use crate::specfun::{adaptive_quad, conv_integral, QuadTolerance};
use crate::trivpoisson::{TriPoissonParams, TrivariateModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn record(name: &str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult {
            name: name.to_string(),
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name: name.to_string(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

fn non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn check_conv_integral() -> Result<(bool, String)> {
    let tol = QuadTolerance::default();
    let mut worst = 0.0_f64;
    for alpha in 0..4u32 {
        for beta in 0..4u32 {
            for &(lambda, t) in &[(0.5, 1.0), (2.8, 2.0), (7.0, 0.3)] {
                let exact = conv_integral(alpha, beta, lambda, t)?;
                let raw = adaptive_quad(
                    |tau| (t - tau).powi(alpha as i32) * tau.powi(beta as i32) * (-lambda * tau).exp(),
                    0.0,
                    t,
                    &tol,
                )?
                .value;
                worst = worst.max(((exact - raw) / raw).abs());
            }
        }
    }
    Ok((worst <= 1e-8, format!("max relative error {worst:.2e}")))
}

fn check_path_counts() -> Result<(bool, String)> {
    let mut ok = true;
    for n in 2..=5 {
        let g = build_gamma(n)?;
        for alive in 0..n {
            ok &= enumerate_paths(&g, alive)?.len() as u128 == g.count_paths(alive);
        }
    }
    Ok((ok, "enumerated path counts equal C(N,k)·Fubini(k) for N ≤ 5".into()))
}

fn check_bipoisson() -> Result<(bool, String)> {
    let p = BiPoissonParams::new(1.0, 2.0, 0.8, 5)?;
    let times = grid(0.0, 4.0, 0.25);
    let s2: Vec<f64> = times
        .iter()
        .map(|&t| bipoisson::survival_both(&p, t))
        .collect::<Result<_>>()?;
    let s1: Vec<f64> = times
        .iter()
        .map(|&t| bipoisson::survival_last(&p, t))
        .collect::<Result<_>>()?;
    let ordered = s2.iter().zip(&s1).all(|(a, b)| *a <= *b + 1e-14 && *b <= 1.0 + 1e-14);
    let monotone = non_increasing(&s2, 1e-14) && non_increasing(&s1, 1e-14);
    let mut fd_worst = 0.0_f64;
    for &t in &times[1..] {
        let h = 1e-4;
        let fd = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            Ok(-(-f(t + 2.0 * h)? + 8.0 * f(t + h)? - 8.0 * f(t - h)? + f(t - 2.0 * h)?) / (12.0 * h))
        };
        fd_worst = fd_worst.max((fd(&|x| bipoisson::survival_both(&p, x))? - bipoisson::fpt_both(&p, t)?).abs());
        fd_worst = fd_worst.max((fd(&|x| bipoisson::survival_last(&p, x))? - bipoisson::fpt_last(&p, t)?).abs());
    }
    let mut mass = CompensatedSum::new();
    for x in 0..=60 {
        for y in 0..=60 {
            mass.add(bipoisson::joint_pmf(x, y, &p, 0.5));
        }
    }
    let mass_err = (mass.value() - 1.0).abs();
    let passed = ordered && monotone && fd_worst <= 1e-6 && mass_err <= 1e-9;
    Ok((
        passed,
        format!("ordered={ordered} monotone={monotone} fd={fd_worst:.1e} pmf mass error={mass_err:.1e}"),
    ))
}

fn check_trivariate() -> Result<(bool, String)> {
    let mut ok = true;
    let mut detail = String::new();
    for params in [
        TriPoissonParams::new([1.2, 0.5, 3.3], [1.4, 3.1, 0.12])?,
        TriPoissonParams::new([5.3, 0.02, 3.3], [10.4, 5.1, 1.12])?,
    ] {
        let m = TrivariateModel::new(params)?;
        let times = grid(0.0, 2.0, 0.05);
        let mut curves = Vec::new();
        for n in 1..=3 {
            let s: Vec<f64> = times.iter().map(|&t| m.survival(n, t)).collect::<Result<_>>()?;
            ok &= non_increasing(&s, 1e-14);
            ok &= (m.survival_terms(n)?.at_zero() - 1.0).abs() < 1e-12;
            ok &= times.iter().all(|&t| m.fpt(n, t).map(|f| f >= -1e-14).unwrap_or(false));
            curves.push(s);
        }
        ok &= (0..times.len()).all(|i| curves[2][i] <= curves[1][i] + 1e-14 && curves[1][i] <= curves[0][i] + 1e-14);
    }
    let lam = [0.7, 1.9, 0.3];
    let indep = TrivariateModel::new(TriPoissonParams::new(lam, [0.0; 3])?)?;
    let mut worst = 0.0_f64;
    for t in grid(0.0, 4.0, 0.25) {
        let exact = 1.0 - lam.iter().map(|l| 1.0 - (-l * t).exp()).product::<f64>();
        worst = worst.max((indep.survival(1, t)? - exact).abs());
    }
    ok &= worst <= 1e-12;
    detail.push_str(&format!("independent reduction error {worst:.1e}"));
    Ok((ok, detail))
}

fn check_singlefile() -> Result<(bool, String)> {
    let sp = SpectralParams::default();
    let k = sp.k_trunc as f64;
    let sum = singlefile::psi_square_sum(sp.k_trunc);
    // per-index tail Σ_{k≥K} c_k² < 2/(π² K)
    let tail = 1.0 - (1.0 - 2.0 / (std::f64::consts::PI.powi(2) * k)).powi(2);
    let bracket = sum < 1.0 && sum + tail >= 1.0;
    let mut worst = 0.0_f64;
    let mut previous = (1.0, 1.0);
    let mut ordered = true;
    for t in grid(0.01, 1.0, 0.01) {
        let s1 = singlefile::survival_last_sf(&sp, t)?;
        let s2 = singlefile::survival_both_sf(&sp, t)?;
        ordered &= s2 <= s1 + 1e-12 && s1 <= previous.1 + 1e-12 && s2 <= previous.0 + 1e-12;
        previous = (s2, s1);
        worst = worst.max((s1 - singlefile::locatelli_reference(t)?).abs());
    }
    Ok((
        bracket && ordered && worst <= 1e-3,
        format!("ΣΨ²={sum:.6} bracket={bracket} ordered={ordered} reflection sup-norm={worst:.1e}"),
    ))
}

fn check_cds() -> Result<(bool, String)> {
    let mut ok = true;
    for (lambda, cross) in [(2.5, 2.5), (0.01, 2.5), (2.5, 0.01), (0.3, 1.7), (1.1, 0.2)] {
        let m = TrivariateModel::new(TriPoissonParams::new([lambda; 3], [cross; 3])?)?;
        let mut spreads = Vec::new();
        for order in 1..=3 {
            let c = CdsContract::regular(order, 5.0, 0.5, 0.02)?;
            let q = par_spread(&c, &m)?;
            ok &= (fee_leg(q.u, &c, &m)? + q.protection_pv).abs() <= 1e-10 * q.protection_pv.abs();
            spreads.push(q.u);
        }
        ok &= spreads[0] >= spreads[1] && spreads[1] >= spreads[2];
    }
    Ok((
        ok,
        "par spread zeroes the contract; spreads decrease with default order".into(),
    ))
}

/// Runs every check and reports each outcome.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        record("conv_integral matches quadrature", check_conv_integral()),
        record("kill-path enumeration counts", check_path_counts()),
        record("bivariate ordering, derivatives, normalization", check_bipoisson()),
        record("trivariate ordering and reductions", check_trivariate()),
        record("single-file ordering and reflection identity", check_singlefile()),
        record("cds par-spread identities", check_cds()),
    ]
}
