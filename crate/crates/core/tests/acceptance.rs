//! Acceptance criteria, one test each. Every test prints a `PASS`/`FAIL`
//! line before asserting.

use std::time::{Duration, Instant};

use fptorder_core::bipoisson::{self, BiPoissonParams};
use fptorder_core::cds::{par_spread, CdsContract};
use fptorder_core::curve::{EmpiricalCurve, TimeGrid};
use fptorder_core::montecarlo::{simulate_bipoisson, simulate_singlefile, simulate_trivariate, McConfig};
use fptorder_core::numeric::CompensatedSum;
use fptorder_core::singlefile::{self, SpectralParams};
use fptorder_core::specfun::{adaptive_quad, conv_integral, QuadTolerance};
use fptorder_core::trivpoisson::{trivariate_pmf, TriPoissonParams, TrivariateModel};

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id:02} [{status}] {name}: {detail}");
    assert!(passed, "criterion {id} failed: {detail}");
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let elapsed = start.elapsed();
    (
        elapsed < budget,
        format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()),
    )
}

fn five_point(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    -(-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h)
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    TimeGrid::uniform(start, stop, step).unwrap().times().to_vec()
}

fn tri_mixed() -> TriPoissonParams {
    TriPoissonParams::new([1.2, 0.5, 3.3], [1.4, 3.1, 0.12]).unwrap()
}

fn tri_strong() -> TriPoissonParams {
    TriPoissonParams::new([5.3, 0.02, 3.3], [10.4, 5.1, 1.12]).unwrap()
}

/// Largest deviation of an empirical curve from the model in units of its
/// standard error. The error is the larger of the empirical and the
/// model-implied binomial error, so points with `p̂ ∈ {0, 1}` are not
/// judged with a zero error bar.
fn worst_z(curve: &EmpiricalCurve, exact: impl Fn(f64) -> f64, allowance: f64) -> (f64, f64) {
    let n = curve.realizations as f64;
    let mut worst = 0.0_f64;
    let mut worst_t = 0.0;
    for (i, t) in curve.times.iter().enumerate() {
        let e = exact(t);
        let se = curve.std_err[i].max((e * (1.0 - e) / n).sqrt());
        let excess = ((curve.estimate[i] - e).abs() - allowance).max(0.0);
        let z = if se > 0.0 {
            excess / se
        } else if excess > 1e-12 {
            f64::INFINITY
        } else {
            0.0
        };
        if z > worst {
            worst = z;
            worst_t = t;
        }
    }
    (worst, worst_t)
}

#[test]
fn c01_reference_par_spreads() {
    let start = Instant::now();
    let targets = [
        ("A", 2.5, 2.5, [1822.0, 41.84, 2.30]),
        ("B", 0.01, 2.5, [42.48, 38.84, 0.06]),
        ("C", 2.5, 0.01, [42.48, 4.61, 0.66]),
    ];
    let mut all = true;
    let mut lines = Vec::new();
    for (model, single, cross, expected) in targets {
        let m = TrivariateModel::new(TriPoissonParams::new([single; 3], [cross; 3]).unwrap()).unwrap();
        for order in 1..=3 {
            let c = CdsContract::regular(order, 5.0, 0.5, 0.02).unwrap();
            let u = par_spread(&c, &m).unwrap().u;
            let target = expected[order - 1];
            let tol = if model == "A" && order == 1 { 0.01 } else { 0.005 };
            let rel = (u - target).abs() / target;
            let ok = rel <= tol;
            all &= ok;
            lines.push(format!(
                "{model}/n={order}: {u:.4} vs {target} (rel {rel:.2e}, tol {tol}) {}",
                if ok { "ok" } else { "MISMATCH" }
            ));
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    for l in &lines {
        println!("  {l}");
    }
    report(
        1,
        "reference par spreads",
        all && fast,
        &format!("{}; {time}", lines.join("; ")),
    );
}

#[test]
fn c02_bivariate_vs_monte_carlo() {
    let start = Instant::now();
    let p = BiPoissonParams::new(1.0, 2.0, 0.8, 5).unwrap();
    let g = TimeGrid::uniform(0.25, 4.0, 0.25).unwrap();
    let cfg = McConfig::jump(10_000, 1, g).unwrap();
    let (first, last) = simulate_bipoisson(&p, &cfg).unwrap();
    let (z2, t2) = worst_z(&first, |t| bipoisson::survival_both(&p, t).unwrap(), 0.0);
    let (z1, t1) = worst_z(&last, |t| bipoisson::survival_last(&p, t).unwrap(), 0.0);
    let (fast, time) = within_budget(start, Duration::from_secs(30));
    report(
        2,
        "bivariate S², S¹ vs Monte Carlo within 3 SE",
        z2 <= 3.0 && z1 <= 3.0 && fast,
        &format!("max z S²={z2:.2} at t={t2}, S¹={z1:.2} at t={t1}; {time}"),
    );
}

#[test]
fn c03_trivariate_vs_monte_carlo() {
    let start = Instant::now();
    let g = TimeGrid::uniform(0.25, 2.0, 0.25).unwrap();
    let cfg = McConfig::jump(10_000, 1, g).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for (set, p) in [("mixed", tri_mixed()), ("strong", tri_strong())] {
        let m = TrivariateModel::new(p).unwrap();
        // curves[k] is the survival of the (k+1)-th kill, i.e. S^{3−k}
        let curves = simulate_trivariate(&p, &cfg).unwrap();
        for (k, curve) in curves.iter().enumerate() {
            let n = 3 - k;
            let (z, t) = worst_z(curve, |t| m.survival(n, t).unwrap(), 0.0);
            ok &= z <= 3.0;
            detail.push(format!("{set} S{n} max z={z:.2} at t={t}"));
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(30));
    report(
        3,
        "trivariate S³, S², S¹ vs Monte Carlo within 3 SE",
        ok && fast,
        &format!("{}; {time}", detail.join(", ")),
    );
}

#[test]
fn c04_single_file_reflection_identity() {
    let start = Instant::now();
    let sp = SpectralParams::default();
    assert_eq!(sp.k_trunc, 64);
    let mut worst = 0.0_f64;
    let mut worst_t = 0.0;
    for t in grid(0.01, 1.0, 0.01) {
        let d = (singlefile::survival_last_sf(&sp, t).unwrap() - singlefile::locatelli_reference(t).unwrap()).abs();
        if d > worst {
            worst = d;
            worst_t = t;
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(120));
    report(
        4,
        "single-file S¹ equals reflection formula within 1e-3",
        worst <= 1e-3 && fast,
        &format!("sup-norm {worst:.2e} at t={worst_t}; {time}"),
    );
}

#[test]
fn c05_single_file_vs_brownian_dynamics() {
    let start = Instant::now();
    let sp = SpectralParams::default();
    let g = TimeGrid::uniform(0.05, 1.0, 0.05).unwrap();
    let cfg = McConfig::new(100_000, 1, 1.0, 1e-5, g).unwrap();
    let (right, left) = simulate_singlefile(&cfg).unwrap();
    let allowance = 5e-3;
    let (z2, t2) = worst_z(&right, |t| singlefile::survival_both_sf(&sp, t).unwrap(), allowance);
    let (z1, t1) = worst_z(&left, |t| singlefile::survival_last_sf(&sp, t).unwrap(), allowance);
    let (fast, time) = within_budget(start, Duration::from_secs(600));
    report(
        5,
        "single-file S², S¹ vs Brownian dynamics within 3 SE + 5e-3",
        z2 <= 3.0 && z1 <= 3.0 && fast,
        &format!("max z beyond allowance S²={z2:.2} at t={t2}, S¹={z1:.2} at t={t1}; {time}"),
    );
}

#[test]
fn c06_derivative_consistency() {
    let mut detail = Vec::new();
    let mut ok = true;

    let bp = BiPoissonParams::new(1.0, 2.0, 0.8, 5).unwrap();
    let mut worst = 0.0_f64;
    for t in grid(0.25, 4.0, 0.25) {
        let fd2 = five_point(|x| bipoisson::survival_both(&bp, x).unwrap(), t, 1e-3);
        let fd1 = five_point(|x| bipoisson::survival_last(&bp, x).unwrap(), t, 1e-3);
        worst = worst.max((fd2 - bipoisson::fpt_both(&bp, t).unwrap()).abs());
        worst = worst.max((fd1 - bipoisson::fpt_last(&bp, t).unwrap()).abs());
    }
    ok &= worst <= 1e-6;
    detail.push(format!("bivariate {worst:.1e}"));

    let mut worst = 0.0_f64;
    for p in [tri_mixed(), tri_strong()] {
        let m = TrivariateModel::new(p).unwrap();
        for n in 1..=3 {
            for t in grid(0.25, 2.0, 0.25) {
                let fd = five_point(|x| m.survival(n, x).unwrap(), t, 1e-3);
                worst = worst.max((fd - m.fpt(n, t).unwrap()).abs());
            }
        }
    }
    ok &= worst <= 1e-6;
    detail.push(format!("trivariate {worst:.1e}"));

    let sp = SpectralParams::default();
    let mut worst = 0.0_f64;
    for t in grid(0.05, 1.0, 0.05) {
        let fd2 = five_point(|x| singlefile::survival_both_sf(&sp, x).unwrap(), t, 1e-4);
        let fd1 = five_point(|x| singlefile::survival_last_sf(&sp, x).unwrap(), t, 1e-4);
        worst = worst.max((fd2 - singlefile::fpt_both_sf(&sp, t).unwrap()).abs());
        worst = worst.max((fd1 - singlefile::fpt_last_sf(&sp, t).unwrap()).abs());
    }
    ok &= worst <= 1e-4;
    detail.push(format!("single file {worst:.1e}"));

    report(
        6,
        "finite differences match densities (1e-6 / 1e-4)",
        ok,
        &detail.join(", "),
    );
}

fn integrate_pieces(f: impl Fn(f64) -> f64, edges: &[f64], tol: &QuadTolerance) -> f64 {
    edges
        .windows(2)
        .map(|w| adaptive_quad(&f, w[0], w[1], tol).unwrap().value)
        .sum()
}

#[test]
fn c07_normalization() {
    let mut detail = Vec::new();
    let mut ok = true;
    let tol = QuadTolerance::default();

    let k = 64;
    let sum = singlefile::psi_square_sum(k);
    let tail = 1.0 - (1.0 - 2.0 / (std::f64::consts::PI.powi(2) * k as f64)).powi(2);
    let bracket = sum < 1.0 && sum + tail >= 1.0;
    ok &= bracket;
    detail.push(format!("ΣΨ²(K=64)={sum:.6} + tail {tail:.2e} brackets 1: {bracket}"));

    let bp = BiPoissonParams::new(1.0, 2.0, 0.8, 5).unwrap();
    let mut joint = CompensatedSum::new();
    for x in 0..=60 {
        for y in 0..=60 {
            joint.add(bipoisson::joint_pmf(x, y, &bp, 0.5));
        }
    }
    let mut pmf_err = (joint.value() - 1.0).abs();
    for y in 0..6 {
        let c: f64 = (0..=80).map(|x| bipoisson::conditional_pmf(x, y, &bp, 0.5)).sum();
        pmf_err = pmf_err.max((c - 1.0).abs());
    }
    let marginal: f64 = (0..=80).map(|x| bipoisson::poisson_pmf(x, 2.8, 0.5)).sum();
    pmf_err = pmf_err.max((marginal - 1.0).abs());
    let mut tri = CompensatedSum::new();
    let tp = tri_mixed();
    for a in 0..=40 {
        for b in 0..=40 {
            for c in 0..=40 {
                tri.add(trivariate_pmf([a, b, c], &tp, 0.3));
            }
        }
    }
    pmf_err = pmf_err.max((tri.value() - 1.0).abs());
    ok &= pmf_err <= 1e-9;
    detail.push(format!("PMF mass error {pmf_err:.1e}"));

    let edges = [0.0, 0.5, 2.0, 8.0, 30.0, 80.0];
    let mut closed_err = 0.0_f64;
    // the densities are defined for t > 0; the quadrature never samples endpoints
    let f2 = integrate_pieces(|t| bipoisson::fpt_both(&bp, t).unwrap(), &edges, &tol);
    let f1 = integrate_pieces(|t| bipoisson::fpt_last(&bp, t).unwrap(), &edges, &tol);
    let fm = integrate_pieces(|t| bipoisson::marginal_fpt(2.8, 5, t), &edges, &tol);
    closed_err = closed_err
        .max((f2 - 1.0).abs())
        .max((f1 - 1.0).abs())
        .max((fm - 1.0).abs());
    let tri_edges = [0.0, 0.1, 1.0, 10.0, 100.0, 4000.0];
    for p in [tri_mixed(), tri_strong()] {
        let m = TrivariateModel::new(p).unwrap();
        for n in 1..=3 {
            let total = integrate_pieces(|t| m.fpt(n, t).unwrap(), &tri_edges, &tol);
            closed_err = closed_err.max((total - 1.0).abs());
        }
    }
    ok &= closed_err <= 1e-9;
    detail.push(format!("closed-form densities {closed_err:.1e}"));

    // mass below the time floor: 1 − S¹(t) ≈ (4/π) t, about 1.3e-4 at 1e-4
    let sp = SpectralParams::new(256, QuadTolerance::default(), 1e-4).unwrap();
    let loose = QuadTolerance::new(1e-10, 1e-9, 4000).unwrap();
    let t_max = 4.0;
    let sf_edges = [1e-4, 1e-3, 1e-2, 0.1, 1.0, t_max];
    let f1 = integrate_pieces(|t| singlefile::fpt_last_sf(&sp, t).unwrap(), &sf_edges, &loose);
    let sf_err = (f1 + singlefile::survival_last_sf(&sp, t_max).unwrap() - 1.0).abs();
    ok &= sf_err <= 1e-3;
    detail.push(format!("single-file F¹ {sf_err:.1e}"));

    report(7, "normalization suite", ok, &detail.join(", "));
}

#[test]
fn c08_ordering() {
    let mut detail = Vec::new();
    let mut ok = true;
    let check = |curves: &[Vec<f64>], densities: &[Vec<f64>]| -> bool {
        let slack = 1e-12;
        let ordered = (1..curves.len()).all(|c| curves[c].iter().zip(&curves[c - 1]).all(|(a, b)| *a <= *b + slack));
        let monotone = curves.iter().all(|c| c.windows(2).all(|w| w[1] <= w[0] + slack));
        let bounded = curves.iter().flatten().all(|v| (-slack..=1.0 + slack).contains(v));
        let positive = densities.iter().flatten().all(|v| *v >= -slack);
        ordered && monotone && bounded && positive
    };

    let bp = BiPoissonParams::new(1.0, 2.0, 0.8, 5).unwrap();
    let g = grid(0.05, 4.0, 0.05);
    let s1: Vec<f64> = g.iter().map(|&t| bipoisson::survival_last(&bp, t).unwrap()).collect();
    let s2: Vec<f64> = g.iter().map(|&t| bipoisson::survival_both(&bp, t).unwrap()).collect();
    let f: Vec<f64> = g.iter().map(|&t| bipoisson::fpt_last(&bp, t).unwrap()).collect();
    let f2: Vec<f64> = g.iter().map(|&t| bipoisson::fpt_both(&bp, t).unwrap()).collect();
    let b = check(&[s1, s2], &[f, f2]);
    ok &= b;
    detail.push(format!("bivariate {b}"));

    for (name, p) in [("mixed", tri_mixed()), ("strong", tri_strong())] {
        let m = TrivariateModel::new(p).unwrap();
        let g = grid(0.0, 2.0, 0.02);
        let curves: Vec<Vec<f64>> = (1..=3)
            .map(|n| g.iter().map(|&t| m.survival(n, t).unwrap()).collect())
            .collect();
        let dens: Vec<Vec<f64>> = (1..=3)
            .map(|n| g.iter().map(|&t| m.fpt(n, t).unwrap()).collect())
            .collect();
        let b = check(&curves, &dens);
        ok &= b;
        detail.push(format!("trivariate {name} {b}"));
    }

    let sp = SpectralParams::default();
    let g = grid(0.01, 1.0, 0.01);
    let s1: Vec<f64> = g
        .iter()
        .map(|&t| singlefile::survival_last_sf(&sp, t).unwrap())
        .collect();
    let s2: Vec<f64> = g
        .iter()
        .map(|&t| singlefile::survival_both_sf(&sp, t).unwrap())
        .collect();
    let f1: Vec<f64> = g.iter().map(|&t| singlefile::fpt_last_sf(&sp, t).unwrap()).collect();
    let f2: Vec<f64> = g.iter().map(|&t| singlefile::fpt_both_sf(&sp, t).unwrap()).collect();
    let b = check(&[s1, s2], &[f1, f2]);
    ok &= b;
    detail.push(format!("single file {b}"));

    report(
        8,
        "ordering, monotonicity, non-negative densities",
        ok,
        &detail.join(", "),
    );
}

#[test]
fn c09_conv_integral_vs_quadrature() {
    let tol = QuadTolerance::new(1e-300, 1e-13, 10_000).unwrap();
    let mut worst = 0.0_f64;
    let mut at = (0, 0, 0.0, 0.0);
    for alpha in 0..=6u32 {
        for beta in 0..=6u32 {
            for &lambda in &[0.0, 0.5, 5.0, 25.0] {
                for &t in &[0.1, 1.0, 10.0] {
                    let exact = conv_integral(alpha, beta, lambda, t).unwrap();
                    let raw = adaptive_quad(
                        |tau| (t - tau).powi(alpha as i32) * tau.powi(beta as i32) * (-lambda * tau).exp(),
                        0.0,
                        t,
                        &tol,
                    )
                    .unwrap()
                    .value;
                    let rel = ((exact - raw) / raw).abs();
                    if rel > worst {
                        worst = rel;
                        at = (alpha, beta, lambda, t);
                    }
                }
            }
        }
    }
    report(
        9,
        "conv_integral vs quadrature, rel err <= 1e-8",
        worst <= 1e-8,
        &format!("max rel err {worst:.2e} at (α,β,λ,t)={at:?}"),
    );
}

#[test]
fn c10_degenerate_reductions() {
    let lam = [0.7, 1.9, 0.3];
    let m = TrivariateModel::new(TriPoissonParams::new(lam, [0.0; 3]).unwrap()).unwrap();
    let mut tri = 0.0_f64;
    for t in grid(0.0, 5.0, 0.05) {
        let q: Vec<f64> = lam.iter().map(|l| (-l * t).exp()).collect();
        let s1 = 1.0 - (1.0 - q[0]) * (1.0 - q[1]) * (1.0 - q[2]);
        let s2 = q[0] * q[1] + q[0] * q[2] + q[1] * q[2] - 2.0 * q[0] * q[1] * q[2];
        let s3 = q[0] * q[1] * q[2];
        tri = tri
            .max((m.survival(1, t).unwrap() - s1).abs())
            .max((m.survival(2, t).unwrap() - s2).abs())
            .max((m.survival(3, t).unwrap() - s3).abs());
    }
    let (l1, l2) = (1.3, 0.6);
    let bp = BiPoissonParams::new(l1, l2, 0.0, 1).unwrap();
    let mut bi = 0.0_f64;
    for t in grid(0.0, 5.0, 0.05) {
        let exact = (-l1 * t).exp() + (-l2 * t).exp() - (-(l1 + l2) * t).exp();
        bi = bi.max((bipoisson::survival_last(&bp, t).unwrap() - exact).abs());
    }
    report(
        10,
        "degenerate reductions to independent exponentials (1e-12)",
        tri <= 1e-12 && bi <= 1e-12,
        &format!("trivariate {tri:.1e}, bivariate {bi:.1e}"),
    );
}
