use fptorder_core::bipoisson::{self, BiPoissonParams};
use fptorder_core::expsum::{ExpSum, ExpTerm};
use fptorder_core::specfun::{beta, conv_integral, conv_integral_dt};
use fptorder_core::trivpoisson::{TriPoissonParams, TrivariateModel};
use proptest::prelude::*;

fn rate() -> impl Strategy<Value = f64> {
    0.0..4.0_f64
}

fn positive_rate() -> impl Strategy<Value = f64> {
    0.05..4.0_f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beta_is_symmetric(a in 0.1..20.0_f64, b in 0.1..20.0_f64) {
        let (x, y) = (beta(a, b).unwrap(), beta(b, a).unwrap());
        prop_assert!((x - y).abs() <= 1e-13 * x.abs());
    }

    #[test]
    fn conv_integral_grows_with_horizon(alpha in 0u32..6, beta_ in 0u32..6, lambda in 0.0..10.0_f64,
                                        t in 0.01..5.0_f64, dt in 0.01..1.0_f64) {
        let a = conv_integral(alpha, beta_, lambda, t).unwrap();
        let b = conv_integral(alpha, beta_, lambda, t + dt).unwrap();
        prop_assert!(b > a);
        prop_assert!(conv_integral_dt(alpha, beta_, lambda, t).unwrap() >= 0.0);
    }

    #[test]
    fn conv_integral_swaps_with_reflected_weight(alpha in 0u32..6, beta_ in 0u32..6, t in 0.01..5.0_f64) {
        // at λ = 0 the integrand is symmetric under τ ↦ t − τ
        let a = conv_integral(alpha, beta_, 0.0, t).unwrap();
        let b = conv_integral(beta_, alpha, 0.0, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn divided_difference_is_symmetric(coef in -3.0..3.0_f64, g1 in 0.0..6.0_f64, g2 in 0.0..6.0_f64,
                                       t in 0.0..4.0_f64) {
        let a = ExpTerm::divided(coef, g1, g2).eval(t);
        let b = ExpTerm::divided(coef, g2, g1).eval(t);
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
    }

    #[test]
    fn expsum_derivative_matches_difference(c1 in -2.0..2.0_f64, r1 in 0.0..3.0_f64,
                                            c2 in -2.0..2.0_f64, g1 in 0.0..3.0_f64, g2 in 0.0..3.0_f64,
                                            t in 0.1..3.0_f64) {
        let s = ExpSum::from_terms(vec![ExpTerm::exp(c1, r1), ExpTerm::divided(c2, g1, g2)]);
        let h = 1e-4;
        let fd = (s.eval(t + h) - s.eval(t - h)) / (2.0 * h);
        prop_assert!((fd - s.derivative().eval(t)).abs() <= 1e-6);
    }

    #[test]
    fn expsum_discounted_integral_is_linear(c1 in -2.0..2.0_f64, r1 in 0.0..3.0_f64,
                                            c2 in -2.0..2.0_f64, g1 in 0.0..3.0_f64, g2 in 0.0..3.0_f64,
                                            rho in 0.0..0.2_f64, horizon in 0.1..6.0_f64) {
        let a = ExpSum::from_terms(vec![ExpTerm::exp(c1, r1)]);
        let b = ExpSum::from_terms(vec![ExpTerm::divided(c2, g1, g2)]);
        let mut both = a.clone();
        both.extend_from(&b);
        let lhs = both.discounted_integral(rho, horizon);
        let rhs = a.discounted_integral(rho, horizon) + b.discounted_integral(rho, horizon);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn bivariate_survival_is_ordered(l1 in rate(), l2 in rate(), l12 in rate(), m in 1u32..6,
                                     t in 0.0..5.0_f64) {
        prop_assume!(l1 + l12 > 0.0 && l2 + l12 > 0.0);
        let p = BiPoissonParams::new(l1, l2, l12, m).unwrap();
        let s2 = bipoisson::survival_both(&p, t).unwrap();
        let s1 = bipoisson::survival_last(&p, t).unwrap();
        let (r1, r2) = p.marginal_rates();
        let slack = 1e-12;
        prop_assert!(-slack <= s2 && s2 <= s1 + slack && s1 <= 1.0 + slack);
        // the last survivor outlives either coordinate, the first kill neither
        let m1 = bipoisson::marginal_survival(r1, m, t);
        let m2 = bipoisson::marginal_survival(r2, m, t);
        prop_assert!(s1 + slack >= m1.max(m2));
        prop_assert!(s2 <= m1.min(m2) + slack);
    }

    #[test]
    fn trivariate_survival_is_ordered(l in proptest::array::uniform3(positive_rate()),
                                      c in proptest::array::uniform3(rate()),
                                      t in 0.0..3.0_f64, dt in 0.0..0.5_f64) {
        let m = TrivariateModel::new(TriPoissonParams::new(l, c).unwrap()).unwrap();
        let slack = 1e-12;
        let s: Vec<f64> = (1..=3).map(|n| m.survival(n, t).unwrap()).collect();
        prop_assert!(-slack <= s[2] && s[2] <= s[1] + slack && s[1] <= s[0] + slack && s[0] <= 1.0 + slack);
        for n in 1..=3 {
            prop_assert!(m.survival(n, t + dt).unwrap() <= m.survival(n, t).unwrap() + slack);
            prop_assert!(m.fpt(n, t).unwrap() >= -slack);
        }
    }

    #[test]
    fn trivariate_is_invariant_under_relabeling(l in proptest::array::uniform3(positive_rate()),
                                                c in proptest::array::uniform3(rate()),
                                                t in 0.0..3.0_f64) {
        // swapping coordinates 0 and 1 maps (λ12, λ13, λ23) to (λ12, λ23, λ13)
        let a = TrivariateModel::new(TriPoissonParams::new(l, c).unwrap()).unwrap();
        let b = TrivariateModel::new(TriPoissonParams::new([l[1], l[0], l[2]], [c[0], c[2], c[1]]).unwrap()).unwrap();
        for n in 1..=3 {
            let (x, y) = (a.survival(n, t).unwrap(), b.survival(n, t).unwrap());
            prop_assert!((x - y).abs() <= 1e-12, "n={} {} vs {}", n, x, y);
        }
    }
}
