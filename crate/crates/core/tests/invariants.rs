use polya_stein::distributions::{urn_pmf, walk_pmf, BetaLaw, DiscreteLaw, UrnParams, WalkParams};
use polya_stein::par::Exec;
use polya_stein::special::{beta_quantile, log_beta, log_gamma, log_rising_factorial, regularized_incomplete_beta};
use polya_stein::stein_beta::bound_constants;
use polya_stein::stein_discrete::{psi_of, random_test_functions, reconstruct_pmf, urn_operator_expectation};
use polya_stein::wasserstein::{urn_lower_bound, urn_upper_bound, wasserstein_exact, wasserstein_mc};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gamma_recurrence(x in 0.05f64..50.0) {
        let lhs = log_gamma(x + 1.0).unwrap();
        let rhs = log_gamma(x).unwrap() + x.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn log_beta_symmetric(a in 0.01f64..40.0, b in 0.01f64..40.0) {
        prop_assert_eq!(log_beta(a, b).unwrap(), log_beta(b, a).unwrap());
    }

    #[test]
    fn rising_factorial_splits(x in 0.01f64..20.0, j in 0u64..30, k in 0u64..30) {
        let whole = log_rising_factorial(x, j + k).unwrap();
        let parts = log_rising_factorial(x, j).unwrap() + log_rising_factorial(x + j as f64, k).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-11 * whole.abs().max(1.0));
    }

    #[test]
    fn incomplete_beta_reflects(x in 0.0f64..=1.0, a in 0.1f64..20.0, b in 0.1f64..20.0) {
        let s = regularized_incomplete_beta(x, a, b).unwrap() + regularized_incomplete_beta(1.0 - x, b, a).unwrap();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf(p in 0.001f64..0.999, a in 0.3f64..10.0, b in 0.3f64..10.0) {
        let x = beta_quantile(p, a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
        let back = regularized_incomplete_beta(x, a, b).unwrap();
        prop_assert!((back - p).abs() <= 1e-10, "I({x}) = {back} vs {p}");
    }

    #[test]
    fn urn_masses_sum_to_one(al in 1u32..8, be in 1u32..8, m in 1u32..5, n in 1u32..300) {
        let law = urn_pmf(&UrnParams::new(al, be, m, n).unwrap());
        let total: f64 = law.masses().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(law.masses().iter().all(|&p| p > 0.0));
    }

    #[test]
    fn urn_mirror_swaps_colours(al in 1u32..6, be in 1u32..6, m in 1u32..4, n in 1u32..100) {
        let law = urn_pmf(&UrnParams::new(al, be, m, n).unwrap());
        let mirror = urn_pmf(&UrnParams::new(be, al, m, n).unwrap());
        for (p, q) in law.masses().iter().zip(mirror.masses().iter().rev()) {
            prop_assert!((p - q).abs() <= 1e-13);
        }
    }

    #[test]
    fn walk_is_symmetric(n in 1u32..1000) {
        let law = walk_pmf(&WalkParams::new(n).unwrap());
        let m = law.masses();
        for k in 0..m.len() {
            prop_assert!((m[k] - m[m.len() - 1 - k]).abs() <= 1e-14);
        }
    }

    #[test]
    fn psi_round_trip(al in 1u32..6, be in 1u32..6, m in 1u32..4, n in 1u32..200) {
        let law = urn_pmf(&UrnParams::new(al, be, m, n).unwrap());
        let back = reconstruct_pmf(&psi_of(&law).unwrap(), law.scale(), law.step()).unwrap();
        for (p, q) in law.masses().iter().zip(back.masses()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn urn_operator_vanishes(al in 1u32..5, be in 1u32..5, m in 1u32..4, n in 1u32..60, seed in any::<u64>()) {
        let p = UrnParams::new(al, be, m, n).unwrap();
        for f in random_test_functions(0, i64::from(n), 3, seed) {
            prop_assert!(urn_operator_expectation(&p, &f).unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn bound_constants_finite(a in 0.01f64..20.0, b in 0.01f64..20.0) {
        let c = bound_constants(a, b).unwrap();
        prop_assert!(c.b0.is_finite() && c.b0 >= 0.0);
        prop_assert!(c.b1.is_finite() && c.b1 >= 0.0);
    }

    #[test]
    fn distance_between_bounds(al in 1u32..5, be in 1u32..5, m in 1u32..4, n in 1u32..200) {
        let p = UrnParams::new(al, be, m, n).unwrap();
        let dw = wasserstein_exact(&urn_pmf(&p), &p.limit_law()).unwrap();
        prop_assert!(dw >= 0.0);
        prop_assert!(urn_lower_bound(&p) <= dw + 1e-12);
        prop_assert!(dw <= urn_upper_bound(&p) + 1e-12);
    }

    #[test]
    fn json_round_trip(al in 1u32..6, be in 1u32..6, n in 1u32..50) {
        let law = urn_pmf(&UrnParams::new(al, be, 1, n).unwrap());
        let back = DiscreteLaw::from_json(&law.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.masses(), law.masses());
        prop_assert_eq!(back.support_lo(), law.support_lo());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mc_oracle_independent_of_exec(n in 1u32..40, seed in any::<u64>()) {
        let law = walk_pmf(&WalkParams::new(n).unwrap());
        let target = BetaLaw::arcsine();
        let seq = wasserstein_mc(&law, &target, 200_000, seed, Exec::Sequential).unwrap();
        let par = wasserstein_mc(&law, &target, 200_000, seed, Exec::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}
