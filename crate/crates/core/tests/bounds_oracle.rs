mod common;

use num_rational::BigRational;

use common::{abs_diff, exact_binomial, exact_tail, min_one, ratio};
use scenario_discard::bounds::{
    binom_tail, evaluate, invert_epsilon, max_removable, BoundQuery, Formula, bound_cascade, bound_cg11,
    INVERSION_TOL,
};

fn tol() -> BigRational {
    ratio(1, 1_000_000_000_000)
}

#[test]
fn large_sample_tail_matches_exact_sum() {
    let eps = ratio(3, 100);
    for k in [0, 9, 26, 27, 60, 150] {
        let got = binom_tail(2000, k, 0.03).unwrap();
        let want = exact_tail(2000, k, &eps);
        // relative, since the small tails sit far below 1e-12
        let err = abs_diff(got, &want);
        assert!(err <= &want * ratio(1, 1_000_000_000_000), "k = {k}: {got}");
    }
}

#[test]
fn removal_threshold_at_two_thousand_samples() {
    // r = 17 is the last removal count certified at β = 1e-6
    let at = |r: u64| bound_cascade(&BoundQuery::new(2000, 10, r, 0.03).unwrap()).raw;
    assert!((at(17) - 4.734e-7).abs() < 5e-10, "{}", at(17));
    assert!((at(18) - 1.100e-6).abs() < 5e-10, "{}", at(18));
    assert_eq!(max_removable(2000, 10, 0.03, 1e-6, Formula::Cascade, false).unwrap(), 17);
    assert_eq!(max_removable(2000, 10, 0.03, 1e-6, Formula::Cascade, true).unwrap(), 10);
    assert_eq!(max_removable(2000, 10, 0.03, 1e-6, Formula::Cg11, false).unwrap(), 8);
}

#[test]
fn cg11_factor_is_exact() {
    for (m, d, r) in [(120u64, 4u64, 6u64), (200, 10, 30), (60, 1, 20)] {
        let q = BoundQuery::new(m, d, r, 0.1).unwrap();
        let want = exact_binomial(r + d - 1, r) * exact_tail(m, r + d - 1, &ratio(1, 10));
        assert!(abs_diff(bound_cg11(&q).value, &min_one(want)) <= tol());
    }
}

#[test]
fn inversion_brackets_beta() {
    for &(m, d, r, beta) in &[(200u64, 2u64, 4u64, 0.2), (2000, 10, 17, 1e-6), (500, 3, 0, 1e-3)] {
        for f in [Formula::Cascade, Formula::Cg11, Formula::Compression] {
            let inv = invert_epsilon(m, d, r, beta, f).unwrap();
            assert!(!inv.boundary);
            assert!(evaluate(f, m, d, r, inv.epsilon).unwrap().raw <= beta);
            let below = inv.epsilon - 2.0 * INVERSION_TOL;
            assert!(evaluate(f, m, d, r, below).unwrap().raw > beta, "{f} {m} {d} {r}");
        }
    }
}

#[test]
fn max_removable_matches_definition() {
    for &(m, d, eps, beta) in &[(300u64, 3u64, 0.1, 1e-3), (2000, 10, 0.08, 1e-6), (100, 1, 0.2, 0.05)] {
        for f in [Formula::Cascade, Formula::Cg11] {
            let r = max_removable(m, d, eps, beta, f, false).unwrap();
            assert!(evaluate(f, m, d, r, eps).unwrap().raw <= beta);
            assert!(evaluate(f, m, d, r + 1, eps).unwrap().raw > beta);
            assert_eq!(max_removable(m, d, eps, beta, f, true).unwrap(), r / d * d);
        }
    }
}
