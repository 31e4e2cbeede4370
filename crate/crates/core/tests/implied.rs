mod common;

use common::*;
use proptest::prelude::*;
use skewdist::implied::{default_domain, density_on_axis, trapezoid, DEFAULT_CURVE_POINTS};
use skewdist::skew::linspace as grid;
use skewdist::{
    density_curve, distribution_moments, expected_payoff, implied_cdf, implied_pdf, plausibility_check, put_price,
    smile_put_price, MarketEnv, Method, SkewParams,
};

fn flat(a: f64) -> SkewParams {
    SkewParams::flat(a).unwrap()
}

fn skew(a: f64, b: f64, c: f64) -> SkewParams {
    SkewParams::new(a, b, c).unwrap()
}

#[test]
fn lognormal_recovery() {
    let env = example_env();
    for a in [0.1, 0.2, 0.4] {
        for x in grid(0.3, 3.0, 541) {
            let pdf = implied_pdf(&env, &flat(a), x, Method::Analytic).unwrap();
            let oracle = lognormal_pdf(&env, a, x);
            assert!((pdf - oracle).abs() <= 1e-6, "a={a} x={x}: {pdf} vs {oracle}");
        }
    }
    for x in [0.7, 1.0, 1.3] {
        let fd = implied_pdf(&env, &flat(0.2), x, Method::FiniteDifference).unwrap();
        assert!((fd - lognormal_pdf(&env, 0.2, x)).abs() < 1e-6);
    }
}

#[test]
fn density_curve_matches_lognormal() {
    let env = example_env();
    let c = density_curve(&env, &flat(0.25), 0.3, 3.0, 271, Method::Analytic).unwrap();
    assert!(c.all_ok());
    for (x, p) in c.xs.iter().zip(&c.pdf) {
        assert!((p - lognormal_pdf(&env, 0.25, *x)).abs() < 1e-6);
    }
    assert!(c.cdf.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn flat_moments_and_payoffs() {
    let env = example_env();
    let (lo, hi) = default_domain(&env);
    let c = density_curve(&env, &flat(0.2), lo, hi, DEFAULT_CURVE_POINTS, Method::Analytic).unwrap();
    let m = distribution_moments(&c).unwrap();
    let fwd = (0.08f64).exp();
    assert!((m.mass - 1.0).abs() < 1e-3);
    assert!((m.mean / fwd - 1.0).abs() < 1e-3);
    let lognormal_var = fwd * fwd * ((0.04f64).exp() - 1.0);
    assert!((m.variance / lognormal_var - 1.0).abs() < 5e-3);
    assert!(!m.truncated());

    let bond = expected_payoff(&env, &c, |_| 1.0).unwrap();
    assert!((bond.price - env.discount()).abs() < 1e-3 * env.discount());
    let put = expected_payoff(&env, &c, |x| (1.0 - x).max(0.0)).unwrap();
    assert!((put.price - put_price(&env, 1.0, 0.2).unwrap()).abs() < 1e-4);
    let fwd_claim = expected_payoff(&env, &c, |x| x).unwrap();
    assert!((fwd_claim.price / env.dividend_discount() - 1.0).abs() < 1e-3);
}

#[test]
fn trapezoid_normalization_2000_points() {
    let env = example_env();
    let c = density_curve(&env, &flat(0.2), 0.05, 10.0, 2000, Method::Analytic).unwrap();
    assert!((trapezoid(&c.xs, &c.pdf) - 1.0).abs() < 1e-3);
}

#[test]
fn payoff_reproduces_smile_put_for_skewed_smile() {
    let env = example_env();
    let s = skew(0.25, -0.02, 0.005);
    let (lo, hi) = default_domain(&env);
    let c = density_curve(&env, &s, lo, hi, DEFAULT_CURVE_POINTS, Method::Analytic).unwrap();
    for k in [0.8, 1.0, 1.2] {
        let v = expected_payoff(&env, &c, |x| (k - x).max(0.0)).unwrap();
        assert!((v.price - smile_put_price(&env, &s, k).unwrap()).abs() < 1e-4, "k={k}");
    }
}

#[test]
fn cdf_pdf_consistency() {
    let env = example_env();
    for s in [skew(0.3, -0.3, 0.0), skew(0.3, -0.2, 0.5), skew(0.25, 0.1, 0.2)] {
        let c = density_curve(&env, &s, 0.6, 1.5, 901, Method::Analytic).unwrap();
        for i in (10..c.len()).step_by(50) {
            let integral = trapezoid(&c.xs[..=i], &c.pdf[..=i]);
            assert!((integral - (c.cdf[i] - c.cdf[0])).abs() < 1e-4, "{s:?} x={}", c.xs[i]);
        }
    }
}

#[test]
fn smile_price_composition() {
    let env = example_env();
    assert_eq!(
        smile_put_price(&env, &flat(0.3), 0.85).unwrap(),
        put_price(&env, 0.85, 0.3).unwrap()
    );
    // steeper slope: higher put at a fixed strike below the money
    let steep = smile_put_price(&env, &skew(0.3, -0.5, 0.0), 0.8).unwrap();
    let gentle = smile_put_price(&env, &skew(0.3, -0.1, 0.0), 0.8).unwrap();
    assert!(steep > gentle);
}

#[test]
fn non_unit_spot_scales() {
    let e1 = example_env();
    let e100 = MarketEnv::new(100.0, 0.10, 0.02, 1.0).unwrap();
    let s = skew(0.3, -0.2, 0.5);
    for x in [0.8, 1.0, 1.2] {
        let c1 = implied_cdf(&e1, &s, x, Method::Analytic).unwrap();
        let c100 = implied_cdf(&e100, &s, x, Method::Analytic).unwrap();
        assert!((c1 - c100).abs() < 1e-12);
        let p1 = implied_pdf(&e1, &s, x, Method::FiniteDifference).unwrap();
        let p100 = implied_pdf(&e100, &s, x, Method::FiniteDifference).unwrap();
        assert!((p1 - p100).abs() < 1e-6);
    }
}

#[test]
fn slope_ordering() {
    let env = example_env();
    let slopes = [0.0, -0.3, -0.6];
    let mut last_cdf = f64::INFINITY;
    let mut last_spread = f64::INFINITY;
    for b in slopes {
        let s = skew(0.3, b, 0.0);
        assert!(plausibility_check(&env, &s, (0.5, 1.3), 81).unwrap().is_plausible(), "b={b}");
        let cdf = implied_cdf(&env, &s, 0.8, Method::Analytic).unwrap();
        let spread = smile_put_price(&env, &s, 0.85).unwrap() - smile_put_price(&env, &s, 0.80).unwrap();
        assert!(cdf < last_cdf, "b={b}");
        assert!(spread < last_spread, "b={b}");
        last_cdf = cdf;
        last_spread = spread;
    }
}

#[test]
fn curvature_focusing() {
    let env = example_env();
    let mut last = 0.0;
    for c in [0.0, 0.5, 1.0] {
        let pdf = implied_pdf(&env, &skew(0.3, 0.0, c), 1.0, Method::Analytic).unwrap();
        assert!(pdf > last, "c={c}");
        last = pdf;
    }
}

#[test]
fn level_shift_widens() {
    let env = example_env();
    let xs = grid(0.2, 3.0, 561);
    let narrow = density_on_axis(&env, &flat(0.2), &xs, Method::Analytic).unwrap();
    let wide = density_on_axis(&env, &flat(0.3), &xs, Method::Analytic).unwrap();
    let peak = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    assert!(peak(&wide.pdf) < peak(&narrow.pdf));
    // both tails fatter
    assert!(implied_pdf(&env, &flat(0.3), 0.5, Method::Analytic).unwrap() > implied_pdf(&env, &flat(0.2), 0.5, Method::Analytic).unwrap());
    assert!(implied_pdf(&env, &flat(0.3), 2.0, Method::Analytic).unwrap() > implied_pdf(&env, &flat(0.2), 2.0, Method::Analytic).unwrap());
    let mw = distribution_moments(&wide).unwrap();
    let mn = distribution_moments(&narrow).unwrap();
    assert!(mw.variance > mn.variance);
}

#[test]
fn negative_slope_lowers_density_below_the_money() {
    let env = example_env();
    for x in [0.6, 0.7, 0.8, 0.9] {
        let steep = implied_pdf(&env, &skew(0.3, -0.5, 0.0), x, Method::Analytic).unwrap();
        let flat_pdf = implied_pdf(&env, &flat(0.3), x, Method::Analytic).unwrap();
        assert!(steep < flat_pdf, "x={x}");
    }
}

// Quadratic wings with c > 0 eventually push the CDF above one, which the
// put-side plausibility check does not see; the forward identity then fails.
#[test]
fn quadratic_wings_break_the_forward_identity() {
    let env = example_env();
    let s = skew(0.3, -0.05, 0.01);
    let (lo, hi) = default_domain(&env);
    assert!(plausibility_check(&env, &s, (lo, hi), 2001).unwrap().is_plausible());
    let c = density_curve(&env, &s, lo, hi, DEFAULT_CURVE_POINTS, Method::Analytic).unwrap();
    assert!(!c.all_ok());
    let m = distribution_moments(&c).unwrap();
    assert!(m.mean / env.forward() - 1.0 > 1e-2);
}

fn plausible_skew() -> impl Strategy<Value = SkewParams> {
    (0.15f64..0.5, -0.3f64..0.1, 0.0f64..0.6)
        .prop_map(|(a, b, c)| SkewParams::new(a, b, c).unwrap())
        .prop_filter("plausible on [0.5, 1.5]", |s| {
            plausibility_check(&example_env(), s, (0.45, 1.55), 45).unwrap().is_plausible()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn methods_agree(s in plausible_skew(), x in 0.5f64..1.5) {
        let env = example_env();
        let ca = implied_cdf(&env, &s, x, Method::Analytic).unwrap();
        let cf = implied_cdf(&env, &s, x, Method::FiniteDifference).unwrap();
        prop_assert!((ca - cf).abs() <= 1e-6, "cdf {} vs {}", ca, cf);
        let pa = implied_pdf(&env, &s, x, Method::Analytic).unwrap();
        let pf = implied_pdf(&env, &s, x, Method::FiniteDifference).unwrap();
        prop_assert!((pa - pf).abs() <= 1e-4, "pdf {} vs {}", pa, pf);
    }
}
