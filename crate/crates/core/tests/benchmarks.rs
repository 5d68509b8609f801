use chrono::NaiveDate;
use jumpcal::benchmarks::quadrature::{adaptive, Rule};
use jumpcal::benchmarks::{
    bs_call, calibrate_parametric, heston_call, svcj_call, svcj_surface, CalibrationOptions, HestonParams, McSettings,
    NelderMead, ParametricKind, ParametricModel, SvcjParams,
};
use jumpcal::OptionQuote;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const STRIKES: [f64; 9] = [60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 130.0, 140.0];
const MATURITIES: [f64; 5] = [1.0 / 12.0, 2.0 / 12.0, 0.25, 0.5, 1.0];

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 2).unwrap()
}

/// Discounted payoff integrated against the lognormal density, split at
/// the kink.
fn lognormal_oracle(s: f64, k: f64, r: f64, t: f64, sigma: f64) -> f64 {
    let rule = Rule::new(20);
    let sd = sigma * t.sqrt();
    let m = (r - 0.5 * sigma * sigma) * t;
    let z_star = ((k / s).ln() - m) / sd;
    let mut f = |z: f64| {
        let st = s * (m + sd * z).exp();
        (st - k).max(0.0) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let (v, _) = adaptive(&rule, &mut f, z_star, z_star.max(0.0) + 12.0, 1e-13, 50).unwrap();
    (-r * t).exp() * v
}

/// Plain Euler on (S, V) with full truncation.
#[allow(clippy::too_many_arguments)]
fn heston_euler_mc(s0: f64, k: f64, r: f64, t: f64, p: &HestonParams, paths: usize, dt: f64, seed: u64) -> (f64, f64) {
    let steps = (t / dt).round() as usize;
    let dt = t / steps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = (1.0 - p.rho * p.rho).sqrt();
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..paths {
        let (mut s, mut v) = (s0, p.v0);
        for _ in 0..steps {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let vp = v.max(0.0);
            s += r * s * dt + vp.sqrt() * s * dt.sqrt() * z1;
            v += p.kappa * (p.theta - vp) * dt + p.sigma_v * vp.sqrt() * dt.sqrt() * (p.rho * z1 + root * z2);
        }
        let pay = (-r * t).exp() * (s - k).max(0.0);
        sum += pay;
        sq += pay * pay;
    }
    let n = paths as f64;
    let mean = sum / n;
    (mean, ((sq / n - mean * mean) / (n - 1.0)).sqrt())
}

#[test]
fn black_scholes_matches_lognormal_quadrature() {
    for &(s, k, r, t, sigma) in &[
        (100.0, 100.0, 0.0, 1.0, 0.2),
        (100.0, 80.0, 0.025, 0.5, 0.3),
        (100.0, 130.0, 0.05, 2.0, 0.15),
    ] {
        let bs = bs_call(s, k, r, t, sigma).unwrap();
        let q = lognormal_oracle(s, k, r, t, sigma);
        assert!((bs - q).abs() < 1e-8, "{bs} vs {q}");
    }
}

#[test]
fn heston_matches_euler_monte_carlo() {
    let p = HestonParams::baseline();
    let h = heston_call(100.0, 100.0, 0.025, 0.5, &p).unwrap();
    let (mc, se) = heston_euler_mc(100.0, 100.0, 0.025, 0.5, &p, 200_000, 1.0 / 250.0, 17);
    assert!((h - mc).abs() < 3.0 * se, "{h} vs {mc} +- {se}");
}

#[test]
fn svcj_without_jumps_is_heston() {
    let p = SvcjParams {
        lambda: 0.0,
        ..SvcjParams::baseline()
    };
    let mc = McSettings {
        paths: 200_000,
        seed: 5,
        ..McSettings::default()
    };
    for k in [80.0, 100.0, 120.0] {
        let r = svcj_call(100.0, k, 0.025, 0.5, &p, &mc).unwrap();
        let h = heston_call(100.0, k, 0.025, 0.5, &p.heston).unwrap();
        assert!((r.price - h).abs() < 3.0 * r.std_error, "K={k}: {r:?} vs {h}");
    }
}

#[test]
fn svcj_with_vanishing_jumps_is_heston() {
    let p = SvcjParams {
        mu_v: 1e-8,
        sigma_y: 1e-8,
        mu_y: 0.0,
        lambda: 0.5,
        ..SvcjParams::baseline()
    };
    let mc = McSettings {
        paths: 200_000,
        seed: 6,
        ..McSettings::default()
    };
    let r = svcj_call(100.0, 100.0, 0.025, 1.0, &p, &mc).unwrap();
    let h = heston_call(100.0, 100.0, 0.025, 1.0, &p.heston).unwrap();
    assert!((r.price - h).abs() < 3.0 * r.std_error, "{r:?} vs {h}");
}

#[test]
fn antithetic_sampling_shrinks_the_error() {
    // moderate jumps, so the mirrored diffusion shocks carry most of the variance
    let p = SvcjParams {
        mu_v: 0.05,
        mu_y: -0.05,
        sigma_y: 0.1,
        rho_j: 0.0,
        ..SvcjParams::baseline()
    };
    let plain = McSettings {
        paths: 40_000,
        seed: 9,
        ..McSettings::default()
    };
    let anti = McSettings {
        antithetic: true,
        ..plain
    };
    let a = svcj_call(100.0, 100.0, 0.025, 0.5, &p, &plain).unwrap();
    let b = svcj_call(100.0, 100.0, 0.025, 0.5, &p, &anti).unwrap();
    assert!(b.std_error < a.std_error, "{b:?} vs {a:?}");
}

#[test]
fn pricers_respect_no_arbitrage_bounds_and_strike_monotonicity() {
    let (s, r) = (100.0, 0.025);
    let heston = HestonParams::baseline();
    let svcj = SvcjParams::baseline();
    let mc = McSettings {
        paths: 50_000,
        seed: 2,
        ..McSettings::default()
    };
    let contracts: Vec<(f64, f64)> = MATURITIES
        .iter()
        .flat_map(|&t| (0..17).map(move |i| (t, 60.0 + 5.0 * i as f64)))
        .collect();
    let sv = svcj_surface(s, r, r, &contracts, &svcj, &mc).unwrap();
    for (i, &(t, k)) in contracts.iter().enumerate() {
        let lo = (s - k * (-r * t).exp()).max(0.0);
        for c in [
            bs_call(s, k, r, t, 0.25).unwrap(),
            heston_call(s, k, r, t, &heston).unwrap(),
        ] {
            assert!(c >= lo - 1e-12 && c <= s + 1e-12, "T={t} K={k}: {c}");
        }
        let m = sv[i];
        assert!(m.price >= lo - 3.0 * m.std_error && m.price <= s + 3.0 * m.std_error);
        if i + 1 < contracts.len() && contracts[i + 1].0 == t {
            assert!(sv[i + 1].price <= m.price);
            assert!(
                heston_call(s, contracts[i + 1].1, r, t, &heston).unwrap() < heston_call(s, k, r, t, &heston).unwrap()
            );
        }
    }
}

fn grid_quotes(price: impl Fn(f64, f64) -> f64) -> Vec<OptionQuote> {
    MATURITIES
        .iter()
        .flat_map(|&t| STRIKES.iter().map(move |&k| (t, k)))
        .map(|(t, k)| OptionQuote::new(day(), 100.0, k, t * 365.0, 0.025, price(t, k)))
        .collect()
}

#[test]
fn black_scholes_calibration_round_trip() {
    let quotes = grid_quotes(|t, k| bs_call(100.0, k, 0.025, t, 0.25).unwrap());
    let c = calibrate_parametric(ParametricKind::Bs, &quotes, &CalibrationOptions::default()).unwrap();
    match c.model {
        ParametricModel::Bs(p) => assert!((p.sigma - 0.25).abs() < 1e-3, "{p:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_quote_is_matched_exactly() {
    let q = vec![OptionQuote::new(day(), 100.0, 105.0, 91.25, 0.025, 3.1)];
    let c = calibrate_parametric(ParametricKind::Bs, &q, &CalibrationOptions::default()).unwrap();
    let p = c.model.prices(&q).unwrap()[0];
    assert!((p - 3.1).abs() < 1e-8, "{p}");
}

#[test]
fn heston_calibration_reaches_the_true_objective() {
    let truth = HestonParams::baseline();
    let quotes = grid_quotes(|t, k| heston_call(100.0, k, 0.025, t, &truth).unwrap());
    let at_truth: f64 = ParametricModel::Heston(truth)
        .prices(&quotes)
        .unwrap()
        .iter()
        .zip(&quotes)
        .map(|(p, q)| (p - q.price).powi(2))
        .sum();
    let c = calibrate_parametric(ParametricKind::Heston, &quotes, &CalibrationOptions::default()).unwrap();
    assert!(c.objective <= at_truth + 1e-6, "{} vs {at_truth}", c.objective);
}

#[test]
fn svcj_calibration_is_deterministic() {
    let quotes: Vec<_> = grid_quotes(|t, k| heston_call(100.0, k, 0.025, t, &HestonParams::baseline()).unwrap())
        .into_iter()
        .step_by(4)
        .collect();
    let opts = CalibrationOptions {
        restarts: 2,
        simplex: NelderMead {
            max_evals: 40,
            ..NelderMead::default()
        },
        svcj_mc: McSettings {
            paths: 500,
            steps_per_year: 52,
            ..McSettings::default()
        },
        ..CalibrationOptions::default()
    };
    let a = calibrate_parametric(ParametricKind::Svcj, &quotes, &opts).unwrap();
    let b = calibrate_parametric(ParametricKind::Svcj, &quotes, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.objective.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn black_scholes_within_bounds(
        s in 10.0..200.0f64, k in 10.0..200.0f64, r in 0.0..0.1f64, t in 0.01..3.0f64, sigma in 0.01..1.0f64
    ) {
        let c = bs_call(s, k, r, t, sigma).unwrap();
        prop_assert!(c >= (s - k * (-r * t).exp()).max(0.0) - 1e-12);
        prop_assert!(c <= s);
    }

    #[test]
    fn heston_within_bounds(
        k in 50.0..150.0f64, t in 0.05..2.0f64, rho in -0.9..0.9f64, sigma_v in 0.05..0.8f64
    ) {
        let p = HestonParams { rho, sigma_v, ..HestonParams::baseline() };
        let c = heston_call(100.0, k, 0.025, t, &p).unwrap();
        prop_assert!(c >= (100.0 - k * (-0.025 * t).exp()).max(0.0) - 1e-12);
        prop_assert!(c <= 100.0);
    }
}
