use jumpcal::benchmarks::{heston_call, McSettings};
use jumpcal::evalkit::{bucket_report, dm_test, mae, mse, Sample};
use jumpcal::market_data::{filter_with, FilterRule};
use jumpcal::synthetic::{generate_prices, heston_testing_grid, heston_training_grid, svcj_grids, Generator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn light_svcj(paths: usize) -> (jumpcal::synthetic::GridSpec, jumpcal::synthetic::GridSpec) {
    let (mut a, mut b) = svcj_grids();
    for g in [&mut a, &mut b] {
        if let Generator::Svcj { mc, .. } = &mut g.generator {
            *mc = McSettings { paths, ..*mc };
        }
    }
    (a, b)
}

#[test]
fn heston_quote_respects_the_lower_bound() {
    let quotes = generate_prices(&heston_training_grid(), 0).unwrap();
    let q = quotes
        .iter()
        .find(|q| q.strike == 60.0 && (q.maturity - 1.0).abs() < 1e-12)
        .unwrap();
    let bound = 100.0 - 60.0 * (-0.025f64).exp();
    assert!((bound - 41.48).abs() < 5e-3);
    assert!(q.price >= bound, "{}", q.price);
}

#[test]
fn generation_is_deterministic() {
    let a = generate_prices(&heston_testing_grid(), 1).unwrap();
    let b = generate_prices(&heston_testing_grid(), 1).unwrap();
    assert_eq!(a, b);
    let (tr, _) = light_svcj(4000);
    assert_eq!(generate_prices(&tr, 3).unwrap(), generate_prices(&tr, 3).unwrap());
}

#[test]
fn shared_svcj_points_agree_across_grids() {
    let (tr, te) = light_svcj(4000);
    let a = generate_prices(&tr, 11).unwrap();
    let b = generate_prices(&te, 11).unwrap();
    for q in &a {
        let m = b
            .iter()
            .find(|p| p.strike == q.strike && (p.maturity - q.maturity).abs() < 1e-12)
            .unwrap();
        assert_eq!(m.price, q.price);
    }
}

#[test]
fn svcj_prices_dominate_heston_at_the_money() {
    let (_, te) = light_svcj(200_000);
    let sv = generate_prices(&te, 7).unwrap();
    let he = generate_prices(&heston_testing_grid(), 7).unwrap();
    for (s, h) in sv.iter().zip(&he).filter(|(s, _)| s.strike == 100.0) {
        let se = s.std_error.unwrap();
        assert!(
            s.price >= h.price - 3.0 * se,
            "T={}: {} vs {} (se {se})",
            s.maturity,
            s.price,
            h.price
        );
    }
}

#[test]
fn generated_quotes_pass_liquidity_and_arbitrage_screens() {
    // the moneyness screen is left out: strikes 60 and 140 sit outside it by construction
    let rules = [
        FilterRule::NoActivity,
        FilterRule::WideQuote,
        FilterRule::Expiring,
        FilterRule::LowerBound,
    ];
    let he = generate_prices(&heston_testing_grid(), 0).unwrap();
    assert_eq!(filter_with(&he, &rules), he);
    let (_, te) = light_svcj(50_000);
    let sv = generate_prices(&te, 0).unwrap();
    assert_eq!(filter_with(&sv, &rules[..3]), sv);
}

#[test]
fn heston_grid_matches_direct_pricing_at_the_drift() {
    let quotes = generate_prices(&heston_training_grid(), 0).unwrap();
    let Generator::Heston(p) = heston_training_grid().generator else {
        unreachable!()
    };
    for q in quotes.iter().step_by(7) {
        let direct = ((p.mu - 0.025) * q.maturity).exp() * heston_call(100.0, q.strike, p.mu, q.maturity, &p).unwrap();
        assert!((direct - q.price).abs() < 1e-12);
    }
}

#[test]
fn dm_size_under_the_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let reps = 1000;
    let mut accept = 0;
    for _ in 0..reps {
        let d: Vec<f64> = (0..500).map(|_| rng.sample(StandardNormal)).collect();
        let a: Vec<f64> = d.iter().map(|x: &f64| x.max(0.0).sqrt()).collect();
        let b: Vec<f64> = d.iter().map(|x: &f64| (-x).max(0.0).sqrt()).collect();
        if dm_test(&a, &b).unwrap().statistic.abs() < 1.96 {
            accept += 1;
        }
    }
    let rate = accept as f64 / reps as f64;
    assert!((0.93..=0.97).contains(&rate), "{rate}");
}

#[test]
fn doubled_errors_favour_the_second_model() {
    let b: Vec<f64> = (1..=30)
        .map(|i| 0.1 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let a: Vec<f64> = b.iter().map(|x| 2.0 * x).collect();
    assert!(dm_test(&a, &b).unwrap().statistic > 0.0);
}

#[test]
fn report_round_trips_through_json() {
    let quotes = generate_prices(&heston_testing_grid(), 0).unwrap();
    let pred: Vec<f64> = quotes.iter().map(|q| q.price * 1.01 + 0.02).collect();
    let r = bucket_report(&quotes, &pred, "toy", Sample::Out).unwrap();
    assert!(r.recompute_gap() <= 1e-12);
    assert_eq!(r.buckets.iter().map(|b| b.count).sum::<usize>(), 170);
    let mut buf = Vec::new();
    r.write_json(&mut buf).unwrap();
    let back: jumpcal::evalkit::PricingReport = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, r);
}

fn aligned() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (10usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0..50.0f64, n),
            prop::collection::vec(-50.0..50.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn dm_is_antisymmetric((a, b) in aligned()) {
        match (dm_test(&a, &b), dm_test(&b, &a)) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x.statistic, -y.statistic);
                prop_assert_eq!(x.p_value, y.p_value);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn mse_dominates_squared_mae((o, p) in aligned()) {
        let (m1, m2) = (mae(&o, &p).unwrap(), mse(&o, &p).unwrap());
        prop_assert!(m2 >= m1 * m1 * (1.0 - 1e-12));
    }
}
