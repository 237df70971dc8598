use proptest::prelude::*;
use retire_core::collar::*;
use retire_core::lifetable::{LifeTable, Sex};
use retire_core::sim::{generate_scenarios, ScenarioConfig};

/// Put–call parity, checked independently of the cap search.
fn parity_gap(spot: f64, strike: f64, r_f: f64, sigma: f64) -> f64 {
    let c = black_scholes_price(OptionKind::Call, spot, strike, r_f, sigma, 1.0);
    let p = black_scholes_price(OptionKind::Put, spot, strike, r_f, sigma, 1.0);
    c - p - (spot - strike * (-r_f).exp())
}

proptest! {
    #[test]
    fn parity_holds(spot in 0.5f64..2.0, k in 0.5f64..2.0, r_f in -0.01f64..0.12, sigma in 0.02f64..0.6) {
        prop_assert!(parity_gap(spot, k, r_f, sigma).abs() < 1e-12);
    }

    #[test]
    fn cap_is_self_financing(floor in -0.3f64..0.0, r_f in 0.0f64..0.10, sigma in 0.05f64..0.4) {
        let cap = solve_cap(floor, 1.0, r_f, sigma).unwrap();
        prop_assert!(cap > floor);
        prop_assert!(leg_mismatch(floor, cap, r_f, sigma).abs() < 1e-8);
    }

    #[test]
    fn clip_bounds(market in -0.8f64..0.8, floor in -0.3f64..0.0, width in 0.01f64..0.5, w in 0.0f64..1.0,
                   t in 0.0f64..0.1, i in -0.02f64..0.1) {
        let cap = floor + width;
        let r = collared_return(market, floor, cap, w, t, i);
        prop_assert!(r >= w * floor + (1.0 - w) * t - i - 1e-15);
        prop_assert!(r <= w * cap + (1.0 - w) * t - i + 1e-15);
        if market > floor && market < cap {
            prop_assert!((r - (w * market + (1.0 - w) * t - i)).abs() < 1e-15);
        }
    }

    #[test]
    fn floor_guarantee(r_min in -0.1f64..0.0, w in 0.2f64..1.0, t in 0.0f64..0.08, i in 0.0f64..0.06, market in -0.9f64..0.0) {
        let f = collar_floor(r_min, w, t, i);
        let r = collared_return(market, f, f64::INFINITY, w, t, i);
        // The floor is capped at the risk-free rate, which can only raise it.
        prop_assert!(r >= r_min - 1e-12 || f == t);
    }
}

#[test]
fn collared_balanced_mean_and_legs() {
    let cfg = ScenarioConfig::paper().with_collar(CollarConfig::fixed(-0.075));
    let table = LifeTable::synthetic(Sex::Female);
    let scenarios = generate_scenarios(1_000, &cfg, &table, 65, 9).unwrap();
    let mut sum = 0.0;
    let mut n = 0.0;
    for s in &scenarios {
        for (k, c) in s.collars.iter().enumerate() {
            assert!(c.brokerage.mismatch().abs() < 1e-8 && c.retirement.mismatch().abs() < 1e-8);
            sum += s.returns_ira[k] - 1.0;
            n += 1.0;
        }
    }
    let mean = sum / n;
    assert!((mean - 0.054).abs() <= 0.005, "collared 60/40 mean {mean}");
}
