use proptest::prelude::*;
use retire_core::lifetable::{LifeTable, Sex};
use retire_core::planner::{build_lp, solve_plan, verify_plan, PlanInputs, DEFAULT_TIGHTNESS_WEIGHT};
use retire_core::policy::{plan_inputs, PolicyContext, RetireeState, ReturnForecast};
use retire_core::profile::{FixedReturns, Profile};
use retire_core::tax::{RmdSchedule, TaxSchedule};
use retire_core::math::pos;
use std::time::Instant;

fn upper_inputs(horizon_end: Option<u32>, start_age: u32) -> PlanInputs {
    let p = Profile::upper_middle();
    let table = LifeTable::synthetic(Sex::Female);
    let rmd = RmdSchedule::uniform_lifetime();
    let mut ctx = PolicyContext::new(&p, &table, &rmd);
    ctx.fixed_end_age = horizon_end;
    let s = RetireeState::new(start_age, p.initial_brokerage, p.initial_ira, p.initial_roth, p.basis_ratio);
    plan_inputs(&s, &ctx, &ReturnForecast::Fixed(FixedReturns::historical())).unwrap()
}

#[test]
fn upper_profile_plan_shape_and_speed() {
    let inputs = upper_inputs(None, 65);
    assert_eq!(inputs.horizon, 30);
    let t0 = Instant::now();
    let plan = solve_plan(&inputs).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("T=30 solve {:.4}s, iterations {}", dt, plan.diagnostics.iterations);
    println!("c={:.2} q={:.2}", plan.consumption, plan.bequest);
    for t in 0..12 {
        println!(
            "age {} B={:.0} I={:.0} R={:.0} b={:.0} ic={:.0} iw={:.0} rw={:.0} tau={:.0}",
            65 + t, plan.brokerage[t], plan.ira[t], plan.roth[t], plan.b[t], plan.ic[t], plan.iw[t], plan.rw[t], plan.tax[t]
        );
    }
    assert!(dt < 0.5);
    assert!((plan.consumption - 58_400.0).abs() < 1e-4);
    assert!(verify_plan(&inputs, &plan).max() <= 1e-6);
    assert!(plan.ic[0] > 0.0);
    assert!(plan.ic[8..].iter().all(|&x| x < 1.0));
}

#[test]
fn size_at_forty_five_years() {
    let inputs = upper_inputs(Some(109), 65);
    assert_eq!(inputs.horizon, 45);
    let built = build_lp(&inputs).unwrap();
    let s = built.size;
    assert!((585..=645).contains(&s.variables), "{s:?}");
    let t0 = Instant::now();
    let plan = solve_plan(&inputs).unwrap();
    println!("T=45 {s:?} solve {:.4}s", t0.elapsed().as_secs_f64());
    assert!(verify_plan(&inputs, &plan).max() <= 1e-6);
}

fn random_inputs() -> impl Strategy<Value = PlanInputs> {
    (1usize..8).prop_flat_map(|t| {
        (
            (0.0..1e6f64, 0.0..1e6f64, 0.0..1e6f64, 0.0..1.5f64),
            proptest::collection::vec((0.95..1.10f64, 0.95..1.10f64, 0.95..1.10f64), t),
            proptest::collection::vec((0.0..5e4f64, 0.0..8e4f64, -5e3..2e4f64, 0.0..0.1f64), t),
            (0.0..1e5f64, prop::bool::ANY, 0.0..8e3f64),
        )
            .prop_map(move |(bal, ret, inc, (target, gains, dmax))| PlanInputs {
                horizon: t,
                start_age: 65,
                initial_brokerage: bal.0,
                initial_ira: bal.1,
                initial_roth: bal.2,
                basis_ratio: bal.3,
                returns_brokerage: ret.iter().map(|r| r.0).collect(),
                returns_ira: ret.iter().map(|r| r.1).collect(),
                returns_roth: ret.iter().map(|r| r.2).collect(),
                earned_income: inc.iter().map(|x| x.0).collect(),
                additional_income: inc.iter().map(|x| x.1).collect(),
                liabilities: inc.iter().map(|x| x.2).collect(),
                rmd_fractions: inc.iter().map(|x| x.3).collect(),
                tax_schedule: TaxSchedule::us_2024_single(if gains { 0.15 } else { 0.0 }),
                deposit_limit: dmax,
                target_consumption: target,
                shortfall_weight: 500.0,
                tightness_weight: DEFAULT_TIGHTNESS_WEIGHT,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn relaxation_is_tight(inputs in random_inputs()) {
        let plan = match solve_plan(&inputs) {
            Ok(p) => p,
            Err(retire_core::Error::Infeasible { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let zeta = inputs.gains_coefficient();
        for t in 0..inputs.horizon {
            let exact = inputs.tax_schedule.income_tax(plan.taxable_income(&inputs, t)) + zeta * pos(plan.b[t]);
            prop_assert!((plan.tax[t] - exact).abs() <= 1e-6 * (1.0 + plan.tax[t]), "year {t}: {} vs {exact}", plan.tax[t]);
        }
        let v = verify_plan(&inputs, &plan);
        prop_assert!(v.max() <= 1e-6, "{v:?}");
    }

    #[test]
    fn more_brokerage_never_hurts(inputs in random_inputs(), extra in 0.0..2e5f64) {
        let Ok(base) = solve_plan(&inputs) else { return Ok(()) };
        let mut richer = inputs.clone();
        richer.initial_brokerage += extra;
        let more = solve_plan(&richer).unwrap();
        prop_assert!(more.objective_value >= base.objective_value - 1e-6 * (1.0 + base.objective_value.abs()));
    }

    #[test]
    fn consumption_reaches_an_affordable_target(mut inputs in random_inputs()) {
        inputs.target_consumption = 1_000.0;
        inputs.liabilities.iter_mut().for_each(|l| *l = 0.0);
        inputs.initial_roth += 1e5;
        let plan = solve_plan(&inputs).unwrap();
        prop_assert!(plan.consumption >= 1_000.0 - 1e-4);
        for t in 0..inputs.horizon {
            prop_assert!(plan.id[t] + plan.rd[t] <= inputs.deposit_limit.min(inputs.earned_income[t]) + 1e-9);
            prop_assert!((plan.ic[t] - plan.rc[t]).abs() <= 1e-6);
        }
    }
}
