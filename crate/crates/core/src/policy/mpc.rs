//! The yearly plan-and-act step: pose the planning LP from the current state
//! and forecasts, solve it, and keep the first year's decisions.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::benchmark::{benchmark_step, YearInputs};
use super::state::{RetireeState, YearlyAction};
use crate::error::{Error, Result};
use crate::lifetable::LifeTable;
use crate::lp::{InteriorPoint, SolverBackend, DEFAULT_TOLERANCE};
use crate::planner::{solve_plan_with, Plan, PlanInputs};
use crate::profile::{FixedReturns, Profile};
use crate::tax::RmdSchedule;

/// Forecast gross real returns for the coming years.
#[derive(Clone, Debug, PartialEq)]
pub enum ReturnForecast {
    Fixed(FixedReturns),
    /// One entry per year starting with the current one; must cover the
    /// planning horizon.
    Paths { brokerage: Vec<f64>, ira: Vec<f64>, roth: Vec<f64> },
}

impl ReturnForecast {
    fn take(&self, t: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        match self {
            ReturnForecast::Fixed(r) => Ok((alloc::vec![r.brokerage; t], alloc::vec![r.ira; t], alloc::vec![r.roth; t])),
            ReturnForecast::Paths { brokerage, ira, roth } => {
                if brokerage.len() < t || ira.len() < t || roth.len() < t {
                    return Err(Error::invalid("return forecast shorter than the planning horizon"));
                }
                Ok((brokerage[..t].to_vec(), ira[..t].to_vec(), roth[..t].to_vec()))
            }
        }
    }
}

/// Everything a policy needs besides the state.
pub struct PolicyContext<'a> {
    pub profile: &'a Profile,
    pub table: &'a LifeTable,
    pub rmd: &'a RmdSchedule,
    pub target: f64,
    /// Plan to this age (inclusive) instead of applying the horizon rule.
    pub fixed_end_age: Option<u32>,
    pub backend: &'a dyn SolverBackend,
    pub tolerance: f64,
}

impl<'a> PolicyContext<'a> {
    pub fn new(profile: &'a Profile, table: &'a LifeTable, rmd: &'a RmdSchedule) -> Self {
        static IPM: InteriorPoint = InteriorPoint { max_iterations: 200, polish: true, equilibrate: true };
        PolicyContext {
            profile,
            table,
            rmd,
            target: profile.consumption_target(),
            fixed_end_age: None,
            backend: &IPM,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn horizon(&self, age: u32) -> Result<usize> {
        match self.fixed_end_age {
            Some(end) => Ok((end.saturating_sub(age) as usize + 1).max(1)),
            None => self.table.planning_horizon(age, self.profile.horizon_factor, self.profile.max_age),
        }
    }

    pub fn year_inputs(&self, state: &RetireeState) -> Result<YearInputs> {
        let p = self.profile;
        Ok(YearInputs {
            earned_income: p.earned_at(state.age),
            additional_income: p.additional_at(state.age),
            liability: p.liability_at(state.age) + state.carried_liability,
            kappa: self.rmd.fraction(state.age)?,
        })
    }
}

/// The planning problem posed at `state`.
pub fn plan_inputs(state: &RetireeState, ctx: &PolicyContext, forecast: &ReturnForecast) -> Result<PlanInputs> {
    let p = ctx.profile;
    let t = ctx.horizon(state.age)?;
    let ages: Vec<u32> = (0..t as u32).map(|k| state.age + k).collect();
    let (rb, ri, rr) = forecast.take(t)?;
    let mut liabilities: Vec<f64> = ages.iter().map(|&a| p.liability_at(a)).collect();
    liabilities[0] += state.carried_liability;
    Ok(PlanInputs {
        horizon: t,
        start_age: state.age,
        initial_brokerage: state.brokerage,
        initial_ira: state.ira,
        initial_roth: state.roth,
        basis_ratio: state.basis.ratio().max(0.0),
        returns_brokerage: rb,
        returns_ira: ri,
        returns_roth: rr,
        earned_income: ages.iter().map(|&a| p.earned_at(a)).collect(),
        additional_income: ages.iter().map(|&a| p.additional_at(a)).collect(),
        liabilities,
        rmd_fractions: ages.iter().map(|&a| ctx.rmd.fraction(a)).collect::<Result<_>>()?,
        tax_schedule: p.tax.clone(),
        deposit_limit: p.deposit_limit,
        target_consumption: ctx.target,
        shortfall_weight: p.shortfall_weight,
        tightness_weight: p.tightness_weight,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcDecision {
    pub action: YearlyAction,
    pub horizon: usize,
    /// The plan did not solve and the benchmark mechanics were used instead.
    pub fallback: bool,
    #[serde(skip)]
    pub plan: Option<Plan>,
}

/// First-year actions of the plan, cleaned so they satisfy the hard rules
/// exactly: conversions match, the RMD is met, and nothing is overdrawn.
pub fn first_year_action(plan: &Plan, inputs: &PlanInputs) -> YearlyAction {
    let conv = 0.5 * (plan.ic[0] + plan.rc[0]);
    let rmd = inputs.rmd_fractions[0] * inputs.initial_ira;
    let mut a = YearlyAction {
        b: plan.b[0].min(inputs.initial_brokerage),
        ic: conv.max(0.0),
        id: plan.id[0].max(0.0),
        iw: plan.iw[0].max(rmd),
        rc: conv.max(0.0),
        rd: plan.rd[0].max(0.0),
        rw: plan.rw[0].max(0.0),
        consumption: plan.consumption.max(0.0),
        planned_tax: plan.tax[0],
    };
    let deposit_cap = inputs.deposit_limit.min(inputs.earned_income[0]).max(0.0);
    if a.id + a.rd > deposit_cap {
        let excess = a.id + a.rd - deposit_cap;
        let cut = excess.min(a.rd);
        a.rd -= cut;
        a.id -= excess - cut;
    }
    let over_i = a.i() - inputs.initial_ira;
    if over_i > 0.0 {
        a.ic -= over_i.min(a.ic);
        a.rc = a.ic;
    }
    let over_r = a.r() - inputs.initial_roth;
    if over_r > 0.0 {
        a.rw -= over_r.min(a.rw);
    }
    a
}

pub fn mpc_step(state: &RetireeState, ctx: &PolicyContext, forecast: &ReturnForecast) -> Result<MpcDecision> {
    if !state.alive {
        return Err(Error::invalid("retiree is not alive"));
    }
    if !(state.wealth().is_finite() && state.carried_liability.is_finite()) {
        return Err(Error::invalid("state balances must be finite"));
    }
    let inputs = plan_inputs(state, ctx, forecast)?;
    match solve_plan_with(&inputs, ctx.backend, ctx.tolerance) {
        Ok(plan) => Ok(MpcDecision {
            action: first_year_action(&plan, &inputs),
            horizon: inputs.horizon,
            fallback: false,
            plan: Some(plan),
        }),
        Err(Error::Infeasible { .. }) | Err(Error::Solver(_)) => {
            let y = ctx.year_inputs(state)?;
            Ok(MpcDecision {
                action: benchmark_step(state, ctx.target, &y, &ctx.profile.tax),
                horizon: inputs.horizon,
                fallback: true,
                plan: None,
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetable::Sex;
    use crate::tax::TaxSchedule;

    #[test]
    fn income_only_consumes_income() {
        let mut p = Profile::upper_middle();
        p.tax = TaxSchedule::zero();
        p.additional_income[0].from_age = 65;
        p.additional_income[0].amount = 30_000.0;
        p.liabilities = alloc::vec![crate::profile::ScheduledAmount { amount: 2_000.0, from_age: 65, to_age: None }];
        let table = LifeTable::synthetic(Sex::Female);
        let rmd = RmdSchedule::uniform_lifetime();
        let ctx = PolicyContext::new(&p, &table, &rmd);
        let s = RetireeState::new(65, 0.0, 0.0, 0.0, 1.0);
        let d = mpc_step(&s, &ctx, &ReturnForecast::Fixed(FixedReturns::historical())).unwrap();
        assert!(!d.fallback);
        assert!((d.action.consumption - 28_000.0).abs() < 1e-4);
        assert!(d.action.b.abs() < 1e-4 && d.action.iw.abs() < 1e-4 && d.action.rw.abs() < 1e-4);
    }

    #[test]
    fn rmd_is_met() {
        let p = Profile::upper_middle();
        let table = LifeTable::synthetic(Sex::Female);
        let rmd = RmdSchedule::uniform_lifetime();
        let ctx = PolicyContext::new(&p, &table, &rmd);
        let s = RetireeState::new(75, 0.0, 100_000.0, 0.0, 1.0);
        let d = mpc_step(&s, &ctx, &ReturnForecast::Fixed(FixedReturns::historical())).unwrap();
        assert!(d.action.iw >= 100_000.0 / 24.6 - 1e-9);
        assert!(d.action.iw >= 4_065.04);
    }

    #[test]
    fn unfundable_year_falls_back() {
        let mut p = Profile::lower_middle();
        p.liabilities = alloc::vec![crate::profile::ScheduledAmount { amount: 1e7, from_age: 66, to_age: Some(66) }];
        let table = LifeTable::synthetic(Sex::Male);
        let rmd = RmdSchedule::uniform_lifetime();
        let ctx = PolicyContext::new(&p, &table, &rmd);
        let s = RetireeState::new(65, 50_000.0, 100_000.0, 0.0, 1.0);
        let d = mpc_step(&s, &ctx, &ReturnForecast::Fixed(FixedReturns::historical())).unwrap();
        assert!(d.fallback);
        assert_eq!(d.action.consumption, 20_100.0);
    }
}
