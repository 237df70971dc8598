//! Running one policy through one scenario, year by year until death.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::policy::{
    benchmark_step, bequest_at_death, mpc_step, settle_year, PolicyContext, RealizedYear, RetireeState, ReturnForecast,
    YearRecord,
};
use crate::profile::ForecastMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Mpc,
    Benchmark,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario_id: usize,
    pub policy: PolicyKind,
    pub death_age: u32,
    pub records: Vec<YearRecord>,
    pub bequest: f64,
    /// All three accounts empty at the end of some year.
    pub depleted: bool,
    pub shortfall_years: usize,
    pub fallback_years: usize,
    pub mean_consumption: f64,
    pub min_consumption: f64,
    pub total_tax: f64,
    /// |inflows − outflows − bequest| relative to the gross flows.
    pub conservation_error: f64,
}

/// Gross real returns the MPC plans with at the start of year `k`.
fn forecast_for(ctx: &PolicyContext, market: &MarketModel, scenario: &Scenario, k: usize, age: u32) -> Result<ReturnForecast> {
    let p = ctx.profile;
    match p.forecast {
        ForecastMode::Fixed(r) => Ok(ReturnForecast::Fixed(r)),
        ForecastMode::Var => {
            let t = ctx.horizon(age)?;
            let x = scenario.states[k];
            let m = market.gmm.mean();
            let mut out = (Vec::with_capacity(t), Vec::with_capacity(t), Vec::with_capacity(t));
            for h in 1..=t {
                let (tsy, infl) = market.rates_of(market.var.forecast(x, h));
                let rb = p.brokerage_stock_weight * m + (1.0 - p.brokerage_stock_weight) * tsy - infl;
                let rr = p.retirement_stock_weight * m + (1.0 - p.retirement_stock_weight) * tsy - infl;
                out.0.push(1.0 + rb);
                out.1.push(1.0 + rr);
                out.2.push(1.0 + rr);
            }
            Ok(ReturnForecast::Paths { brokerage: out.0, ira: out.1, roth: out.2 })
        }
    }
}

pub fn run_trajectory(policy: PolicyKind, scenario: &Scenario, ctx: &PolicyContext, market: &MarketModel) -> Result<SimulationReport> {
    let p = ctx.profile;
    if scenario.start_age != p.start_age {
        return Err(Error::invalid("scenario and profile start ages differ"));
    }
    let mut state = RetireeState::new(p.start_age, p.initial_brokerage, p.initial_ira, p.initial_roth, p.basis_ratio);
    let mut records = Vec::with_capacity(scenario.years());
    let mut depleted = false;
    for k in 0..scenario.years() {
        let age = state.age;
        let y = ctx.year_inputs(&state)?;
        let (action, fallback) = match policy {
            PolicyKind::Mpc => {
                let d = mpc_step(&state, ctx, &forecast_for(ctx, market, scenario, k, age)?)?;
                (d.action, d.fallback)
            }
            PolicyKind::Benchmark => (benchmark_step(&state, ctx.target, &y, &p.tax), false),
        };
        let realized = RealizedYear {
            rho_brokerage: scenario.returns_brokerage[k],
            rho_ira: scenario.returns_ira[k],
            rho_roth: scenario.returns_roth[k],
            inflation: scenario.inflation[k],
            earned_income: y.earned_income,
            additional_income: y.additional_income,
            liability: p.liability_at(age),
        };
        let (next, mut rec) = settle_year(&state, &action, &realized, &p.tax, y.kappa)
            .map_err(|e| Error::invalid(format!("scenario {} age {age}: {e}", scenario.id)))?;
        rec.fallback = fallback;
        if next.wealth() <= 0.0 {
            depleted = true;
        }
        records.push(rec);
        state = next;
    }
    let bequest = bequest_at_death(&state);
    Ok(summarize(policy, scenario, records, bequest, depleted, ctx.target))
}

fn summarize(policy: PolicyKind, scenario: &Scenario, records: Vec<YearRecord>, bequest: f64, depleted: bool, target: f64) -> SimulationReport {
    let n = records.len().max(1) as f64;
    let mean_consumption = records.iter().map(|r| r.consumption).sum::<f64>() / n;
    let min_consumption = records.iter().map(|r| r.consumption).fold(f64::INFINITY, f64::min);
    let total_tax = records.iter().map(|r| r.tax).sum();
    let shortfall_years = records.iter().filter(|r| r.consumption < target * (1.0 - 1e-6)).count();
    let fallback_years = records.iter().filter(|r| r.fallback).count();
    let w0 = records.first().map(|r| r.brokerage_start + r.ira_start + r.roth_start).unwrap_or(0.0);
    let mut inflow = w0;
    let mut outflow = bequest;
    let mut gross = w0.abs() + bequest.abs();
    for r in &records {
        inflow += r.earned_income + r.additional_income + r.investment_gain;
        outflow += r.consumption + r.tax + r.scheduled_liability;
        gross += r.earned_income.abs() + r.additional_income.abs() + r.investment_gain.abs();
        gross += r.consumption.abs() + r.tax.abs() + r.scheduled_liability.abs();
    }
    let conservation_error = (inflow - outflow).abs() / gross.max(1.0);
    SimulationReport {
        scenario_id: scenario.id,
        policy,
        death_age: scenario.death_age,
        records,
        bequest,
        depleted,
        shortfall_years,
        fallback_years,
        mean_consumption,
        min_consumption,
        total_tax,
        conservation_error,
    }
}
