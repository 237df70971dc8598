//! Plan solving and paired Monte Carlo runs on a worker pool.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use retire_core::planner::{solve_plan, Plan, PlanInputs};
use retire_core::policy::{plan_inputs, PolicyContext, RetireeState, ReturnForecast};
use retire_core::profile::ForecastMode;
use retire_core::sim::{aggregate, generate_scenario, run_trajectory, AgeBands, PairedMetrics, PolicyKind, Scenario, SimulationReport};

use crate::config::{PolicySelection, Resolved};
use crate::error::{AppError, AppResult};

pub fn context(r: &Resolved) -> PolicyContext<'_> {
    let mut ctx = PolicyContext::new(&r.profile, &r.table, &r.rmd);
    ctx.target = r.target;
    ctx
}

/// The plan the retiree would adopt today, with its inputs.
pub fn initial_plan(r: &Resolved) -> AppResult<(PlanInputs, Plan)> {
    let p = &r.profile;
    let state = RetireeState::new(p.start_age, p.initial_brokerage, p.initial_ira, p.initial_roth, p.basis_ratio);
    let forecast = match p.forecast {
        ForecastMode::Fixed(f) => ReturnForecast::Fixed(f),
        // The VAR forecast needs an observed state; at planning time use
        // its long-run mean.
        ForecastMode::Var => {
            let m = &r.scenario.market;
            let (tsy, infl) = m.rates_of(m.var.mean);
            let ret = |w: f64| 1.0 + w * m.gmm.mean() + (1.0 - w) * tsy - infl;
            ReturnForecast::Fixed(retire_core::profile::FixedReturns {
                brokerage: ret(p.brokerage_stock_weight),
                ira: ret(p.retirement_stock_weight),
                roth: ret(p.retirement_stock_weight),
            })
        }
    };
    let ctx = context(r);
    let inputs = plan_inputs(&state, &ctx, &forecast)?;
    let plan = solve_plan(&inputs)?;
    Ok((inputs, plan))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairedRun {
    pub mpc: Vec<SimulationReport>,
    pub benchmark: Vec<SimulationReport>,
    /// Present when both policies ran.
    pub metrics: Option<PairedMetrics>,
    pub mpc_bands: Option<AgeBands>,
    pub benchmark_bands: Option<AgeBands>,
    #[serde(skip)]
    pub scenarios: Vec<Scenario>,
    #[serde(skip)]
    pub elapsed: Duration,
}

pub fn pool(workers: usize) -> AppResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| AppError::Config(format!("worker pool: {e}")))
}

/// Runs the selected policies over `n` scenarios. Results do not depend on
/// the number of workers.
pub fn simulate(r: &Resolved, n: usize, seed: u64, pool: &rayon::ThreadPool) -> AppResult<PairedRun> {
    let t0 = Instant::now();
    let ctx = context(r);
    let start = r.profile.start_age;
    let sel = r.config.policy;
    let runs: Vec<(Scenario, Option<SimulationReport>, Option<SimulationReport>)> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|id| -> AppResult<_> {
                let s = generate_scenario(id, &r.scenario, &r.table, start, seed)?;
                let m = match sel {
                    PolicySelection::Benchmark => None,
                    _ => Some(run_trajectory(PolicyKind::Mpc, &s, &ctx, &r.scenario.market)?),
                };
                let b = match sel {
                    PolicySelection::Mpc => None,
                    _ => Some(run_trajectory(PolicyKind::Benchmark, &s, &ctx, &r.scenario.market)?),
                };
                Ok((s, m, b))
            })
            .collect::<AppResult<_>>()
    })?;
    let mut scenarios = Vec::with_capacity(n);
    let mut mpc = Vec::new();
    let mut benchmark = Vec::new();
    for (s, m, b) in runs {
        scenarios.push(s);
        mpc.extend(m);
        benchmark.extend(b);
    }
    let metrics = if sel == PolicySelection::Both { Some(aggregate(&mpc, &benchmark)?) } else { None };
    let bands = |v: &[SimulationReport]| (!v.is_empty()).then(|| AgeBands::of(v));
    Ok(PairedRun {
        mpc_bands: bands(&mpc),
        benchmark_bands: bands(&benchmark),
        mpc,
        benchmark,
        metrics,
        scenarios,
        elapsed: t0.elapsed(),
    })
}
