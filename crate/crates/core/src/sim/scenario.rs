//! Sampled futures: death age plus market, Treasury and inflation paths and
//! the account returns they imply.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collar::{CollarConfig, CollarSpec};
use crate::error::Result;
use crate::lifetable::LifeTable;
use crate::market::{MarketModel, PortfolioSpec, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub market: MarketModel,
    pub brokerage: PortfolioSpec,
    pub retirement: PortfolioSpec,
    #[serde(default)]
    pub collar: Option<CollarConfig>,
    /// Observed (Treasury, inflation) before the first year; drawn from the
    /// VAR steady state when absent.
    #[serde(default)]
    pub initial_rates: Option<(f64, f64)>,
}

impl ScenarioConfig {
    pub fn paper() -> Self {
        ScenarioConfig {
            market: MarketModel::paper(),
            brokerage: PortfolioSpec::conservative(),
            retirement: PortfolioSpec::balanced(),
            collar: None,
            initial_rates: None,
        }
    }

    pub fn with_collar(mut self, collar: CollarConfig) -> Self {
        self.collar = Some(collar);
        self
    }
}

/// Collars struck for one year, one per portfolio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YearCollars {
    pub brokerage: CollarSpec,
    pub retirement: CollarSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub seed: u64,
    pub start_age: u32,
    /// Last age lived.
    pub death_age: u32,
    /// VAR states `x_0 … x_L`; `x_0` is observed before the first year and
    /// year `k` (0-based) runs at `x_{k+1}`.
    pub states: Vec<Vec2>,
    pub market: Vec<f64>,
    pub treasury: Vec<f64>,
    pub inflation: Vec<f64>,
    /// Gross real returns per year.
    pub returns_brokerage: Vec<f64>,
    pub returns_ira: Vec<f64>,
    pub returns_roth: Vec<f64>,
    #[serde(default)]
    pub collars: Vec<YearCollars>,
}

impl Scenario {
    pub fn years(&self) -> usize {
        self.market.len()
    }
}

/// Per-scenario generator: ChaCha8 keyed by `base_seed`, stream `id`. Draw
/// order is the death age, the initial state, then for each year one market
/// return and one VAR noise pair, so paths do not depend on the collar or on
/// how many scenarios are generated.
pub fn scenario_rng(base_seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(id as u64);
    rng
}

pub fn generate_scenario(id: usize, cfg: &ScenarioConfig, table: &LifeTable, start_age: u32, base_seed: u64) -> Result<Scenario> {
    let mut rng = scenario_rng(base_seed, id);
    let death_age = table.sample_death_age(start_age, &mut rng)?;
    let years = (death_age - start_age + 1) as usize;
    let m = &cfg.market;
    let x0 = match cfg.initial_rates {
        Some((tsy, infl)) => m.state_of(tsy, infl),
        None => m.var.sample_steady_state(&mut rng)?,
    };
    let sigma = cfg.collar.and_then(|c| c.volatility).unwrap_or_else(|| m.gmm.std_dev());
    let mut s = Scenario {
        id,
        seed: base_seed,
        start_age,
        death_age,
        states: Vec::with_capacity(years + 1),
        market: Vec::with_capacity(years),
        treasury: Vec::with_capacity(years),
        inflation: Vec::with_capacity(years),
        returns_brokerage: Vec::with_capacity(years),
        returns_ira: Vec::with_capacity(years),
        returns_roth: Vec::with_capacity(years),
        collars: Vec::new(),
    };
    s.states.push(x0);
    let mut x = x0;
    for _ in 0..years {
        let market = m.gmm.sample(&mut rng);
        let prev = x;
        x = m.var.step(x, m.var.noise(&mut rng));
        let (tsy, infl) = m.rates_of(x);
        s.states.push(x);
        s.market.push(market);
        s.treasury.push(tsy);
        s.inflation.push(infl);
        let (rb, rr) = match cfg.collar {
            None => (cfg.brokerage.real_return(market, tsy, infl), cfg.retirement.real_return(market, tsy, infl)),
            Some(c) => {
                let expected_infl = m.rates_of(m.var.forecast(prev, 1)).1;
                let yc = YearCollars {
                    brokerage: CollarSpec::strike(c.rule, cfg.brokerage.stock_weight, tsy, expected_infl, sigma)?,
                    retirement: CollarSpec::strike(c.rule, cfg.retirement.stock_weight, tsy, expected_infl, sigma)?,
                };
                s.collars.push(yc);
                (yc.brokerage.real_return(market, tsy, infl), yc.retirement.real_return(market, tsy, infl))
            }
        };
        s.returns_brokerage.push(1.0 + rb);
        s.returns_ira.push(1.0 + rr);
        s.returns_roth.push(1.0 + rr);
    }
    Ok(s)
}

pub fn generate_scenarios(n: usize, cfg: &ScenarioConfig, table: &LifeTable, start_age: u32, base_seed: u64) -> Result<Vec<Scenario>> {
    (0..n).map(|id| generate_scenario(id, cfg, table, start_age, base_seed)).collect()
}

/// One simulated year of the three drivers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketYear {
    pub market: f64,
    pub treasury: f64,
    pub inflation: f64,
}

/// Paths of `years` simulated years following a fixed initial observation,
/// drawn in the same order as scenarios (market return, then VAR noise).
pub fn market_paths(model: &MarketModel, initial: (f64, f64), years: usize, paths: usize, base_seed: u64) -> Vec<Vec<MarketYear>> {
    (0..paths)
        .map(|id| {
            let mut rng = scenario_rng(base_seed, id);
            let mut x = model.state_of(initial.0, initial.1);
            (0..years)
                .map(|_| {
                    let market = model.gmm.sample(&mut rng);
                    x = model.var.step(x, model.var.noise(&mut rng));
                    let (treasury, inflation) = model.rates_of(x);
                    MarketYear { market, treasury, inflation }
                })
                .collect()
        })
        .collect()
}
