//! Run configuration: a TOML document naming a profile, data files and
//! simulation settings. Relative paths resolve against the document's folder.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use retire_core::collar::CollarConfig;
use retire_core::lifetable::LifeTable;
use retire_core::market::MarketModel;
use retire_core::profile::{FixedReturns, ForecastMode, Profile};
use retire_core::sim::ScenarioConfig;
use retire_core::tax::RmdSchedule;

use crate::error::{AppError, AppResult};
use crate::io;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicySelection {
    #[default]
    Both,
    Mpc,
    Benchmark,
}

/// Where the retiree comes from plus the knobs most often changed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    /// `upper` or `lower`.
    pub preset: Option<String>,
    /// A full profile document.
    pub file: Option<PathBuf>,
    pub target_consumption: Option<f64>,
    pub shortfall_weight: Option<f64>,
    pub basis_ratio: Option<f64>,
    pub forecast: Option<ForecastMode>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Life table CSV; the built-in table for the profile's sex when absent.
    pub lifetable: Option<PathBuf>,
    pub rmd: Option<PathBuf>,
    /// Overrides the profile's tax schedule.
    pub tax: Option<PathBuf>,
    /// Market model preset (as written by `retire fit`).
    pub market: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub policy: PolicySelection,
    #[serde(default = "default_scenarios")]
    pub scenarios: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads for simulation; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub collar: Option<CollarConfig>,
    /// Observed (Treasury, inflation) before the first year; the VAR steady
    /// state is sampled when absent.
    #[serde(default)]
    pub initial_rates: Option<(f64, f64)>,
}

fn default_scenarios() -> usize {
    1_000
}
fn default_seed() -> u64 {
    42
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: ProfileSection { preset: Some("upper".into()), ..Default::default() },
            data: DataSection::default(),
            policy: PolicySelection::Both,
            scenarios: default_scenarios(),
            seed: default_seed(),
            workers: 0,
            output_dir: default_output(),
            collar: None,
            initial_rates: None,
        }
    }
}

/// Everything a run needs, loaded and checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub profile: Profile,
    pub table: LifeTable,
    pub rmd: RmdSchedule,
    pub scenario: ScenarioConfig,
    pub target: f64,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> AppResult<Self> {
        let mut c: RunConfig = io::read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.rebase(base);
        Ok(c)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.profile.file);
        fix(&mut self.data.lifetable);
        fix(&mut self.data.rmd);
        fix(&mut self.data.tax);
        fix(&mut self.data.market);
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn resolve(&self) -> AppResult<Resolved> {
        if self.scenarios == 0 {
            return Err(AppError::Config("scenarios must be at least 1".into()));
        }
        let mut profile = match (&self.profile.preset, &self.profile.file) {
            (Some(_), Some(_)) => return Err(AppError::Config("profile: give either preset or file, not both".into())),
            (Some(name), None) => Profile::preset(name).ok_or_else(|| AppError::Config(format!("unknown profile preset '{name}'")))?,
            (None, Some(file)) => io::read_toml(file)?,
            (None, None) => Profile::upper_middle(),
        };
        let p = &self.profile;
        if let Some(v) = p.target_consumption {
            profile.target_consumption = Some(v);
        }
        if let Some(v) = p.shortfall_weight {
            profile.shortfall_weight = v;
        }
        if let Some(v) = p.basis_ratio {
            profile.basis_ratio = v;
        }
        if let Some(tax) = &self.data.tax {
            profile.tax = io::read_tax_schedule(tax)?;
        }
        match p.forecast {
            Some(f) => profile.forecast = f,
            // Collared portfolios earn less on average; plan with their means.
            None if self.collar.is_some() && profile.forecast == ForecastMode::Fixed(FixedReturns::historical()) => {
                profile.forecast = ForecastMode::Fixed(FixedReturns::collared())
            }
            None => {}
        }
        profile.validate().map_err(|e| AppError::Config(format!("profile: {e}")))?;

        let table = match &self.data.lifetable {
            Some(path) => io::read_lifetable_csv(path, profile.sex)?,
            None => LifeTable::synthetic(profile.sex),
        };
        table.expected_remaining(profile.start_age).map_err(|e| AppError::Config(format!("life table: {e}")))?;
        let rmd = match &self.data.rmd {
            Some(path) => io::read_rmd_csv(path)?,
            None => RmdSchedule::uniform_lifetime(),
        };
        let market = match &self.data.market {
            Some(path) => io::read_market_model(path)?,
            None => MarketModel::paper(),
        };
        let mut scenario = ScenarioConfig::paper();
        scenario.market = market;
        scenario.brokerage.stock_weight = profile.brokerage_stock_weight;
        scenario.retirement.stock_weight = profile.retirement_stock_weight;
        scenario.collar = self.collar;
        scenario.initial_rates = self.initial_rates;
        let target = profile.consumption_target();
        Ok(Resolved { profile, table, rmd, scenario, target, config: self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let c: RunConfig = toml::from_str("scenarios = 5\n[profile]\npreset = \"lower\"\n").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.target, 20_100.0);
        assert_eq!(c.seed, 42);
    }

    #[test]
    fn collar_switches_the_default_forecast() {
        let c: RunConfig = toml::from_str("[collar]\nrule = { mode = \"fixed\", floor = -0.075 }\n").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.profile.forecast, ForecastMode::Fixed(FixedReturns::collared()));
        assert!(r.scenario.collar.is_some());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(toml::from_str::<RunConfig>("scenarios = 5\nbogus = 1\n").is_err());
        let c: RunConfig = toml::from_str("scenarios = 0\n").unwrap();
        assert!(matches!(c.resolve(), Err(AppError::Config(_))));
        let c: RunConfig = toml::from_str("[profile]\npreset = \"nobody\"\n").unwrap();
        assert!(c.resolve().is_err());
        let c: RunConfig = toml::from_str("[profile]\nbasis_ratio = -1.0\n").unwrap();
        assert!(c.resolve().is_err());
    }
}
