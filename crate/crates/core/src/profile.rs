//! Retiree profiles: balances, income and liability schedules, objective
//! weights and forecast settings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifetable::Sex;
use crate::math::round_half_up;
use crate::tax::TaxSchedule;

/// A constant real amount paid every year for ages `from_age ..= to_age`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledAmount {
    pub amount: f64,
    pub from_age: u32,
    #[serde(default)]
    pub to_age: Option<u32>,
}

impl ScheduledAmount {
    pub fn at(&self, age: u32) -> f64 {
        if age >= self.from_age && self.to_age.is_none_or(|end| age <= end) {
            self.amount
        } else {
            0.0
        }
    }
}

fn total_at(items: &[ScheduledAmount], age: u32) -> f64 {
    items.iter().map(|s| s.at(age)).sum()
}

/// Gross real returns the planner assumes for every future year.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedReturns {
    pub brokerage: f64,
    pub ira: f64,
    pub roth: f64,
}

impl FixedReturns {
    /// Historical averages for 20/80 in the brokerage and 60/40 elsewhere.
    pub fn historical() -> Self {
        FixedReturns { brokerage: 1.032, ira: 1.055, roth: 1.055 }
    }

    /// The same portfolios with a self-financing collar on the stock leg.
    pub fn collared() -> Self {
        FixedReturns { brokerage: 1.034, ira: 1.054, roth: 1.054 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ForecastMode {
    Fixed(FixedReturns),
    /// Expected GMM return for stocks, VAR forecasts for Treasury and inflation.
    Var,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub sex: Sex,
    pub start_age: u32,
    pub initial_brokerage: f64,
    pub initial_ira: f64,
    pub initial_roth: f64,
    /// Brokerage basis over value at the start of retirement.
    #[serde(default = "one")]
    pub basis_ratio: f64,
    #[serde(default)]
    pub earned_income: Vec<ScheduledAmount>,
    #[serde(default)]
    pub additional_income: Vec<ScheduledAmount>,
    #[serde(default)]
    pub liabilities: Vec<ScheduledAmount>,
    /// Fixed target; derived from the benchmark rule when absent.
    #[serde(default)]
    pub target_consumption: Option<f64>,
    pub shortfall_weight: f64,
    #[serde(default = "default_tightness")]
    pub tightness_weight: f64,
    pub tax: TaxSchedule,
    pub deposit_limit: f64,
    #[serde(default = "default_stock_brokerage")]
    pub brokerage_stock_weight: f64,
    #[serde(default = "default_stock_retirement")]
    pub retirement_stock_weight: f64,
    pub forecast: ForecastMode,
    #[serde(default = "default_horizon_factor")]
    pub horizon_factor: f64,
    #[serde(default = "default_max_age")]
    pub max_age: u32,
    #[serde(default = "default_rate")]
    pub benchmark_rate: f64,
    #[serde(default = "default_projection_age")]
    pub benchmark_projection_age: u32,
}

fn one() -> f64 {
    1.0
}
fn default_tightness() -> f64 {
    crate::planner::DEFAULT_TIGHTNESS_WEIGHT
}
fn default_stock_brokerage() -> f64 {
    0.2
}
fn default_stock_retirement() -> f64 {
    0.6
}
fn default_horizon_factor() -> f64 {
    1.5
}
fn default_max_age() -> u32 {
    120
}
fn default_rate() -> f64 {
    0.0375
}
fn default_projection_age() -> u32 {
    85
}

impl Profile {
    /// Female, 65, $800k across the three accounts, Social Security of
    /// $3,938 a month from 70.
    pub fn upper_middle() -> Self {
        Profile {
            name: "upper-middle".into(),
            sex: Sex::Female,
            start_age: 65,
            initial_brokerage: 200_000.0,
            initial_ira: 400_000.0,
            initial_roth: 200_000.0,
            basis_ratio: 1.0,
            earned_income: vec![],
            additional_income: vec![ScheduledAmount { amount: 3_938.0 * 12.0, from_age: 70, to_age: None }],
            liabilities: vec![],
            target_consumption: None,
            shortfall_weight: 500.0,
            tightness_weight: default_tightness(),
            tax: TaxSchedule::us_2024_single(0.15),
            deposit_limit: 8_000.0,
            brokerage_stock_weight: 0.2,
            retirement_stock_weight: 0.6,
            forecast: ForecastMode::Fixed(FixedReturns::historical()),
            horizon_factor: 1.5,
            max_age: 120,
            benchmark_rate: 0.0375,
            benchmark_projection_age: 85,
        }
    }

    /// Male, 65, $150k, Social Security of $2,013 a month from 70.
    pub fn lower_middle() -> Self {
        Profile {
            name: "lower-middle".into(),
            sex: Sex::Male,
            initial_brokerage: 50_000.0,
            initial_ira: 100_000.0,
            initial_roth: 0.0,
            additional_income: vec![ScheduledAmount { amount: 2_013.0 * 12.0, from_age: 70, to_age: None }],
            tax: TaxSchedule::us_2024_single(0.0),
            ..Profile::upper_middle()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "upper" | "upper-middle" => Some(Self::upper_middle()),
            "lower" | "lower-middle" => Some(Self::lower_middle()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("initial_brokerage", self.initial_brokerage),
            ("initial_ira", self.initial_ira),
            ("initial_roth", self.initial_roth),
            ("basis_ratio", self.basis_ratio),
            ("deposit_limit", self.deposit_limit),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        if let Some(c) = self.target_consumption {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::invalid("target_consumption must be finite and nonnegative"));
            }
        }
        if !(self.shortfall_weight > 0.0 && self.shortfall_weight.is_finite()) {
            return Err(Error::invalid("shortfall_weight must be positive"));
        }
        for (name, w) in [("brokerage_stock_weight", self.brokerage_stock_weight), ("retirement_stock_weight", self.retirement_stock_weight)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.horizon_factor >= 1.0 && self.horizon_factor.is_finite()) {
            return Err(Error::invalid("horizon_factor must be at least 1"));
        }
        if self.max_age <= self.start_age {
            return Err(Error::invalid("max_age must exceed start_age"));
        }
        if !(self.benchmark_rate > 0.0 && self.benchmark_rate < 1.0) {
            return Err(Error::invalid("benchmark_rate must lie in (0, 1)"));
        }
        for s in self.earned_income.iter().chain(&self.additional_income).chain(&self.liabilities) {
            if !s.amount.is_finite() || s.to_age.is_some_and(|end| end < s.from_age) {
                return Err(Error::invalid("scheduled amounts need a finite amount and to_age ≥ from_age"));
            }
        }
        if self.earned_income.iter().any(|s| s.amount < 0.0) {
            return Err(Error::invalid("earned income must be nonnegative"));
        }
        if let ForecastMode::Fixed(r) = self.forecast {
            if !(r.brokerage > 0.0 && r.ira > 0.0 && r.roth > 0.0) {
                return Err(Error::invalid("forecast returns must be positive"));
            }
        }
        self.tax.validate()
    }

    pub fn earned_at(&self, age: u32) -> f64 {
        total_at(&self.earned_income, age)
    }
    pub fn additional_at(&self, age: u32) -> f64 {
        total_at(&self.additional_income, age)
    }
    pub fn liability_at(&self, age: u32) -> f64 {
        total_at(&self.liabilities, age)
    }

    pub fn initial_wealth(&self) -> f64 {
        self.initial_brokerage + self.initial_ira + self.initial_roth
    }

    /// Benchmark rate times initial balances plus the additional income
    /// projected through the projection age.
    pub fn benchmark_target(&self) -> f64 {
        let projected: f64 = (self.start_age..=self.benchmark_projection_age).map(|a| self.additional_at(a)).sum();
        self.benchmark_rate * (self.initial_wealth() + projected)
    }

    /// The consumption target shared by both policies: the explicit value
    /// when given, otherwise the benchmark target rounded to $100.
    pub fn consumption_target(&self) -> f64 {
        self.target_consumption.unwrap_or_else(|| round_half_up(self.benchmark_target() / 100.0) * 100.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_targets() {
        let up = Profile::upper_middle();
        assert!((up.benchmark_target() - 0.0375 * (800_000.0 + 3_938.0 * 12.0 * 16.0)).abs() < 1e-6);
        assert_eq!(up.consumption_target(), 58_400.0);
        assert_eq!(Profile::lower_middle().consumption_target(), 20_100.0);
        up.validate().unwrap();
        Profile::lower_middle().validate().unwrap();
    }

    #[test]
    fn schedules() {
        let s = ScheduledAmount { amount: 5.0, from_age: 70, to_age: Some(72) };
        assert_eq!((s.at(69), s.at(70), s.at(72), s.at(73)), (0.0, 5.0, 5.0, 0.0));
        let mut p = Profile::upper_middle();
        p.target_consumption = Some(1_000.0);
        assert_eq!(p.consumption_target(), 1_000.0);
        p.initial_ira = -1.0;
        assert!(p.validate().is_err());
    }
}
