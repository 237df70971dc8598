use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stocks at `stock_weight`, Treasury bonds for the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    pub stock_weight: f64,
    pub label: String,
}

impl PortfolioSpec {
    pub fn new(stock_weight: f64, label: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&stock_weight) {
            return Err(Error::invalid("stock weight must lie in [0, 1]"));
        }
        Ok(PortfolioSpec { stock_weight, label: label.into() })
    }

    /// 20% stocks, held in the brokerage account.
    pub fn conservative() -> Self {
        PortfolioSpec { stock_weight: 0.2, label: "20/80".into() }
    }

    /// 60% stocks, held in the IRA and Roth.
    pub fn balanced() -> Self {
        PortfolioSpec { stock_weight: 0.6, label: "60/40".into() }
    }

    pub fn real_return(&self, market: f64, treasury: f64, inflation: f64) -> f64 {
        portfolio_real_return(market, treasury, inflation, self)
    }
}

pub fn portfolio_real_return(market: f64, treasury: f64, inflation: f64, spec: &PortfolioSpec) -> f64 {
    spec.stock_weight * market + (1.0 - spec.stock_weight) * treasury - inflation
}
