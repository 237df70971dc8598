//! Statistical models for market returns, Treasury rates and inflation.

mod gmm;
mod portfolio;
mod var;

pub use gmm::{fit_gmm, sample_market_returns, FloorPolicy, GaussianMixture, GmmFit, GmmFitOptions};
pub use portfolio::{portfolio_real_return, PortfolioSpec};
pub use var::{
    fit_var, fit_var_with_mean, forecast_var, inverse_transform, simulate_var, steady_state_cov, transform_inflation,
    Mat2, PwlTransform, VarModel, Vec2,
};

use serde::{Deserialize, Serialize};

/// Everything needed to sample joint market, Treasury and inflation paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketModel {
    pub gmm: GaussianMixture,
    pub inflation_transform: PwlTransform,
    pub var: VarModel,
}

impl MarketModel {
    /// Parameters fitted to 1962–2023 annual data.
    pub fn paper() -> Self {
        MarketModel { gmm: GaussianMixture::paper(), inflation_transform: PwlTransform::paper(), var: VarModel::paper() }
    }

    /// VAR state (Treasury, transformed inflation) for observed rates.
    pub fn state_of(&self, treasury: f64, inflation: f64) -> Vec2 {
        [treasury, self.inflation_transform.apply(inflation)]
    }

    /// (Treasury, inflation) in natural units for a VAR state.
    pub fn rates_of(&self, state: Vec2) -> (f64, f64) {
        (state[0], self.inflation_transform.invert(state[1]))
    }
}

/// Treasury rate and inflation observed in 1962.
pub const RATES_1962: (f64, f64) = (0.0395, 0.012);
