//! Self-financing collars on the stock leg: Black–Scholes pricing, floor and
//! cap determination, and the collared portfolio return.
//!
//! Prices are for a one-period European option on a non-dividend stock with a
//! continuously compounded risk-free rate. Floors and caps are returns
//! relative to spot, so strikes are `spot·(1 + F)` and `spot·(1 + C)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::norm_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Put,
    Call,
}

pub fn black_scholes_price(kind: OptionKind, spot: f64, strike: f64, r_f: f64, sigma: f64, tenor: f64) -> f64 {
    let discount = libm::exp(-r_f * tenor);
    let vol = sigma * libm::sqrt(tenor);
    if vol <= 0.0 {
        let forward_gap = spot - strike * discount;
        return match kind {
            OptionKind::Call => forward_gap.max(0.0),
            OptionKind::Put => (-forward_gap).max(0.0),
        };
    }
    let d1 = (libm::log(spot / strike) + (r_f + 0.5 * sigma * sigma) * tenor) / vol;
    let d2 = d1 - vol;
    match kind {
        OptionKind::Call => spot * norm_cdf(d1) - strike * discount * norm_cdf(d2),
        OptionKind::Put => strike * discount * norm_cdf(-d2) - spot * norm_cdf(-d1),
    }
}

/// Floor that guarantees a real portfolio return of at least `r_min`, never
/// above the risk-free rate.
pub fn collar_floor(r_min: f64, w: f64, r_f: f64, inflation: f64) -> f64 {
    ((r_min - (1.0 - w) * r_f + inflation) / w).min(r_f)
}

/// Put prices at or below this fraction of spot count as free protection.
const WORTHLESS: f64 = 1e-15;

/// Cap whose call has the same price as the put at `floor`. Returns +∞ when
/// the put is worthless, meaning no call needs to be sold.
pub fn solve_cap(floor: f64, spot: f64, r_f: f64, sigma: f64) -> Result<f64> {
    if !(spot > 0.0) || !(1.0 + floor > 0.0) {
        return Err(Error::invalid("collar needs a positive spot and put strike"));
    }
    if floor > r_f {
        return Err(Error::invalid("floor above the risk-free rate cannot be self-financed"));
    }
    let put = black_scholes_price(OptionKind::Put, spot, spot * (1.0 + floor), r_f, sigma, 1.0);
    if put <= WORTHLESS * spot {
        return Ok(f64::INFINITY);
    }
    let call = |k: f64| black_scholes_price(OptionKind::Call, spot, k, r_f, sigma, 1.0);
    // Put–call parity puts the answer at or above the put strike.
    let mut lo = spot * (1.0 + floor);
    let mut hi = lo.max(spot) * 2.0;
    while call(hi) > put {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = call(mid);
        if (c - put).abs() <= 1e-12 * spot {
            return Ok(mid / spot - 1.0);
        }
        if c > put {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi) / spot - 1.0)
}

/// Price difference between the two legs, for self-financing checks.
pub fn leg_mismatch(floor: f64, cap: f64, r_f: f64, sigma: f64) -> f64 {
    let put = black_scholes_price(OptionKind::Put, 1.0, 1.0 + floor, r_f, sigma, 1.0);
    let call = if cap.is_finite() { black_scholes_price(OptionKind::Call, 1.0, 1.0 + cap, r_f, sigma, 1.0) } else { 0.0 };
    (put - call).abs()
}

pub fn collared_return(market: f64, floor: f64, cap: f64, w: f64, treasury: f64, inflation: f64) -> f64 {
    w * market.clamp(floor, cap) + (1.0 - w) * treasury - inflation
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FloorRule {
    /// The same floor every year.
    Fixed { floor: f64 },
    /// Floor from a minimum real portfolio return, using the year's Treasury
    /// rate and the one-step inflation forecast.
    MinReturn { r_min: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarConfig {
    pub rule: FloorRule,
    /// Stock volatility for pricing; the market model's when absent.
    #[serde(default)]
    pub volatility: Option<f64>,
}

impl CollarConfig {
    pub fn fixed(floor: f64) -> Self {
        CollarConfig { rule: FloorRule::Fixed { floor }, volatility: None }
    }
}

/// One year's collar on one portfolio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarSpec {
    pub floor: f64,
    pub cap: f64,
    pub stock_weight: f64,
    pub risk_free: f64,
    pub expected_inflation: f64,
    pub volatility: f64,
}

impl CollarSpec {
    /// Strikes the collar for a year. A fixed floor above the risk-free rate
    /// is lowered to it, as no self-financing collar exists there.
    pub fn strike(rule: FloorRule, w: f64, r_f: f64, expected_inflation: f64, sigma: f64) -> Result<Self> {
        if !(w > 0.0 && w <= 1.0) || !(sigma > 0.0) {
            return Err(Error::invalid("collar needs stock weight in (0, 1] and positive volatility"));
        }
        let floor = match rule {
            FloorRule::Fixed { floor } => floor.min(r_f),
            FloorRule::MinReturn { r_min } => collar_floor(r_min, w, r_f, expected_inflation),
        };
        let cap = solve_cap(floor, 1.0, r_f, sigma)?;
        Ok(CollarSpec { floor, cap, stock_weight: w, risk_free: r_f, expected_inflation, volatility: sigma })
    }

    pub fn real_return(&self, market: f64, treasury: f64, inflation: f64) -> f64 {
        collared_return(market, self.floor, self.cap, self.stock_weight, treasury, inflation)
    }

    pub fn mismatch(&self) -> f64 {
        leg_mismatch(self.floor, self.cap, self.risk_free, self.volatility)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_the_money_value() {
        // 100·(2Φ(0.1) − 1) with Φ(0.1) = 0.539827837277029
        let expect = 100.0 * (2.0 * 0.539_827_837_277_029 - 1.0);
        let c = black_scholes_price(OptionKind::Call, 100.0, 100.0, 0.0, 0.2, 1.0);
        let p = black_scholes_price(OptionKind::Put, 100.0, 100.0, 0.0, 0.2, 1.0);
        assert!((c - expect).abs() < 1e-9 && (p - expect).abs() < 1e-9);
        assert!((c - 7.9656).abs() < 1e-4);
    }

    #[test]
    fn deterministic_limit() {
        let c = black_scholes_price(OptionKind::Call, 100.0, 90.0, 0.03, 1e-9, 1.0);
        let p = black_scholes_price(OptionKind::Put, 100.0, 90.0, 0.03, 1e-9, 1.0);
        assert!((c - (100.0 - 90.0 * libm::exp(-0.03))).abs() < 1e-9);
        assert!(p.abs() < 1e-12);
        assert_eq!(solve_cap(-0.05, 1.0, 0.03, 1e-9).unwrap(), f64::INFINITY);
    }

    #[test]
    fn floors() {
        assert_eq!(collar_floor(0.05, 1.0, 0.04, 0.0), 0.04);
        assert!((collar_floor(-0.03, 0.6, 0.04, 0.02) + 0.026 / 0.6).abs() < 1e-15);
        assert!((collar_floor(0.0, 0.2, 0.04, 0.02) + 0.06).abs() < 1e-12);
    }

    #[test]
    fn cap_self_finances() {
        let spec = CollarSpec::strike(FloorRule::Fixed { floor: -0.075 }, 0.6, 0.045, 0.03, 0.2).unwrap();
        assert!(spec.cap.is_finite() && spec.cap > spec.floor);
        assert!(spec.mismatch() <= 1e-8);
        let sym = solve_cap(-0.1, 1.0, 0.0, 0.25).unwrap();
        assert!(leg_mismatch(-0.1, sym, 0.0, 0.25) <= 1e-8);
    }

    #[test]
    fn clipping() {
        assert!((collared_return(-0.40, -0.075, 0.2, 0.6, 0.04, 0.02) + 0.049).abs() < 1e-15);
        let inside = collared_return(0.05, -0.075, 0.2, 0.6, 0.04, 0.02);
        assert!((inside - (0.6 * 0.05 + 0.4 * 0.04 - 0.02)).abs() < 1e-15);
    }
}
