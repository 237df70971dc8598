//! Fixed real post-tax withdrawal: RMD first, the rest split across accounts
//! in proportion to their balances, surplus cash to the brokerage account.

use serde::{Deserialize, Serialize};

use super::state::{exact_tax, RetireeState, YearlyAction};
use crate::tax::TaxSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub withdrawal_rate: f64,
    pub projection_age: u32,
    pub target_post_tax: f64,
}

/// `rate · (B + I + R + Σ additional income)` with the income already
/// restricted to the projection window.
pub fn benchmark_target(brokerage: f64, ira: f64, roth: f64, projected_income: &[f64], rate: f64) -> f64 {
    rate * (brokerage + ira + roth + projected_income.iter().sum::<f64>())
}

/// Incomes and obligations for the year being decided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YearInputs {
    pub earned_income: f64,
    pub additional_income: f64,
    /// Scheduled liability plus anything carried from last year.
    pub liability: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Split {
    b: f64,
    iw: f64,
    rw: f64,
}

fn split(state: &RetireeState, rmd: f64, total: f64) -> Split {
    let rest = (total - rmd).max(0.0);
    let (bb, bi, br) = (state.brokerage, state.ira - rmd, state.roth);
    let pool = bb + bi + br;
    if pool <= 0.0 || rest <= 0.0 {
        return Split { b: 0.0, iw: rmd, rw: 0.0 };
    }
    let f = (rest / pool).min(1.0);
    Split { b: f * bb, iw: rmd + f * bi, rw: f * br }
}

fn cash(state: &RetireeState, s: Split, y: &YearInputs, tax: &TaxSchedule) -> (f64, f64) {
    let gain = s.b * (1.0 - state.basis.ratio());
    let omega = s.iw + y.earned_income + y.additional_income;
    let (o, g) = exact_tax(tax, omega, gain);
    let tau = o + g;
    (s.b + s.iw + s.rw + y.earned_income + y.additional_income - tau - y.liability, tau)
}

/// Tolerance on delivered post-tax cash, in dollars.
pub const BISECTION_TOLERANCE: f64 = 1e-6;

pub fn benchmark_step(state: &RetireeState, target: f64, y: &YearInputs, tax: &TaxSchedule) -> YearlyAction {
    let rmd = (y.kappa * state.ira).min(state.ira);
    let only_rmd = split(state, rmd, rmd);
    let (c0, tau0) = cash(state, only_rmd, y, tax);
    if c0 >= target {
        // Surplus goes to the brokerage account, which sells nothing.
        let surplus = c0 - target;
        return YearlyAction { b: -surplus, iw: rmd, consumption: target, planned_tax: tau0, ..Default::default() };
    }
    let everything = state.wealth();
    let all = Split { b: state.brokerage, iw: state.ira, rw: state.roth };
    let (c_all, tau_all) = cash(state, all, y, tax);
    if c_all <= target {
        return YearlyAction {
            b: all.b,
            iw: all.iw,
            rw: all.rw,
            consumption: c_all.max(0.0),
            planned_tax: tau_all,
            ..Default::default()
        };
    }
    let (mut lo, mut hi) = (rmd, everything);
    let mut best = (all, tau_all);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = split(state, rmd, mid);
        let (c, tau) = cash(state, s, y, tax);
        if c >= target {
            hi = mid;
            best = (s, tau);
            if c - target <= BISECTION_TOLERANCE {
                break;
            }
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 {
            break;
        }
    }
    let (s, tau) = best;
    YearlyAction { b: s.b, iw: s.iw, rw: s.rw, consumption: target, planned_tax: tau, ..Default::default() }
}
