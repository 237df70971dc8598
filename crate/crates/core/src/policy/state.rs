//! Retiree state between years and the end-of-year settlement shared by both
//! policies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::pos;
use crate::tax::TaxSchedule;

/// Average-cost basis of the brokerage account, kept in nominal dollars.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisTracker {
    pub nominal_basis: f64,
    pub nominal_value: f64,
    /// Cumulative price level, 1 at retirement.
    pub inflation_index: f64,
}

impl BasisTracker {
    pub fn new(real_value: f64, basis_ratio: f64) -> Self {
        BasisTracker { nominal_basis: basis_ratio * real_value, nominal_value: real_value, inflation_index: 1.0 }
    }

    /// δ = basis / value; 1 for an empty account.
    pub fn ratio(&self) -> f64 {
        if self.nominal_value > 0.0 {
            self.nominal_basis / self.nominal_value
        } else {
            1.0
        }
    }

    pub fn real_value(&self) -> f64 {
        self.nominal_value / self.inflation_index
    }

    /// Sells `real` dollars at average cost and returns the realized gain in
    /// real dollars (negative for a loss).
    pub fn sell(&mut self, real: f64) -> f64 {
        let delta = self.ratio();
        let nominal = real * self.inflation_index;
        if nominal >= self.nominal_value {
            let gain = self.nominal_value - self.nominal_basis;
            self.nominal_value = 0.0;
            self.nominal_basis = 0.0;
            return gain / self.inflation_index;
        }
        self.nominal_basis -= delta * nominal;
        self.nominal_value -= nominal;
        real * (1.0 - delta)
    }

    pub fn buy(&mut self, real: f64) {
        let nominal = real * self.inflation_index;
        self.nominal_basis += nominal;
        self.nominal_value += nominal;
    }

    /// One year of growth, after which the nominal value is re-anchored to
    /// the real balance so the two never drift apart.
    pub fn grow(&mut self, inflation: f64, real_balance_after: f64) {
        self.inflation_index *= 1.0 + inflation;
        self.nominal_value = real_balance_after * self.inflation_index;
        if real_balance_after <= 0.0 {
            self.nominal_value = 0.0;
            self.nominal_basis = 0.0;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetireeState {
    pub age: u32,
    pub brokerage: f64,
    pub ira: f64,
    pub roth: f64,
    pub basis: BasisTracker,
    /// Last year's cash discrepancy Δ, due this year on top of scheduled
    /// liabilities. Negative means surplus cash.
    pub carried_liability: f64,
    pub alive: bool,
}

impl RetireeState {
    pub fn new(age: u32, brokerage: f64, ira: f64, roth: f64, basis_ratio: f64) -> Self {
        RetireeState {
            age,
            brokerage,
            ira,
            roth,
            basis: BasisTracker::new(brokerage, basis_ratio),
            carried_liability: 0.0,
            alive: true,
        }
    }

    pub fn wealth(&self) -> f64 {
        self.brokerage + self.ira + self.roth
    }
}

/// One year's decisions. Net flows follow from the components:
/// `i = ic − id + iw`, `r = rw − rc − rd`; negative `b` is a deposit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct YearlyAction {
    pub b: f64,
    pub ic: f64,
    pub id: f64,
    pub iw: f64,
    pub rc: f64,
    pub rd: f64,
    pub rw: f64,
    pub consumption: f64,
    pub planned_tax: f64,
}

impl YearlyAction {
    pub fn i(&self) -> f64 {
        self.ic - self.id + self.iw
    }
    pub fn r(&self) -> f64 {
        self.rw - self.rc - self.rd
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.ic, self.id, self.iw, self.rc, self.rd, self.rw, self.consumption];
        if parts.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !self.b.is_finite() {
            return Err(Error::invalid("action components must be finite and nonnegative"));
        }
        if self.ic != self.rc {
            return Err(Error::invalid("conversion out of the IRA must equal conversion into the Roth"));
        }
        Ok(())
    }
}

/// Quantities revealed over the year.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedYear {
    pub rho_brokerage: f64,
    pub rho_ira: f64,
    pub rho_roth: f64,
    pub inflation: f64,
    pub earned_income: f64,
    pub additional_income: f64,
    /// Scheduled liability, excluding anything carried from last year.
    pub liability: f64,
}

/// Exact tax on a year: ordinary tax on ω plus progressive gains tax stacked
/// on top of it.
pub fn exact_tax(schedule: &TaxSchedule, taxable_income: f64, realized_gain: f64) -> (f64, f64) {
    (schedule.income_tax(taxable_income), schedule.capital_gains_tax(realized_gain, taxable_income))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct YearRecord {
    pub age: u32,
    pub brokerage_start: f64,
    pub ira_start: f64,
    pub roth_start: f64,
    pub brokerage_end: f64,
    pub ira_end: f64,
    pub roth_end: f64,
    pub b: f64,
    pub i: f64,
    pub r: f64,
    pub ic: f64,
    pub id: f64,
    pub iw: f64,
    pub rc: f64,
    pub rd: f64,
    pub rw: f64,
    pub consumption: f64,
    pub earned_income: f64,
    pub additional_income: f64,
    pub scheduled_liability: f64,
    pub carried_in: f64,
    pub taxable_income: f64,
    pub realized_gain: f64,
    pub ordinary_tax: f64,
    pub gains_tax: f64,
    pub tax: f64,
    pub planned_tax: f64,
    /// Δ, carried into next year.
    pub discrepancy: f64,
    /// End balances minus start balances net of withdrawals, real dollars.
    pub investment_gain: f64,
    pub rmd_required: f64,
    pub basis_ratio: f64,
    pub fallback: bool,
}

/// Applies an action against realized returns and incomes. The exact tax is
/// computed from the realized taxable income and the average-cost gain on
/// brokerage sales; any gap between spending and funding becomes Δ.
pub fn settle_year(
    state: &RetireeState,
    action: &YearlyAction,
    realized: &RealizedYear,
    tax: &TaxSchedule,
    kappa: f64,
) -> Result<(RetireeState, YearRecord)> {
    action.validate()?;
    let mut a = *action;
    let slack = |bal: f64| 1e-7 * (1.0 + bal);
    let (i, r) = (a.i(), a.r());
    for (name, flow, bal) in [("brokerage", a.b, state.brokerage), ("IRA", i, state.ira), ("Roth", r, state.roth)] {
        if flow > bal + slack(bal) {
            return Err(Error::invalid(alloc::format!("{name} withdrawal {flow:.2} exceeds balance {bal:.2}")));
        }
    }
    // Round-off over a full liquidation is trimmed; the cash identity below
    // absorbs it.
    a.b = a.b.min(state.brokerage);
    if i > state.ira {
        a.iw -= i - state.ira;
    }
    if r > state.roth {
        a.rw -= r - state.roth;
    }
    let (i, r) = (a.i(), a.r());

    let mut basis = state.basis;
    let realized_gain = if a.b > 0.0 {
        basis.sell(a.b)
    } else {
        basis.buy(-a.b);
        0.0
    };
    let (e, add) = (realized.earned_income, realized.additional_income);
    let omega = a.ic - a.id + a.iw + e + add;
    let (ordinary, gains) = exact_tax(tax, omega, realized_gain);
    let tau = ordinary + gains;
    let liability = realized.liability + state.carried_liability;
    let discrepancy = a.consumption + tau + liability - (a.b + i + r + e + add);

    let after_b = pos(state.brokerage - a.b);
    let after_i = pos(state.ira - i);
    let after_r = pos(state.roth - r);
    let brokerage = after_b * realized.rho_brokerage;
    let ira = after_i * realized.rho_ira;
    let roth = after_r * realized.rho_roth;
    basis.grow(realized.inflation, brokerage);

    let investment_gain = (brokerage - after_b) + (ira - after_i) + (roth - after_r);
    let next = RetireeState {
        age: state.age + 1,
        brokerage,
        ira,
        roth,
        basis,
        carried_liability: discrepancy,
        alive: state.alive,
    };
    let record = YearRecord {
        age: state.age,
        brokerage_start: state.brokerage,
        ira_start: state.ira,
        roth_start: state.roth,
        brokerage_end: brokerage,
        ira_end: ira,
        roth_end: roth,
        b: a.b,
        i,
        r,
        ic: a.ic,
        id: a.id,
        iw: a.iw,
        rc: a.rc,
        rd: a.rd,
        rw: a.rw,
        consumption: a.consumption,
        earned_income: e,
        additional_income: add,
        scheduled_liability: realized.liability,
        carried_in: state.carried_liability,
        taxable_income: omega,
        realized_gain,
        ordinary_tax: ordinary,
        gains_tax: gains,
        tax: tau,
        planned_tax: a.planned_tax,
        discrepancy,
        investment_gain,
        rmd_required: kappa * state.ira,
        basis_ratio: state.basis.ratio(),
        fallback: false,
    };
    Ok((next, record))
}

/// Bequest when the retiree dies at the end of the settled year: balances
/// less whatever discrepancy is still owed (a surplus is added back).
pub fn bequest_at_death(state: &RetireeState) -> f64 {
    state.wealth() - state.carried_liability
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> RealizedYear {
        RealizedYear {
            rho_brokerage: 1.0,
            rho_ira: 1.0,
            rho_roth: 1.0,
            inflation: 0.0,
            earned_income: 0.0,
            additional_income: 0.0,
            liability: 0.0,
        }
    }

    #[test]
    fn planned_equals_realized_has_no_discrepancy() {
        let mut tax = TaxSchedule::us_2024_single(0.15);
        tax.ltcg_brackets = alloc::vec![crate::tax::LtcgBracket { starts_at: 0.0, rate: 0.15 }];
        let s = RetireeState::new(70, 100_000.0, 200_000.0, 0.0, 0.5);
        let iw = 30_000.0;
        let b = 20_000.0;
        let planned_tax = tax.income_tax(iw) + 0.15 * 0.5 * b;
        let action = YearlyAction { b, iw, consumption: b + iw - planned_tax, planned_tax, ..Default::default() };
        let (next, rec) = settle_year(&s, &action, &flat(), &tax, 0.0).unwrap();
        assert!(rec.discrepancy.abs() < 1e-9);
        assert!((rec.realized_gain - 10_000.0).abs() < 1e-9);
        assert_eq!(next.brokerage, 80_000.0);
        assert!((next.basis.ratio() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tax_overrun_is_carried() {
        let tax = TaxSchedule::us_2024_single(0.0);
        let s = RetireeState::new(70, 0.0, 100_000.0, 0.0, 1.0);
        let real = tax.income_tax(20_000.0);
        let action = YearlyAction { iw: 20_000.0, consumption: 20_000.0 - real + 500.0, planned_tax: real - 500.0, ..Default::default() };
        let (next, rec) = settle_year(&s, &action, &flat(), &tax, 0.0).unwrap();
        assert!((rec.discrepancy - 500.0).abs() < 1e-9);
        assert!((next.carried_liability - 500.0).abs() < 1e-9);
        assert!((bequest_at_death(&next) - (80_000.0 - 500.0)).abs() < 1e-9);
    }

    #[test]
    fn liquidate_and_redeposit_resets_basis() {
        let mut t = BasisTracker::new(100.0, 0.3);
        t.grow(0.05, 120.0);
        let gain = t.sell(120.0);
        assert!((gain - 120.0 * (1.0 - 30.0 / 126.0)).abs() < 1e-9);
        t.buy(40.0);
        assert_eq!(t.ratio(), 1.0);
    }

    #[test]
    fn overdraft_is_an_error() {
        let s = RetireeState::new(70, 10.0, 0.0, 0.0, 1.0);
        let action = YearlyAction { b: 11.0, consumption: 11.0, ..Default::default() };
        assert!(settle_year(&s, &action, &flat(), &TaxSchedule::zero(), 0.0).is_err());
    }
}
