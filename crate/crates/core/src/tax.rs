//! Federal income tax, capital gains tax, RMD fractions and contribution limits.
//!
//! All amounts are real dollars per year. Brackets are held constant across
//! the years of a plan.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::pos;

/// Long-term capital gains bracket: `rate` applies to stacked taxable income
/// from `starts_at` up to the next bracket's start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtcgBracket {
    pub starts_at: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaxSchedule {
    /// Upper edges β₁ < … < β_K of the ordinary brackets.
    pub bracket_edges: Vec<f64>,
    /// Marginal rates η₁ < … < η_{K+1}; one more than there are edges.
    pub marginal_rates: Vec<f64>,
    /// ξ, the flat rate the planner applies to realized brokerage gains.
    pub ltcg_fixed_rate: f64,
    /// Progressive gains schedule used when settling a simulated year.
    pub ltcg_brackets: Vec<LtcgBracket>,
}

/// `slope · ω + intercept`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: f64,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn eval(&self, omega: f64) -> f64 {
        self.slope * omega + self.intercept
    }
}

impl TaxSchedule {
    /// 2024 single-filer ordinary brackets with 2024 single LTCG thresholds.
    pub fn us_2024_single(ltcg_fixed_rate: f64) -> Self {
        TaxSchedule {
            bracket_edges: vec![11_600.0, 47_150.0, 100_525.0, 191_950.0, 243_725.0, 609_350.0],
            marginal_rates: vec![0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37],
            ltcg_fixed_rate,
            ltcg_brackets: vec![
                LtcgBracket { starts_at: 0.0, rate: 0.0 },
                LtcgBracket { starts_at: 47_025.0, rate: 0.15 },
                LtcgBracket { starts_at: 518_900.0, rate: 0.20 },
            ],
        }
    }

    /// No tax of any kind.
    pub fn zero() -> Self {
        TaxSchedule {
            bracket_edges: vec![],
            marginal_rates: vec![0.0],
            ltcg_fixed_rate: 0.0,
            ltcg_brackets: vec![LtcgBracket { starts_at: 0.0, rate: 0.0 }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.bracket_edges;
        let r = &self.marginal_rates;
        if r.len() != e.len() + 1 {
            return Err(Error::invalid("need exactly one more marginal rate than bracket edges"));
        }
        if e.iter().any(|v| !(v.is_finite() && *v > 0.0)) || e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bracket edges must be positive and strictly increasing"));
        }
        if r.iter().any(|v| !(0.0..1.0).contains(v)) || r.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("marginal rates must lie in [0, 1) and strictly increase"));
        }
        if !(0.0..1.0).contains(&self.ltcg_fixed_rate) {
            return Err(Error::invalid("ltcg_fixed_rate must lie in [0, 1)"));
        }
        let b = &self.ltcg_brackets;
        if b.is_empty() || b[0].starts_at != 0.0 {
            return Err(Error::invalid("ltcg brackets must start at 0"));
        }
        if b.windows(2).any(|w| w[0].starts_at >= w[1].starts_at || w[0].rate > w[1].rate)
            || b.iter().any(|x| !(0.0..1.0).contains(&x.rate) || !x.starts_at.is_finite())
        {
            return Err(Error::invalid("ltcg brackets must have increasing starts and nondecreasing rates in [0, 1)"));
        }
        Ok(())
    }

    /// φ(ω): zero for ω ≤ 0, then the marginal rates bracket by bracket.
    pub fn income_tax(&self, omega: f64) -> f64 {
        let mut tax = 0.0;
        let mut lower = 0.0;
        for (k, &rate) in self.marginal_rates.iter().enumerate() {
            let upper = self.bracket_edges.get(k).copied().unwrap_or(f64::INFINITY);
            if omega <= lower {
                break;
            }
            tax += rate * (omega.min(upper) - lower);
            lower = upper;
        }
        tax
    }

    /// K + 2 affine pieces whose pointwise maximum is φ: the zero piece and
    /// one piece per marginal rate, with intercepts chosen for continuity.
    pub fn epigraph(&self) -> Vec<AffinePiece> {
        let mut pieces = vec![AffinePiece { slope: 0.0, intercept: 0.0 }];
        let mut intercept = 0.0;
        for (k, &rate) in self.marginal_rates.iter().enumerate() {
            if k > 0 {
                intercept += (self.marginal_rates[k - 1] - rate) * self.bracket_edges[k - 1];
            }
            pieces.push(AffinePiece { slope: rate, intercept });
        }
        pieces
    }

    /// ζ = ξ·(1 − δ₀)₊, the planner's tax per dollar sold from the brokerage.
    pub fn gains_coefficient(&self, basis_ratio: f64) -> f64 {
        self.ltcg_fixed_rate * pos(1.0 - basis_ratio)
    }

    /// Tax on a realized gain stacked on top of ordinary taxable income.
    /// Losses earn nothing and negative ordinary income does not shelter gains.
    pub fn capital_gains_tax(&self, realized_gain: f64, ordinary_taxable_income: f64) -> f64 {
        if !(realized_gain > 0.0) {
            return 0.0;
        }
        let lo = pos(ordinary_taxable_income);
        let hi = lo + realized_gain;
        let b = &self.ltcg_brackets;
        let mut tax = 0.0;
        for k in 0..b.len() {
            let start = b[k].starts_at;
            let end = b.get(k + 1).map_or(f64::INFINITY, |n| n.starts_at);
            let overlap = hi.min(end) - lo.max(start);
            if overlap > 0.0 {
                tax += b[k].rate * overlap;
            }
        }
        tax
    }
}

pub fn income_tax(omega: f64, schedule: &TaxSchedule) -> f64 {
    schedule.income_tax(omega)
}

pub fn income_tax_epigraph(schedule: &TaxSchedule) -> Vec<AffinePiece> {
    schedule.epigraph()
}

pub fn exact_capital_gains_tax(realized_gain: f64, ordinary_taxable_income: f64, schedule: &TaxSchedule) -> f64 {
    schedule.capital_gains_tax(realized_gain, ordinary_taxable_income)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmdSchedule {
    pub start_age: u32,
    /// Distribution period y by age.
    pub divisor_by_age: BTreeMap<u32, f64>,
}

/// IRS Uniform Lifetime Table distribution periods, ages 72 through 120.
pub const UNIFORM_LIFETIME: [(u32, f64); 49] = [
    (72, 27.4), (73, 26.5), (74, 25.5), (75, 24.6), (76, 23.7), (77, 22.9), (78, 22.0), (79, 21.1),
    (80, 20.2), (81, 19.4), (82, 18.5), (83, 17.7), (84, 16.8), (85, 16.0), (86, 15.2), (87, 14.4),
    (88, 13.7), (89, 12.9), (90, 12.2), (91, 11.5), (92, 10.8), (93, 10.1), (94, 9.5), (95, 8.9),
    (96, 8.4), (97, 7.8), (98, 7.3), (99, 6.8), (100, 6.4), (101, 6.0), (102, 5.6), (103, 5.2),
    (104, 4.9), (105, 4.6), (106, 4.3), (107, 4.1), (108, 3.9), (109, 3.7), (110, 3.5), (111, 3.4),
    (112, 3.3), (113, 3.1), (114, 3.0), (115, 2.9), (116, 2.8), (117, 2.7), (118, 2.5), (119, 2.3),
    (120, 2.0),
];

impl RmdSchedule {
    pub fn uniform_lifetime() -> Self {
        RmdSchedule { start_age: 73, divisor_by_age: UNIFORM_LIFETIME.iter().copied().collect() }
    }

    pub fn validate(&self) -> Result<()> {
        for (&age, &y) in &self.divisor_by_age {
            if !(y >= 1.0) || !y.is_finite() {
                return Err(Error::invalid(format!("divisor {y} at age {age} must be at least 1")));
            }
        }
        Ok(())
    }

    /// κ(age): 0 before the start age, 1/y afterwards.
    pub fn fraction(&self, age: u32) -> Result<f64> {
        if age < self.start_age {
            return Ok(0.0);
        }
        self.divisor_by_age.get(&age).map(|y| 1.0 / y).ok_or(Error::MissingDivisor(age))
    }
}

pub fn rmd_fraction(age: u32, schedule: &RmdSchedule) -> Result<f64> {
    schedule.fraction(age)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepositLimits {
    /// Combined IRA and Roth contribution cap per year.
    pub d_max: f64,
}

impl DepositLimits {
    /// Contributions also cannot exceed earned income.
    pub fn cap(&self, earned_income: f64) -> f64 {
        self.d_max.min(pos(earned_income))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_sums() {
        let t = TaxSchedule::us_2024_single(0.15);
        t.validate().unwrap();
        assert_eq!(t.income_tax(0.0), 0.0);
        assert_eq!(t.income_tax(-500.0), 0.0);
        assert!((t.income_tax(11_600.0) - 1_160.0).abs() < 1e-9);
        assert!((t.income_tax(47_150.0) - 5_426.0).abs() < 1e-9);
    }

    #[test]
    fn epigraph_pieces() {
        let one = TaxSchedule {
            bracket_edges: vec![100.0],
            marginal_rates: vec![0.1, 0.2],
            ltcg_fixed_rate: 0.0,
            ltcg_brackets: vec![LtcgBracket { starts_at: 0.0, rate: 0.0 }],
        };
        let p = one.epigraph();
        assert_eq!(p.len(), 3);
        assert_eq!(p[0], AffinePiece { slope: 0.0, intercept: 0.0 });
        assert_eq!(p[1], AffinePiece { slope: 0.1, intercept: 0.0 });
        assert!((p[2].slope - 0.2).abs() < 1e-15 && (p[2].intercept + 10.0).abs() < 1e-12);

        let t = TaxSchedule::us_2024_single(0.0);
        let p = t.epigraph();
        assert_eq!(p.len(), 8);
        let at = p.iter().map(|q| q.eval(47_150.0)).fold(f64::MIN, f64::max);
        assert!((at - 5_426.0).abs() < 1e-9);

        let flat = TaxSchedule { bracket_edges: vec![], marginal_rates: vec![0.1], ..TaxSchedule::zero() };
        assert_eq!(flat.epigraph(), vec![AffinePiece { slope: 0.0, intercept: 0.0 }, AffinePiece { slope: 0.1, intercept: 0.0 }]);
    }

    #[test]
    fn gains_tax_cases() {
        let t = TaxSchedule::us_2024_single(0.15);
        assert_eq!(t.capital_gains_tax(-5_000.0, 80_000.0), 0.0);
        assert!((t.capital_gains_tax(10_000.0, 100_000.0) - 1_500.0).abs() < 1e-9);
        // straddles the 0% / 15% edge
        assert!((t.capital_gains_tax(10_000.0, 40_000.0) - 0.15 * 2_975.0).abs() < 1e-9);
        let flat = TaxSchedule { ltcg_brackets: vec![LtcgBracket { starts_at: 0.0, rate: 0.15 }], ..t };
        assert!((flat.capital_gains_tax(1_234.0, 9e9) - 0.15 * 1_234.0).abs() < 1e-9);
    }

    #[test]
    fn rmd_fractions() {
        let r = RmdSchedule::uniform_lifetime();
        assert_eq!(r.fraction(70).unwrap(), 0.0);
        assert!((r.fraction(75).unwrap() - 1.0 / 24.6).abs() < 1e-15);
        assert!((r.fraction(73).unwrap() - 1.0 / 26.5).abs() < 1e-15);
        let mut short = r.clone();
        short.divisor_by_age.remove(&80);
        assert_eq!(short.fraction(80), Err(Error::MissingDivisor(80)));
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut t = TaxSchedule::us_2024_single(0.15);
        t.marginal_rates.swap(0, 1);
        assert!(t.validate().is_err());
        let mut t = TaxSchedule::us_2024_single(0.15);
        t.bracket_edges.pop();
        assert!(t.validate().is_err());
    }
}
