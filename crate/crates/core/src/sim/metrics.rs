//! Paired summaries of MPC and benchmark runs over the same scenarios.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::run::{PolicyKind, SimulationReport};
use crate::error::{Error, Result};
use crate::policy::YearRecord;

/// Relative consumption further than this from one counts as different.
pub const CONSUMPTION_TOLERANCE: f64 = 1e-4;

/// Linear-interpolation quantile of sorted data. Infinite entries sort last.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = libm::floor(h) as usize;
            let hi = (lo + 1).min(n - 1);
            let f = h - lo as f64;
            if f == 0.0 || sorted[lo] == sorted[hi] {
                sorted[lo]
            } else {
                sorted[lo] + f * (sorted[hi] - sorted[lo])
            }
        }
    }
}

pub fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    quantile(&sorted(values), 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub min: f64,
    pub p1: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
}

impl Percentiles {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let s = sorted(values);
        Percentiles {
            min: s.first().copied().unwrap_or(f64::NAN),
            p1: quantile(&s, 0.01),
            p5: quantile(&s, 0.05),
            p50: quantile(&s, 0.5),
            p95: quantile(&s, 0.95),
            p99: quantile(&s, 0.99),
            max: s.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn interquantile_range(&self) -> f64 {
        self.p95 - self.p5
    }
}

/// Empirical CDF as sorted sample points; `F(x_k) = (k+1)/n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        EmpiricalCdf { values: sorted(values) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// `(x, F(x))` at `points` evenly spaced probabilities, for plotting.
    pub fn grid(&self, points: usize) -> Vec<(f64, f64)> {
        let n = self.values.len();
        if n == 0 || points == 0 {
            return Vec::new();
        }
        (0..points)
            .map(|k| {
                let p = if points == 1 { 1.0 } else { k as f64 / (points - 1) as f64 };
                let idx = (libm::ceil(p * n as f64) as usize).clamp(1, n) - 1;
                (self.values[idx], (idx + 1) as f64 / n as f64)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeBand {
    pub age: u32,
    /// Scenarios still alive at this age.
    pub count: usize,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub mean: f64,
}

/// Per-age distribution of yearly quantities across scenarios.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgeBands {
    pub brokerage_withdrawal: Vec<AgeBand>,
    pub ira_withdrawal: Vec<AgeBand>,
    pub roth_withdrawal: Vec<AgeBand>,
    pub conversion: Vec<AgeBand>,
    pub brokerage: Vec<AgeBand>,
    pub ira: Vec<AgeBand>,
    pub roth: Vec<AgeBand>,
    pub tax: Vec<AgeBand>,
    pub consumption: Vec<AgeBand>,
}

impl AgeBands {
    pub fn of(reports: &[SimulationReport]) -> Self {
        let first = reports.iter().filter_map(|r| r.records.first()).map(|r| r.age).min();
        let last = reports.iter().filter_map(|r| r.records.last()).map(|r| r.age).max();
        let (Some(first), Some(last)) = (first, last) else {
            return AgeBands::default();
        };
        let band = |f: fn(&YearRecord) -> f64| -> Vec<AgeBand> {
            (first..=last)
                .map(|age| {
                    let vals: Vec<f64> = reports
                        .iter()
                        .filter_map(|r| r.records.iter().find(|y| y.age == age))
                        .map(f)
                        .collect();
                    let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
                    let s = sorted(vals.iter().copied());
                    AgeBand {
                        age,
                        count: s.len(),
                        p5: quantile(&s, 0.05),
                        p50: quantile(&s, 0.5),
                        p95: quantile(&s, 0.95),
                        mean,
                    }
                })
                .collect()
        };
        AgeBands {
            brokerage_withdrawal: band(|y| y.b),
            ira_withdrawal: band(|y| y.i),
            roth_withdrawal: band(|y| y.r),
            conversion: band(|y| y.ic),
            brokerage: band(|y| y.brokerage_start),
            ira: band(|y| y.ira_start),
            roth: band(|y| y.roth_start),
            tax: band(|y| y.tax),
            consumption: band(|y| y.consumption),
        }
    }

    pub fn median_at(bands: &[AgeBand], age: u32) -> Option<f64> {
        bands.iter().find(|b| b.age == age).map(|b| b.p50)
    }
}

/// One scenario's comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub scenario_id: usize,
    pub death_age: u32,
    pub mpc_bequest: f64,
    pub benchmark_bequest: f64,
    pub mpc_consumption: f64,
    pub benchmark_consumption: f64,
    /// MPC over benchmark mean consumption.
    pub relative_consumption: f64,
    /// MPC over benchmark bequest; infinite when the benchmark leaves nothing.
    pub relative_bequest: f64,
}

impl PairedOutcome {
    pub fn mpc_larger(&self) -> bool {
        self.mpc_bequest > self.benchmark_bequest + 1e-6 * (1.0 + self.benchmark_bequest.abs())
    }

    pub fn consumption_differs(&self) -> bool {
        (self.relative_consumption - 1.0).abs() > CONSUMPTION_TOLERANCE
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    const TINY: f64 = 1e-6;
    if den > TINY {
        num / den
    } else if num > TINY {
        f64::INFINITY
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedMetrics {
    pub scenarios: usize,
    pub outcomes: Vec<PairedOutcome>,
    pub relative_consumption: Percentiles,
    /// Percentiles over finite relative bequests only.
    pub relative_bequest: Percentiles,
    /// Median over all scenarios, infinite ratios included.
    pub median_relative_bequest: f64,
    pub fraction_consumption_differs: f64,
    pub fraction_mpc_consumes_more: f64,
    pub fraction_mpc_bequest_larger: f64,
    /// Median of `relative_bequest − 1` among scenarios where MPC leaves more.
    pub conditional_median_uplift: f64,
    pub infinite_relative_bequests: usize,
    pub mpc_bequest: Percentiles,
    pub benchmark_bequest: Percentiles,
    pub depletion_fraction_mpc: f64,
    pub depletion_fraction_benchmark: f64,
    pub fallback_years: usize,
    pub max_conservation_error: f64,
}

impl PairedMetrics {
    pub fn relative_bequest_cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(self.outcomes.iter().map(|o| o.relative_bequest).filter(|r| r.is_finite()))
    }

    pub fn relative_consumption_cdf(&self) -> EmpiricalCdf {
        EmpiricalCdf::new(self.outcomes.iter().map(|o| o.relative_consumption))
    }
}

/// Pairs reports by scenario id; both slices must cover the same ids.
pub fn aggregate(mpc: &[SimulationReport], benchmark: &[SimulationReport]) -> Result<PairedMetrics> {
    if mpc.len() != benchmark.len() {
        return Err(Error::Unpaired(format!("{} MPC reports vs {} benchmark", mpc.len(), benchmark.len())));
    }
    if mpc.is_empty() {
        return Err(Error::Unpaired("no reports".into()));
    }
    let mut outcomes = Vec::with_capacity(mpc.len());
    for (m, b) in mpc.iter().zip(benchmark) {
        if m.scenario_id != b.scenario_id || m.death_age != b.death_age {
            return Err(Error::Unpaired(format!("scenario {} paired with {}", m.scenario_id, b.scenario_id)));
        }
        if m.policy != PolicyKind::Mpc || b.policy != PolicyKind::Benchmark {
            return Err(Error::Unpaired(format!("scenario {} has the wrong policy order", m.scenario_id)));
        }
        outcomes.push(PairedOutcome {
            scenario_id: m.scenario_id,
            death_age: m.death_age,
            mpc_bequest: m.bequest,
            benchmark_bequest: b.bequest,
            mpc_consumption: m.mean_consumption,
            benchmark_consumption: b.mean_consumption,
            relative_consumption: ratio(m.mean_consumption, b.mean_consumption),
            relative_bequest: ratio(m.bequest, b.bequest),
        });
    }
    let n = outcomes.len() as f64;
    let frac = |f: &dyn Fn(&PairedOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
    let uplift = median(outcomes.iter().filter(|o| o.mpc_larger() && o.relative_bequest.is_finite()).map(|o| o.relative_bequest - 1.0));
    Ok(PairedMetrics {
        scenarios: outcomes.len(),
        relative_consumption: Percentiles::of(outcomes.iter().map(|o| o.relative_consumption)),
        relative_bequest: Percentiles::of(outcomes.iter().map(|o| o.relative_bequest).filter(|r| r.is_finite())),
        median_relative_bequest: median(outcomes.iter().map(|o| o.relative_bequest)),
        fraction_consumption_differs: frac(&|o| o.consumption_differs()),
        fraction_mpc_consumes_more: frac(&|o| o.relative_consumption > 1.0 + CONSUMPTION_TOLERANCE),
        fraction_mpc_bequest_larger: frac(&|o| o.mpc_larger()),
        conditional_median_uplift: uplift,
        infinite_relative_bequests: outcomes.iter().filter(|o| o.relative_bequest.is_infinite()).count(),
        mpc_bequest: Percentiles::of(mpc.iter().map(|r| r.bequest)),
        benchmark_bequest: Percentiles::of(benchmark.iter().map(|r| r.bequest)),
        depletion_fraction_mpc: mpc.iter().filter(|r| r.depleted).count() as f64 / n,
        depletion_fraction_benchmark: benchmark.iter().filter(|r| r.depleted).count() as f64 / n,
        fallback_years: mpc.iter().map(|r| r.fallback_years).sum(),
        max_conservation_error: mpc.iter().chain(benchmark).map(|r| r.conservation_error).fold(0.0, f64::max),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let s = sorted([4.0, 1.0, 3.0, 2.0]);
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert!((quantile(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn infinity_sorts_last() {
        let s = sorted([f64::INFINITY, 1.0, 2.0]);
        assert_eq!(quantile(&s, 0.5), 2.0);
        assert_eq!(s[2], f64::INFINITY);
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(ratio(2.0, 1.0), 2.0);
        assert_eq!(ratio(5.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(0.0, 0.0), 1.0);
        assert_eq!(ratio(-3.0, -1.0), 1.0);
    }

    #[test]
    fn cdf_steps() {
        let c = EmpiricalCdf::new([3.0, 1.0, 2.0, 2.0]);
        assert_eq!(c.eval(0.5), 0.0);
        assert_eq!(c.eval(2.0), 0.75);
        assert_eq!(c.eval(9.0), 1.0);
        let g = c.grid(3);
        assert_eq!(g.first().unwrap().0, 1.0);
        assert_eq!(g.last().unwrap(), &(3.0, 1.0));
    }
}
