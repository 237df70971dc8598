//! Reading and writing the plain-text data files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use retire_core::lifetable::{LifeTable, Sex};
use retire_core::market::MarketModel;
use retire_core::planner::{Plan, PlanInputs};
use retire_core::sim::{PairedMetrics, SimulationReport};
use retire_core::tax::{RmdSchedule, TaxSchedule};

use crate::error::{AppError, AppResult};

fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::data(path, e))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    toml::from_str(&read_text(path)?).map_err(|e| AppError::data(path, e))
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let s = toml::to_string_pretty(value).map_err(|e| AppError::data(path, e))?;
    fs::write(path, s).map_err(|e| AppError::data(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| AppError::data(path, e))?;
    fs::write(path, s).map_err(|e| AppError::data(path, e))
}

fn reader(path: &Path) -> AppResult<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_path(path).map_err(|e| AppError::data(path, e))
}

fn writer(path: &Path) -> AppResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| AppError::data(path, e))
}

fn rows<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    reader(path)?.deserialize().collect::<Result<_, _>>().map_err(|e| AppError::data(path, e))
}

pub fn read_tax_schedule(path: &Path) -> AppResult<TaxSchedule> {
    let t: TaxSchedule = read_toml(path)?;
    t.validate().map_err(|e| AppError::data(path, e))?;
    Ok(t)
}

#[derive(Deserialize, Serialize)]
struct RmdRow {
    age: u32,
    divisor: f64,
}

/// `age,divisor`, ages contiguous; the first listed age is where RMDs start.
pub fn read_rmd_csv(path: &Path) -> AppResult<RmdSchedule> {
    let rows: Vec<RmdRow> = rows(path)?;
    let first = rows.first().ok_or_else(|| AppError::data(path, "empty RMD table"))?.age;
    let mut divisor_by_age = BTreeMap::new();
    for (k, r) in rows.iter().enumerate() {
        if r.age != first + k as u32 {
            return Err(AppError::data(path, format!("ages must be contiguous, found {} after {}", r.age, first + k as u32 - 1)));
        }
        divisor_by_age.insert(r.age, r.divisor);
    }
    let s = RmdSchedule { start_age: first, divisor_by_age };
    s.validate().map_err(|e| AppError::data(path, e))?;
    Ok(s)
}

pub fn write_rmd_csv(path: &Path, s: &RmdSchedule) -> AppResult<()> {
    let mut w = writer(path)?;
    for (&age, &divisor) in s.divisor_by_age.range(s.start_age..) {
        w.serialize(RmdRow { age, divisor }).map_err(|e| AppError::data(path, e))?;
    }
    w.flush().map_err(|e| AppError::data(path, e))
}

#[derive(Deserialize, Serialize)]
struct LifeRow {
    age: u32,
    q_female: f64,
    q_male: f64,
    e_female: Option<f64>,
    e_male: Option<f64>,
}

/// `age,q_female,q_male,e_female,e_male`; the expectancy columns may be blank.
pub fn read_lifetable_csv(path: &Path, sex: Sex) -> AppResult<LifeTable> {
    let rows: Vec<LifeRow> = rows(path)?;
    let first = rows.first().ok_or_else(|| AppError::data(path, "empty life table"))?.age;
    for (k, r) in rows.iter().enumerate() {
        if r.age != first + k as u32 {
            return Err(AppError::data(path, "ages must be contiguous"));
        }
    }
    let (q, e): (Vec<f64>, Vec<Option<f64>>) = rows
        .iter()
        .map(|r| match sex {
            Sex::Female => (r.q_female, r.e_female),
            Sex::Male => (r.q_male, r.e_male),
        })
        .unzip();
    let e = if e.iter().all(Option::is_some) { Some(e.into_iter().flatten().collect()) } else { None };
    LifeTable::new(sex, first, q, e).map_err(|e| AppError::data(path, e))
}

pub fn write_lifetable_csv(path: &Path, female: &LifeTable, male: &LifeTable) -> AppResult<()> {
    if female.min_age != male.min_age || female.death_prob.len() != male.death_prob.len() {
        return Err(AppError::data(path, "female and male tables cover different ages"));
    }
    let mut w = writer(path)?;
    for k in 0..female.death_prob.len() {
        let age = female.min_age + k as u32;
        let e = |t: &LifeTable| t.expected_remaining(age).ok();
        let row = LifeRow { age, q_female: female.death_prob[k], q_male: male.death_prob[k], e_female: e(female), e_male: e(male) };
        w.serialize(row).map_err(|e| AppError::data(path, e))?;
    }
    w.flush().map_err(|e| AppError::data(path, e))
}

#[derive(Deserialize)]
struct MarketRow {
    #[allow(dead_code)]
    year: i32,
    market_return: f64,
}

#[derive(Deserialize)]
struct RateRow {
    #[allow(dead_code)]
    year: i32,
    treasury_rate: f64,
    inflation_rate: f64,
}

/// `year,market_return` as fractions.
pub fn read_market_returns(path: &Path) -> AppResult<Vec<f64>> {
    Ok(rows::<MarketRow>(path)?.into_iter().map(|r| r.market_return).collect())
}

/// `year,treasury_rate,inflation_rate` as fractions.
pub fn read_rates(path: &Path) -> AppResult<Vec<(f64, f64)>> {
    Ok(rows::<RateRow>(path)?.into_iter().map(|r| (r.treasury_rate, r.inflation_rate)).collect())
}

pub fn read_market_model(path: &Path) -> AppResult<MarketModel> {
    let m: MarketModel = read_toml(path)?;
    m.gmm.validate().map_err(|e| AppError::data(path, e))?;
    m.inflation_transform.validate().map_err(|e| AppError::data(path, e))?;
    m.var.validate().map_err(|e| AppError::data(path, e))?;
    Ok(m)
}

/// One row per plan year, in the column order of the export format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub year: usize,
    pub age: u32,
    #[serde(rename = "B")]
    pub brokerage: f64,
    #[serde(rename = "I")]
    pub ira: f64,
    #[serde(rename = "R")]
    pub roth: f64,
    pub b: f64,
    pub ic: f64,
    pub id: f64,
    pub iw: f64,
    pub rc: f64,
    pub rd: f64,
    pub rw: f64,
    pub tax: f64,
    pub c: f64,
    pub q: f64,
}

/// Balances are at the start of each year; `q` repeats the bequest.
pub fn plan_rows(plan: &Plan) -> Vec<PlanRow> {
    (0..plan.horizon())
        .map(|t| PlanRow {
            year: t + 1,
            age: plan.start_age + t as u32,
            brokerage: plan.brokerage[t],
            ira: plan.ira[t],
            roth: plan.roth[t],
            b: plan.b[t],
            ic: plan.ic[t],
            id: plan.id[t],
            iw: plan.iw[t],
            rc: plan.rc[t],
            rd: plan.rd[t],
            rw: plan.rw[t],
            tax: plan.tax[t],
            c: plan.consumption,
            q: plan.bequest,
        })
        .collect()
}

pub fn write_plan_csv(path: &Path, plan: &Plan) -> AppResult<()> {
    let mut w = writer(path)?;
    for r in plan_rows(plan) {
        w.serialize(r).map_err(|e| AppError::data(path, e))?;
    }
    w.flush().map_err(|e| AppError::data(path, e))
}

/// The plan inputs next to the plan, so a run can be re-solved.
pub fn write_plan_inputs(path: &Path, inputs: &PlanInputs) -> AppResult<()> {
    write_json(path, inputs)
}

#[derive(Serialize)]
struct ScenarioRow {
    scenario: usize,
    death_age: u32,
    mpc_bequest: f64,
    benchmark_bequest: f64,
    relative_bequest: f64,
    mpc_consumption: f64,
    benchmark_consumption: f64,
    relative_consumption: f64,
    mpc_depleted: bool,
    benchmark_depleted: bool,
    mpc_fallback_years: usize,
}

pub fn write_scenario_csv(path: &Path, metrics: &PairedMetrics, mpc: &[SimulationReport], bench: &[SimulationReport]) -> AppResult<()> {
    let mut w = writer(path)?;
    for ((o, m), b) in metrics.outcomes.iter().zip(mpc).zip(bench) {
        let row = ScenarioRow {
            scenario: o.scenario_id,
            death_age: o.death_age,
            mpc_bequest: o.mpc_bequest,
            benchmark_bequest: o.benchmark_bequest,
            relative_bequest: o.relative_bequest,
            mpc_consumption: o.mpc_consumption,
            benchmark_consumption: o.benchmark_consumption,
            relative_consumption: o.relative_consumption,
            mpc_depleted: m.depleted,
            benchmark_depleted: b.depleted,
            mpc_fallback_years: m.fallback_years,
        };
        w.serialize(row).map_err(|e| AppError::data(path, e))?;
    }
    w.flush().map_err(|e| AppError::data(path, e))
}

/// Long format: one row per scenario, policy and year.
pub fn write_yearly_csv(path: &Path, reports: &[&[SimulationReport]]) -> AppResult<()> {
    let fail = |e: csv::Error| AppError::data(path, e);
    // csv cannot flatten a struct into a row, so the record's own header is
    // taken from a throwaway write and prefixed.
    let mut probe = csv::Writer::from_writer(vec![]);
    probe.serialize(retire_core::policy::YearRecord::default()).map_err(fail)?;
    let probe = probe.into_inner().map_err(|e| AppError::data(path, e))?;
    let fields = String::from_utf8_lossy(&probe).lines().next().unwrap_or_default().to_string();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(fail)?;
    let mut header = vec!["scenario".to_string(), "policy".to_string()];
    header.extend(fields.split(',').map(str::to_string));
    w.write_record(&header).map_err(fail)?;
    for set in reports {
        for r in *set {
            let policy = match r.policy {
                retire_core::sim::PolicyKind::Mpc => "mpc",
                retire_core::sim::PolicyKind::Benchmark => "benchmark",
            };
            for y in &r.records {
                w.serialize((r.scenario_id, policy, y)).map_err(fail)?;
            }
        }
    }
    w.flush().map_err(|e| AppError::data(path, e))
}

/// `value,probability` pairs of an empirical CDF.
pub fn write_cdf_csv(path: &Path, points: &[(f64, f64)]) -> AppResult<()> {
    let mut f = fs::File::create(path).map_err(|e| AppError::data(path, e))?;
    let mut s = String::from("value,probability\n");
    for (x, p) in points {
        s.push_str(&format!("{x},{p}\n"));
    }
    f.write_all(s.as_bytes()).map_err(|e| AppError::data(path, e))
}
