//! Period life tables: death probabilities, remaining expectancy, death-year
//! sampling and the planning-horizon rule.
//!
//! Timing convention: a retiree sampled to die at age `d` is alive and acts in
//! every year up to and including `d`; the bequest is valued at the end of
//! that year. `d − age` therefore counts completed years survived, whose mean
//! is the curtate expectancy.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::round_half_up;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifeTable {
    pub sex: Sex,
    pub min_age: u32,
    /// q_x for ages `min_age ..= terminal_age()`.
    pub death_prob: Vec<f64>,
    /// Ingested e_x, same indexing; derived from q when absent.
    pub expected_remaining: Option<Vec<f64>>,
}

/// Gompertz–Makeham hazard `a + b·exp(θx)`, with annual q capped below the
/// terminal age.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GompertzMakeham {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub q_cap: f64,
}

impl GompertzMakeham {
    /// Parameters tuned so the curtate expectancy at 65 is 20.0 years (female)
    /// and 17.5 years (male), with the age pattern of recent US period tables.
    pub fn us_like(sex: Sex) -> Self {
        match sex {
            Sex::Female => GompertzMakeham { a: 0.0005, b: 1.416_181_648_049_671_8e-5, theta: 0.10, q_cap: 0.5 },
            Sex::Male => GompertzMakeham { a: 0.0008, b: 2.872_078_058_379_358e-5, theta: 0.095, q_cap: 0.5 },
        }
    }

    fn cumulative_hazard(&self, x: f64) -> f64 {
        self.a * x + self.b / self.theta * libm::exp(self.theta * x)
    }

    pub fn q(&self, age: u32) -> f64 {
        let x = age as f64;
        let h = self.cumulative_hazard(x + 1.0) - self.cumulative_hazard(x);
        (1.0 - libm::exp(-h)).min(self.q_cap)
    }
}

impl LifeTable {
    pub fn new(sex: Sex, min_age: u32, death_prob: Vec<f64>, expected_remaining: Option<Vec<f64>>) -> Result<Self> {
        let t = LifeTable { sex, min_age, death_prob, expected_remaining };
        t.validate()?;
        Ok(t)
    }

    /// Ages 0 through 119 from a Gompertz–Makeham hazard; q at 119 is 1.
    pub fn from_gompertz_makeham(sex: Sex, gm: GompertzMakeham) -> Self {
        let mut q: Vec<f64> = (0..120).map(|a| gm.q(a)).collect();
        q[119] = 1.0;
        LifeTable { sex, min_age: 0, death_prob: q, expected_remaining: None }
    }

    /// Built-in synthetic table (see [`GompertzMakeham::us_like`]).
    pub fn synthetic(sex: Sex) -> Self {
        Self::from_gompertz_makeham(sex, GompertzMakeham::us_like(sex))
    }

    pub fn validate(&self) -> Result<()> {
        if self.death_prob.is_empty() {
            return Err(Error::invalid("life table has no rows"));
        }
        if self.death_prob.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::invalid("death probabilities must lie in [0, 1]"));
        }
        if *self.death_prob.last().unwrap() != 1.0 {
            return Err(Error::invalid("death probability at the terminal age must be 1"));
        }
        if let Some(e) = &self.expected_remaining {
            if e.len() != self.death_prob.len() || e.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("expectancy column must cover every age with finite nonnegative values"));
            }
        }
        Ok(())
    }

    pub fn terminal_age(&self) -> u32 {
        self.min_age + self.death_prob.len() as u32 - 1
    }

    fn index(&self, age: u32) -> Result<usize> {
        if age < self.min_age || age > self.terminal_age() {
            return Err(Error::AgeOutOfRange { age, min: self.min_age, max: self.terminal_age() });
        }
        Ok((age - self.min_age) as usize)
    }

    pub fn q(&self, age: u32) -> Result<f64> {
        Ok(self.death_prob[self.index(age)?])
    }

    /// Curtate expectancy from q: `Σ_{k≥1} Π_{j<k} (1 − q_{x+j})`.
    pub fn derived_expectancy(&self, age: u32) -> Result<f64> {
        let i = self.index(age)?;
        let mut survive = 1.0;
        let mut e = 0.0;
        for q in &self.death_prob[i..] {
            survive *= 1.0 - q;
            e += survive;
        }
        Ok(e)
    }

    /// Ingested expectancy when present, derived otherwise.
    pub fn expected_remaining(&self, age: u32) -> Result<f64> {
        let i = self.index(age)?;
        match &self.expected_remaining {
            Some(e) => Ok(e[i]),
            None => self.derived_expectancy(age),
        }
    }

    /// Fills the expectancy column from q.
    pub fn with_derived_expectancy(mut self) -> Self {
        let e = (self.min_age..=self.terminal_age()).map(|a| self.derived_expectancy(a).unwrap()).collect();
        self.expected_remaining = Some(e);
        self
    }

    /// Age in the last year lived, drawing one Bernoulli(q_x) at the end of
    /// each year starting with the current one.
    pub fn sample_death_age<R: Rng + ?Sized>(&self, age: u32, rng: &mut R) -> Result<u32> {
        let mut x = self.index(age)?;
        loop {
            let q = self.death_prob[x];
            if q >= 1.0 || rng.random::<f64>() < q {
                return Ok(self.min_age + x as u32);
            }
            x += 1;
        }
    }

    /// T = min(round(factor · e_age), max_age − age), at least one year.
    pub fn planning_horizon(&self, age: u32, factor: f64, max_age: u32) -> Result<usize> {
        if !(factor >= 1.0) {
            return Err(Error::invalid("horizon factor must be at least 1"));
        }
        let e = self.expected_remaining(age)?;
        let by_rule = round_half_up(factor * e).max(0.0) as usize;
        let cap = max_age.saturating_sub(age) as usize;
        Ok(by_rule.min(cap).max(1))
    }
}

pub fn planning_horizon(age: u32, table: &LifeTable, inflation_factor: f64, max_age: u32) -> Result<usize> {
    table.planning_horizon(age, inflation_factor, max_age)
}

pub fn sample_death_year<R: Rng + ?Sized>(age: u32, table: &LifeTable, rng: &mut R) -> Result<u32> {
    table.sample_death_age(age, rng)
}

pub fn expected_remaining(age: u32, table: &LifeTable) -> Result<f64> {
    table.expected_remaining(age)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn certain_death_at(age: u32) -> LifeTable {
        let mut q = vec![0.0; 121];
        q[age as usize] = 1.0;
        q[120] = 1.0;
        LifeTable::new(Sex::Female, 0, q, None).unwrap()
    }

    #[test]
    fn horizon_rule() {
        let t = LifeTable::synthetic(Sex::Female);
        assert_eq!(t.planning_horizon(65, 1.5, 120).unwrap(), 30);
        // death certain at 125, so e_115 = 10
        let mut q = vec![0.0; 126];
        q[125] = 1.0;
        let long = LifeTable::new(Sex::Male, 0, q, None).unwrap();
        assert!((long.expected_remaining(115).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(long.planning_horizon(115, 1.5, 120).unwrap(), 5);
        let mut q20 = vec![0.0; 86];
        q20[85] = 1.0;
        let t20 = LifeTable::new(Sex::Female, 0, q20, None).unwrap();
        assert!((t20.expected_remaining(65).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(t20.planning_horizon(65, 1.0, 120).unwrap(), 20);
        assert!(t.planning_horizon(130, 1.5, 120).is_err());
    }

    #[test]
    fn expectancy_edge_cases() {
        let t = certain_death_at(90);
        assert!((t.expected_remaining(80).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(t.expected_remaining(90).unwrap(), 0.0);
        let ingested = LifeTable::synthetic(Sex::Male).with_derived_expectancy();
        assert!((ingested.expected_remaining(70).unwrap() - ingested.derived_expectancy(70).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn certain_and_impossible_death() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = certain_death_at(90);
        for start in [60, 75, 90] {
            assert_eq!(t.sample_death_age(start, &mut rng).unwrap(), 90);
        }
        let mut q = vec![0.0; 120];
        q[119] = 1.0;
        let never = LifeTable::new(Sex::Male, 0, q, None).unwrap();
        assert_eq!(never.sample_death_age(65, &mut rng).unwrap(), 119);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(LifeTable::new(Sex::Male, 0, vec![0.1, 0.5], None).is_err());
        assert!(LifeTable::new(Sex::Male, 0, vec![1.5, 1.0], None).is_err());
    }
}
