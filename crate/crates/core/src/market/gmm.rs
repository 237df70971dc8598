use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::norm_cdf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    /// Zero is accepted and gives a point mass.
    pub std_devs: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        let g = GaussianMixture { weights, means, std_devs };
        g.validate()?;
        Ok(g)
    }

    /// Three-component fit to annual market returns. The published weights
    /// (.38/.25/.38) are rounded and sum to 1.01; they are renormalized.
    pub fn paper() -> Self {
        let raw = [0.38, 0.25, 0.38];
        let total: f64 = raw.iter().sum();
        GaussianMixture {
            weights: raw.iter().map(|w| w / total).collect(),
            means: vec![0.28, -0.11, 0.11],
            std_devs: vec![0.11, 0.16, 0.12],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.weights.len();
        if m == 0 || self.means.len() != m || self.std_devs.len() != m {
            return Err(Error::invalid("mixture vectors must be nonempty and equally long"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid(format!("mixture weights must be nonnegative and sum to 1 (got {total})")));
        }
        if self.std_devs.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("mixture means must be finite and standard deviations nonnegative"));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn std_dev(&self) -> f64 {
        let mu = self.mean();
        let second: f64 = (0..self.components())
            .map(|k| self.weights[k] * (self.std_devs[k] * self.std_devs[k] + self.means[k] * self.means[k]))
            .sum();
        libm::sqrt((second - mu * mu).max(0.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (0..self.components())
            .map(|k| {
                let s = self.std_devs[k];
                let p = if s > 0.0 {
                    norm_cdf((x - self.means[k]) / s)
                } else if x >= self.means[k] {
                    1.0
                } else {
                    0.0
                };
                self.weights[k] * p
            })
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.components() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        self.means[k] + self.std_devs[k] * z
    }
}

/// `n` i.i.d. draws from a ChaCha8 stream keyed by `seed`.
pub fn sample_market_returns(gmm: &GaussianMixture, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| gmm.sample(&mut rng)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorPolicy {
    /// Clamp a collapsing component's standard deviation at the floor.
    Floor,
    /// Fail the fit.
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmFitOptions {
    pub max_iterations: usize,
    /// Stop when the log-likelihood gain per iteration falls below
    /// `tolerance · |loglik|`.
    pub tolerance: f64,
    /// Floor on component standard deviations as a fraction of the data's.
    pub min_std_fraction: f64,
    pub floor_policy: FloorPolicy,
}

impl Default for GmmFitOptions {
    fn default() -> Self {
        GmmFitOptions { max_iterations: 1000, tolerance: 1e-12, min_std_fraction: 1e-3, floor_policy: FloorPolicy::Floor }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmmFit {
    pub model: GaussianMixture,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Log-likelihood after each M step.
    pub trace: Vec<f64>,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

fn log_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - libm::log(sd) - LN_SQRT_2PI
}

fn e_step(data: &[f64], g: &GaussianMixture, resp: &mut [Vec<f64>]) -> f64 {
    let m = g.components();
    let mut ll = 0.0;
    let mut lp = vec![0.0; m];
    for (i, &x) in data.iter().enumerate() {
        let mut top = f64::NEG_INFINITY;
        for k in 0..m {
            lp[k] = libm::log(g.weights[k]) + log_density(x, g.means[k], g.std_devs[k]);
            top = top.max(lp[k]);
        }
        let s: f64 = lp.iter().map(|v| libm::exp(v - top)).sum();
        let lse = top + libm::log(s);
        ll += lse;
        for k in 0..m {
            resp[k][i] = libm::exp(lp[k] - lse);
        }
    }
    ll
}

/// Expectation–maximization fit of an `m`-component mixture. Starting means
/// are picked k-means++ style from the data with a ChaCha8 stream keyed by
/// `seed`.
pub fn fit_gmm(data: &[f64], m: usize, seed: u64, opts: GmmFitOptions) -> Result<GmmFit> {
    let n = data.len();
    if m == 0 || n < 10 * m {
        return Err(Error::invalid(format!("need at least {} observations for {m} components, got {n}", 10 * m)));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("returns must be finite"));
    }
    let mean = crate::math::mean(data);
    let sd = crate::math::std_dev(data);
    if !(sd > 0.0) {
        return Err(Error::invalid("returns have zero spread"));
    }
    let floor = opts.min_std_fraction * sd;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = vec![data[rng.random_range(0..n)]];
    while means.len() < m {
        let d2: Vec<f64> = data
            .iter()
            .map(|x| means.iter().map(|c| (x - c) * (x - c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        means.push(data[pick]);
    }
    let mut g = GaussianMixture { weights: vec![1.0 / m as f64; m], means, std_devs: vec![sd; m] };
    if m == 1 {
        g.means[0] = mean;
    }

    let mut resp = vec![vec![0.0; n]; m];
    let mut trace = Vec::new();
    let mut ll = e_step(data, &g, &mut resp);
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        for k in 0..m {
            let nk: f64 = resp[k].iter().sum();
            if nk <= 0.0 {
                return Err(Error::invalid("a mixture component lost all its data"));
            }
            let mu = resp[k].iter().zip(data).map(|(r, x)| r * x).sum::<f64>() / nk;
            let var = resp[k].iter().zip(data).map(|(r, x)| r * (x - mu) * (x - mu)).sum::<f64>() / nk;
            let mut s = libm::sqrt(var);
            if s < floor {
                match opts.floor_policy {
                    FloorPolicy::Floor => s = floor,
                    FloorPolicy::Error => return Err(Error::invalid(format!("component {k} collapsed (std {s:e})"))),
                }
            }
            g.weights[k] = nk / n as f64;
            g.means[k] = mu;
            g.std_devs[k] = s;
        }
        let next = e_step(data, &g, &mut resp);
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain.abs() <= opts.tolerance * ll.abs().max(1.0) {
            break;
        }
    }
    Ok(GmmFit { model: g, log_likelihood: ll, iterations, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_mixture_is_a_point_mass() {
        let g = GaussianMixture::new(vec![1.0], vec![0.1], vec![0.0]).unwrap();
        assert!(sample_market_returns(&g, 100, 7).iter().all(|&x| x == 0.1));
    }

    #[test]
    fn single_component_fit_is_closed_form() {
        let data = sample_market_returns(&GaussianMixture::new(vec![1.0], vec![0.05], vec![0.2]).unwrap(), 500, 3);
        let fit = fit_gmm(&data, 1, 0, GmmFitOptions::default()).unwrap();
        assert!((fit.model.means[0] - crate::math::mean(&data)).abs() < 1e-15);
        assert!((fit.model.std_devs[0] - crate::math::std_dev(&data)).abs() < 1e-15);
    }

    #[test]
    fn too_many_components_rejected() {
        let data = [0.0; 25];
        assert!(fit_gmm(&data, 3, 0, GmmFitOptions::default()).is_err());
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(GaussianMixture::new(vec![0.38, 0.25, 0.38], vec![0.0; 3], vec![0.1; 3]).is_err());
        GaussianMixture::paper().validate().unwrap();
    }
}
