use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Invertible piecewise-linear map that symmetrizes inflation around its
/// median `k`: slope `s_minus` below, `s_plus` above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwlTransform {
    pub kink: f64,
    pub slope_below: f64,
    pub slope_above: f64,
}

impl PwlTransform {
    pub fn paper() -> Self {
        PwlTransform { kink: 0.029, slope_below: 2.5, slope_above: 0.75 }
    }

    pub fn identity() -> Self {
        PwlTransform { kink: 0.0, slope_below: 1.0, slope_above: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope_below > 0.0 && self.slope_above > 0.0 && self.kink.is_finite()) {
            return Err(Error::invalid("transform slopes must be positive"));
        }
        Ok(())
    }

    pub fn apply(&self, z: f64) -> f64 {
        let s = if z < self.kink { self.slope_below } else { self.slope_above };
        (z - self.kink) * s + self.kink
    }

    pub fn invert(&self, y: f64) -> f64 {
        let s = if y < self.kink { self.slope_below } else { self.slope_above };
        (y - self.kink) / s + self.kink
    }
}

pub fn transform_inflation(z: f64, t: &PwlTransform) -> f64 {
    t.apply(z)
}

pub fn inverse_transform(y: f64, t: &PwlTransform) -> f64 {
    t.invert(y)
}

/// `x_{t+1} = μ + A (x_t − μ) + ε_t`, `ε_t ~ N(0, Σ^ε)`, with
/// `x = (Treasury rate, transformed inflation)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub mean: Vec2,
    pub coefficient: Mat2,
    pub noise_cov: Mat2,
}

fn mat_vec(a: &Mat2, x: Vec2) -> Vec2 {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Lower Cholesky factor of a symmetric PSD 2×2 matrix; semidefinite
/// directions get a zero column.
fn chol2(s: &Mat2) -> Mat2 {
    let l11 = libm::sqrt(s[0][0].max(0.0));
    let l21 = if l11 > 0.0 { s[1][0] / l11 } else { 0.0 };
    let l22 = libm::sqrt((s[1][1] - l21 * l21).max(0.0));
    [[l11, 0.0], [l21, l22]]
}

impl VarModel {
    /// Fit to 1962–2023 annual Treasury and transformed inflation data.
    pub fn paper() -> Self {
        VarModel {
            mean: [0.058, 0.029],
            coefficient: [[0.80, 0.24], [-0.04, 0.88]],
            noise_cov: [[0.72e-4, 0.48e-4], [0.48e-4, 1.47e-4]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.noise_cov;
        let finite = self.mean.iter().chain(self.coefficient.iter().flatten()).chain(s.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("VAR parameters must be finite"));
        }
        if (s[0][1] - s[1][0]).abs() > 1e-12 * (1.0 + s[0][1].abs()) {
            return Err(Error::invalid("noise covariance must be symmetric"));
        }
        if s[0][0] < 0.0 || s[1][1] < 0.0 || s[0][0] * s[1][1] - s[0][1] * s[1][0] < -1e-18 {
            return Err(Error::invalid("noise covariance must be positive semidefinite"));
        }
        Ok(())
    }

    pub fn spectral_radius(&self) -> f64 {
        let a = &self.coefficient;
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let r = libm::sqrt(disc);
            (tr / 2.0 + r).abs().max((tr / 2.0 - r).abs())
        } else {
            libm::sqrt(det)
        }
    }

    /// One step with a given noise draw.
    pub fn step(&self, x: Vec2, noise: Vec2) -> Vec2 {
        let d = mat_vec(&self.coefficient, [x[0] - self.mean[0], x[1] - self.mean[1]]);
        [self.mean[0] + d[0] + noise[0], self.mean[1] + d[1] + noise[1]]
    }

    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let l = chol2(&self.noise_cov);
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        [l[0][0] * z0, l[1][0] * z0 + l[1][1] * z1]
    }

    pub fn simulate<R: Rng + ?Sized>(&self, x0: Vec2, horizon: usize, rng: &mut R) -> Vec<Vec2> {
        let mut x = x0;
        (0..horizon)
            .map(|_| {
                x = self.step(x, self.noise(rng));
                x
            })
            .collect()
    }

    /// `μ + A^h (x − μ)`.
    pub fn forecast(&self, x: Vec2, h: usize) -> Vec2 {
        let mut d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        for _ in 0..h {
            d = mat_vec(&self.coefficient, d);
        }
        [self.mean[0] + d[0], self.mean[1] + d[1]]
    }

    /// Solves `Σ = A Σ Aᵀ + Σ^ε` as the 4×4 system `(I − A⊗A) vec Σ = vec Σ^ε`.
    pub fn steady_state_cov(&self) -> Result<Mat2> {
        if self.spectral_radius() >= 1.0 {
            return Err(Error::invalid("spectral radius of A must be below 1 for a steady state"));
        }
        let a = &self.coefficient;
        let mut m = [[0.0; 5]; 4];
        for i in 0..2 {
            for j in 0..2 {
                let r = 2 * i + j;
                for k in 0..2 {
                    for l in 0..2 {
                        let c = 2 * k + l;
                        m[r][c] = if r == c { 1.0 } else { 0.0 } - a[i][k] * a[j][l];
                    }
                }
                m[r][4] = self.noise_cov[i][j];
            }
        }
        for col in 0..4 {
            let piv = (col..4).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs())).unwrap();
            if m[piv][col].abs() < 1e-300 {
                return Err(Error::Singular("steady-state system".into()));
            }
            m.swap(col, piv);
            for r in 0..4 {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    for c in col..5 {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
        let v: Vec<f64> = (0..4).map(|r| m[r][4] / m[r][r]).collect();
        let off = 0.5 * (v[1] + v[2]);
        Ok([[v[0], off], [off, v[3]]])
    }

    /// `‖Σ − A Σ Aᵀ − Σ^ε‖∞`.
    pub fn lyapunov_residual(&self, sigma: &Mat2) -> f64 {
        let asa = mat_mul(&mat_mul(&self.coefficient, sigma), &transpose(&self.coefficient));
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                r = r.max((sigma[i][j] - asa[i][j] - self.noise_cov[i][j]).abs());
            }
        }
        r
    }

    /// Draw from the stationary distribution `N(μ, Σ^ss)`.
    pub fn sample_steady_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec2> {
        let l = chol2(&self.steady_state_cov()?);
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        Ok([self.mean[0] + l[0][0] * z0, self.mean[1] + l[1][0] * z0 + l[1][1] * z1])
    }
}

pub fn steady_state_cov(model: &VarModel) -> Result<Mat2> {
    model.steady_state_cov()
}

pub fn forecast_var(model: &VarModel, x: Vec2, horizons: &[usize]) -> Vec<Vec2> {
    horizons.iter().map(|&h| model.forecast(x, h)).collect()
}

pub fn simulate_var(model: &VarModel, x0: Vec2, horizon: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.simulate(x0, horizon, &mut rng)
}

/// Least-squares VAR(1) with the mean fixed at the sample mean.
pub fn fit_var(series: &[Vec2]) -> Result<VarModel> {
    if series.len() < 3 {
        return Err(Error::invalid("VAR fit needs at least 3 observations"));
    }
    let n = series.len() as f64;
    let mean = [series.iter().map(|x| x[0]).sum::<f64>() / n, series.iter().map(|x| x[1]).sum::<f64>() / n];
    fit_var_with_mean(series, mean)
}

/// Least-squares VAR(1) around a given mean: minimizes
/// `Σ ‖(x_{t+1} − μ) − A (x_t − μ)‖²`; Σ^ε is the residual covariance
/// (denominator n − 1).
pub fn fit_var_with_mean(series: &[Vec2], mean: Vec2) -> Result<VarModel> {
    if series.len() < 3 {
        return Err(Error::invalid("VAR fit needs at least 3 observations"));
    }
    let centered: Vec<Vec2> = series.iter().map(|x| [x[0] - mean[0], x[1] - mean[1]]).collect();
    let mut sxx = [[0.0; 2]; 2];
    let mut syx = [[0.0; 2]; 2];
    for w in centered.windows(2) {
        let (x, y) = (w[0], w[1]);
        for i in 0..2 {
            for j in 0..2 {
                sxx[i][j] += x[i] * x[j];
                syx[i][j] += y[i] * x[j];
            }
        }
    }
    let det = sxx[0][0] * sxx[1][1] - sxx[0][1] * sxx[1][0];
    let scale = (sxx[0][0] * sxx[1][1]).abs();
    if !(det.abs() > 1e-12 * scale) || scale == 0.0 {
        return Err(Error::Singular("regressor covariance".into()));
    }
    let inv = [[sxx[1][1] / det, -sxx[0][1] / det], [-sxx[1][0] / det, sxx[0][0] / det]];
    let a = mat_mul(&syx, &inv);
    let resid: Vec<Vec2> = centered
        .windows(2)
        .map(|w| {
            let p = mat_vec(&a, w[0]);
            [w[1][0] - p[0], w[1][1] - p[1]]
        })
        .collect();
    let k = resid.len() as f64;
    let rm = [resid.iter().map(|r| r[0]).sum::<f64>() / k, resid.iter().map(|r| r[1]).sum::<f64>() / k];
    let mut cov = [[0.0; 2]; 2];
    for r in &resid {
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += (r[i] - rm[i]) * (r[j] - rm[j]) / (k - 1.0);
            }
        }
    }
    Ok(VarModel { mean, coefficient: a, noise_cov: cov })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pwl_examples() {
        let t = PwlTransform::paper();
        assert_eq!(t.apply(0.029), 0.029);
        assert!((t.apply(0.049) - 0.044).abs() < 1e-15);
        assert!((t.invert(t.apply(-0.02)) + 0.02).abs() < 1e-15);
    }

    #[test]
    fn steady_state_cases() {
        let zero_a = VarModel { coefficient: [[0.0; 2]; 2], ..VarModel::paper() };
        let s = zero_a.steady_state_cov().unwrap();
        assert_eq!(s, zero_a.noise_cov);
        let half = VarModel { mean: [0.0; 2], coefficient: [[0.5, 0.0], [0.0, 0.5]], noise_cov: [[1.0, 0.0], [0.0, 1.0]] };
        let s = half.steady_state_cov().unwrap();
        assert!((s[0][0] - 1.0 / 0.75).abs() < 1e-14 && (s[1][1] - 1.0 / 0.75).abs() < 1e-14 && s[0][1].abs() < 1e-15);
        let p = VarModel::paper();
        assert!(p.lyapunov_residual(&p.steady_state_cov().unwrap()) <= 1e-10);
        let explosive = VarModel { coefficient: [[1.0, 0.0], [0.0, 0.5]], ..p };
        assert!(explosive.steady_state_cov().is_err());
    }

    #[test]
    fn noiseless_paths() {
        let p = VarModel { noise_cov: [[0.0; 2]; 2], ..VarModel::paper() };
        let path = simulate_var(&p, p.mean, 10, 1);
        assert!(path.iter().all(|x| *x == p.mean));
        let x0 = [0.1, 0.0];
        let path = simulate_var(&p, x0, 5, 1);
        for (h, x) in path.iter().enumerate() {
            let f = p.forecast(x0, h + 1);
            assert!((x[0] - f[0]).abs() < 1e-15 && (x[1] - f[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_series_is_singular() {
        let s = [[0.05, 0.02]; 10];
        assert!(matches!(fit_var(&s), Err(Error::Singular(_))));
    }
}
