//! Homogeneous self-dual interior point method (Mehrotra predictor-corrector)
//! for `min cᵀx  s.t.  A x = b, x ≥ 0`, with normal equations solved by the
//! sparse Cholesky in [`super::chol`].

use alloc::vec;
use alloc::vec::Vec;

use super::chol::NormalCholesky;
use super::sparse::CscMatrix;

const STEP_FACTOR: f64 = 0.99995;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Failed,
}

pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

struct Residuals {
    p: Vec<f64>,
    d: Vec<f64>,
    g: f64,
    mu: f64,
}

struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct State<'a> {
    a: &'a CscMatrix,
    b: &'a [f64],
    c: &'a [f64],
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

impl State<'_> {
    fn residuals(&self) -> Residuals {
        let ax = self.a.mul_vec(&self.x);
        let aty = self.a.mul_t_vec(&self.y);
        let p = self.b.iter().zip(&ax).map(|(b, ax)| b * self.tau - ax).collect();
        let d = (0..self.x.len()).map(|j| self.c[j] * self.tau - aty[j] - self.z[j]).collect();
        let g = dot(self.c, &self.x) - dot(self.b, &self.y) + self.kappa;
        let mu = (dot(&self.x, &self.z) + self.tau * self.kappa) / (self.x.len() + 1) as f64;
        Residuals { p, d, g, mu }
    }

    /// `M v = r2 + A D r1`, `u = D (Aᵀ v − r1)` with `D = x / z`.
    fn sym_solve(&self, chol: &NormalCholesky, dinv: &[f64], r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let scaled: Vec<f64> = dinv.iter().zip(r1).map(|(d, r)| d * r).collect();
        let adr = self.a.mul_vec(&scaled);
        let rhs: Vec<f64> = r2.iter().zip(&adr).map(|(a, b)| a + b).collect();
        let v = chol.solve(&rhs);
        let atv = self.a.mul_t_vec(&v);
        let u = (0..dinv.len()).map(|j| dinv[j] * (atv[j] - r1[j])).collect();
        (u, v)
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        chol: &NormalCholesky,
        dinv: &[f64],
        pq: &(Vec<f64>, Vec<f64>),
        res: &Residuals,
        gamma: f64,
        correction: Option<&Direction>,
    ) -> Direction {
        let eta = 1.0 - gamma;
        let n = self.x.len();
        let rhat_p: Vec<f64> = res.p.iter().map(|v| eta * v).collect();
        let rhat_d: Vec<f64> = res.d.iter().map(|v| eta * v).collect();
        let rhat_g = eta * res.g;
        let mut rhat_xs: Vec<f64> = (0..n).map(|j| gamma * res.mu - self.x[j] * self.z[j]).collect();
        let mut rhat_tk = gamma * res.mu - self.tau * self.kappa;
        if let Some(pred) = correction {
            for j in 0..n {
                rhat_xs[j] -= pred.x[j] * pred.z[j];
            }
            rhat_tk -= pred.tau * pred.kappa;
        }
        let r1: Vec<f64> = (0..n).map(|j| rhat_d[j] - rhat_xs[j] / self.x[j]).collect();
        let (u, v) = self.sym_solve(chol, dinv, &r1, &rhat_p);
        let (p, q) = pq;
        let num = rhat_g + rhat_tk / self.tau - (-dot(self.c, &u) + dot(self.b, &v));
        let den = self.kappa / self.tau + (-dot(self.c, p) + dot(self.b, q));
        let d_tau = num / den;
        let dx: Vec<f64> = (0..n).map(|j| u[j] + d_tau * p[j]).collect();
        let dy: Vec<f64> = (0..v.len()).map(|i| v[i] + d_tau * q[i]).collect();
        let dz: Vec<f64> = (0..n).map(|j| (rhat_xs[j] - self.z[j] * dx[j]) / self.x[j]).collect();
        let d_kappa = (rhat_tk - self.kappa * d_tau) / self.tau;
        Direction { x: dx, y: dy, z: dz, tau: d_tau, kappa: d_kappa }
    }

    fn step_length(&self, d: &Direction, factor: f64) -> f64 {
        let mut alpha: f64 = 1.0;
        for j in 0..self.x.len() {
            if d.x[j] < 0.0 {
                alpha = alpha.min(factor * self.x[j] / -d.x[j]);
            }
            if d.z[j] < 0.0 {
                alpha = alpha.min(factor * self.z[j] / -d.z[j]);
            }
        }
        if d.tau < 0.0 {
            alpha = alpha.min(factor * self.tau / -d.tau);
        }
        if d.kappa < 0.0 {
            alpha = alpha.min(factor * self.kappa / -d.kappa);
        }
        alpha
    }
}

pub(crate) fn solve(a: &CscMatrix, b: &[f64], c: &[f64], tol: f64, max_iter: usize) -> IpmResult {
    let n = a.ncols;
    let m = a.nrows;
    let mut st = State { a, b, c, x: vec![1.0; n], y: vec![0.0; m], z: vec![1.0; n], tau: 1.0, kappa: 1.0 };
    let mut chol = NormalCholesky::analyze(a);

    let res0 = st.residuals();
    let rp0 = norm2(&res0.p).max(1.0);
    let rd0 = norm2(&res0.d).max(1.0);
    let rg0 = res0.g.abs().max(1.0);
    let mu0 = res0.mu;

    let mut iterations = 0;
    let status = loop {
        let res = st.residuals();
        let rho_p = norm2(&res.p) / rp0;
        let rho_d = norm2(&res.d) / rd0;
        let rho_g = res.g.abs() / rg0;
        let rho_mu = res.mu / mu0;
        let bty = dot(b, &st.y);
        let rho_a = (dot(c, &st.x) - bty).abs() / (st.tau + bty.abs());
        if !(rho_p.is_finite() && rho_d.is_finite() && rho_a.is_finite()) {
            break IpmStatus::Failed;
        }
        if rho_p < tol && rho_d < tol && rho_a < tol {
            break IpmStatus::Optimal;
        }
        if (rho_p < tol && rho_d < tol && rho_g < tol && st.tau < tol * st.kappa.max(1.0))
            || (rho_mu < tol && st.tau < tol * st.kappa.min(1.0))
        {
            break if bty > tol { IpmStatus::Infeasible } else { IpmStatus::Unbounded };
        }
        if iterations >= max_iter {
            break IpmStatus::Failed;
        }
        iterations += 1;

        let dinv: Vec<f64> = (0..n).map(|j| st.x[j] / st.z[j]).collect();
        chol.factor(a, &dinv, 0.0);
        let pq = st.sym_solve(&chol, &dinv, c, b);

        let pred = st.direction(&chol, &dinv, &pq, &res, 0.0, None);
        let alpha_aff = st.step_length(&pred, 1.0);
        let gamma = (1.0 - alpha_aff) * (1.0 - alpha_aff) * (1.0 - alpha_aff).min(0.1);
        let dir = st.direction(&chol, &dinv, &pq, &res, gamma, Some(&pred));
        let alpha = st.step_length(&dir, STEP_FACTOR);
        if !alpha.is_finite() || alpha <= 0.0 {
            break IpmStatus::Failed;
        }
        for j in 0..n {
            st.x[j] += alpha * dir.x[j];
            st.z[j] += alpha * dir.z[j];
        }
        for i in 0..m {
            st.y[i] += alpha * dir.y[i];
        }
        st.tau += alpha * dir.tau;
        st.kappa += alpha * dir.kappa;
    };

    let tau = st.tau;
    IpmResult {
        status,
        x: st.x.iter().map(|v| v / tau).collect(),
        z: st.z.iter().map(|v| v / tau).collect(),
        iterations,
    }
}

/// Moves a converged interior point onto the face it is converging to: entries
/// with `x_j < z_j` are pinned at zero and the rest are projected onto
/// `A x = b` by a minimum-norm correction. When that leaves the nonnegative
/// orthant (a degenerate vertex), the correction is instead weighted by
/// `x_j / z_j`, which moves small entries proportionally less. Returns `None`
/// when neither attempt stays nonnegative and reduces the residual.
pub(crate) fn polish(a: &CscMatrix, b: &[f64], x: &[f64], z: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let before = crate::math::max_abs(&residual(a, b, x));
    let mut chol = NormalCholesky::analyze(a);
    let pinned: Vec<f64> = (0..n).map(|j| if x[j] >= z[j] { 1.0 } else { 0.0 }).collect();
    let start: Vec<f64> = (0..n).map(|j| x[j] * pinned[j]).collect();
    if let Some(p) = project(a, b, &mut chol, start, &pinned, before) {
        return Some(p);
    }
    let weights: Vec<f64> = (0..n).map(|j| if z[j] > 0.0 { x[j] / z[j] } else { 1.0 }).collect();
    let wmax = weights.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let weights: Vec<f64> = weights.iter().map(|w| w / wmax).collect();
    project(a, b, &mut chol, x.to_vec(), &weights, before)
}

fn residual(a: &CscMatrix, b: &[f64], v: &[f64]) -> Vec<f64> {
    let av = a.mul_vec(v);
    b.iter().zip(av).map(|(b, av)| b - av).collect()
}

/// Iterated weighted minimum-norm correction `x += D Aᵀ (A D Aᵀ)⁻¹ r`.
fn project(a: &CscMatrix, b: &[f64], chol: &mut NormalCholesky, mut xp: Vec<f64>, d: &[f64], before: f64) -> Option<Vec<f64>> {
    let scale = (0..a.ncols)
        .flat_map(|j| a.col(j).map(move |(_, v)| d[j] * v * v))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    chol.factor(a, d, 1e-13 * scale);
    for _ in 0..3 {
        let r = residual(a, b, &xp);
        if crate::math::max_abs(&r) == 0.0 {
            break;
        }
        let v = chol.solve(&r);
        let dx = a.mul_t_vec(&v);
        for j in 0..xp.len() {
            xp[j] += d[j] * dx[j];
        }
    }
    let after = crate::math::max_abs(&residual(a, b, &xp));
    (xp.iter().all(|&v| v >= 0.0) && after <= before).then_some(xp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tiny_standard_form() {
        // min -x1 - x2  s.t. x1 + x2 + s = 1
        let a = CscMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]);
        let r = solve(&a, &[1.0], &[-1.0, -1.0, 0.0], 1e-10, 100);
        assert_eq!(r.status, IpmStatus::Optimal);
        assert!((r.x[0] + r.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x1 = -1 with x1 >= 0
        let a = CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]);
        let r = solve(&a, &[-1.0], &[0.0], 1e-8, 100);
        assert_eq!(r.status, IpmStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -x1 s.t. x1 - x2 = 0
        let a = CscMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]);
        let r = solve(&a, &[0.0], &[-1.0, 0.0], 1e-8, 100);
        assert_eq!(r.status, IpmStatus::Unbounded);
    }
}
