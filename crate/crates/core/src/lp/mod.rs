//! Linear programming: problem container, embedded interior point backend,
//! independent residual checks and a plain-text dump format.

mod chol;
mod dump;
mod ipm;
mod presolve;
mod sparse;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use dump::{parse_triplet_dump, write_triplet_dump};
pub use sparse::CscMatrix;

use crate::error::{Error, Result};

/// `maximize cᵀx  s.t.  A x = b,  G x ≤ h,  l ≤ x ≤ u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardFormLP {
    pub objective: Vec<f64>,
    pub eq_matrix: CscMatrix,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: CscMatrix,
    pub ineq_rhs: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
    pub variable_names: Vec<String>,
}

impl StandardFormLP {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.eq_matrix.ncols != n || self.ineq_matrix.ncols != n {
            return Err(Error::invalid("matrix column count differs from objective length"));
        }
        if self.eq_rhs.len() != self.eq_matrix.nrows || self.ineq_rhs.len() != self.ineq_matrix.nrows {
            return Err(Error::invalid("right-hand side length differs from row count"));
        }
        if self.lower_bounds.len() != n || self.upper_bounds.len() != n {
            return Err(Error::invalid("bound vectors differ from objective length"));
        }
        if !self.variable_names.is_empty() && self.variable_names.len() != n {
            return Err(Error::invalid("variable_names length differs from objective length"));
        }
        for j in 0..n {
            let (l, u) = (self.lower_bounds[j], self.upper_bounds[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::invalid(alloc::format!("bad bounds [{l}, {u}] on variable {j}")));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective)
            || !finite(&self.eq_rhs)
            || !finite(&self.ineq_rhs)
            || !finite(&self.eq_matrix.values)
            || !finite(&self.ineq_matrix.values)
        {
            return Err(Error::invalid("non-finite coefficient"));
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LPSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    /// Seconds; zero when built without `std`.
    pub solve_time: f64,
    pub iterations: usize,
}

impl LPSolution {
    fn failed(status: LpStatus, n: usize, iterations: usize) -> Self {
        LPSolution {
            status,
            primal: vec![f64::NAN; n],
            objective_value: f64::NAN,
            max_eq_residual: f64::NAN,
            max_ineq_violation: f64::NAN,
            solve_time: 0.0,
            iterations,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    pub max_bound_violation: f64,
}

/// Recomputes residuals of `sol.primal` against `lp` from scratch.
pub fn validate_solution(lp: &StandardFormLP, sol: &LPSolution) -> Result<ResidualReport> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal);
    }
    Ok(residuals(lp, &sol.primal))
}

pub(crate) fn residuals(lp: &StandardFormLP, x: &[f64]) -> ResidualReport {
    let ax = lp.eq_matrix.mul_vec(x);
    let max_eq_residual = ax.iter().zip(&lp.eq_rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let gx = lp.ineq_matrix.mul_vec(x);
    let max_ineq_violation = gx.iter().zip(&lp.ineq_rhs).fold(0.0f64, |m, (g, h)| m.max(g - h));
    let mut max_bound_violation: f64 = 0.0;
    for j in 0..x.len() {
        max_bound_violation = max_bound_violation.max(lp.lower_bounds[j] - x[j]).max(x[j] - lp.upper_bounds[j]);
    }
    ResidualReport { max_eq_residual, max_ineq_violation, max_bound_violation }
}

/// A solver that can stand in for the embedded one.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, lp: &StandardFormLP, tolerance: f64) -> Result<LPSolution>;
}

/// The embedded homogeneous self-dual interior point solver.
#[derive(Clone, Copy, Debug)]
pub struct InteriorPoint {
    pub max_iterations: usize,
    pub polish: bool,
    pub equilibrate: bool,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        InteriorPoint { max_iterations: 200, polish: true, equilibrate: true }
    }
}

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Solves `lp` with the embedded backend.
pub fn solve_lp(lp: &StandardFormLP, tolerance: f64) -> Result<LPSolution> {
    InteriorPoint::default().solve(lp, tolerance)
}

#[cfg(feature = "std")]
struct Clock(std::time::Instant);
#[cfg(feature = "std")]
impl Clock {
    fn start() -> Self {
        Clock(std::time::Instant::now())
    }
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
#[cfg(not(feature = "std"))]
struct Clock;
#[cfg(not(feature = "std"))]
impl Clock {
    fn start() -> Self {
        Clock
    }
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Ruiz equilibration: returns row and column scale factors such that
/// `diag(r) A diag(s)` has entries of magnitude at most one, with every
/// nonempty row and column close to one in max norm.
fn equilibrate(a: &mut CscMatrix, passes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut row_scale = vec![1.0; a.nrows];
    let mut col_scale = vec![1.0; a.ncols];
    for _ in 0..passes {
        let mut row_max = vec![0.0f64; a.nrows];
        let mut col_max = vec![0.0f64; a.ncols];
        for j in 0..a.ncols {
            for k in a.col_ptr[j]..a.col_ptr[j + 1] {
                let v = a.values[k].abs();
                row_max[a.row_idx[k]] = row_max[a.row_idx[k]].max(v);
                col_max[j] = col_max[j].max(v);
            }
        }
        let rf: Vec<f64> = row_max.iter().map(|&v| if v > 0.0 { 1.0 / libm::sqrt(v) } else { 1.0 }).collect();
        let cf: Vec<f64> = col_max.iter().map(|&v| if v > 0.0 { 1.0 / libm::sqrt(v) } else { 1.0 }).collect();
        for j in 0..a.ncols {
            for k in a.col_ptr[j]..a.col_ptr[j + 1] {
                a.values[k] *= rf[a.row_idx[k]] * cf[j];
            }
        }
        for i in 0..a.nrows {
            row_scale[i] *= rf[i];
        }
        for j in 0..a.ncols {
            col_scale[j] *= cf[j];
        }
    }
    (row_scale, col_scale)
}

impl SolverBackend for InteriorPoint {
    fn name(&self) -> &str {
        "embedded-hsde-ipm"
    }

    fn solve(&self, lp: &StandardFormLP, tolerance: f64) -> Result<LPSolution> {
        lp.validate()?;
        if !(tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let clock = Clock::start();
        let n = lp.num_vars();
        let reduced = match presolve::reduce(lp) {
            presolve::Presolved::Infeasible => {
                let mut s = LPSolution::failed(LpStatus::Infeasible, n, 0);
                s.solve_time = clock.seconds();
                return Ok(s);
            }
            presolve::Presolved::Reduced(r) => r,
        };

        let (x_red, iterations) = if reduced.a.nrows == 0 {
            if reduced.c.iter().any(|&c| c < 0.0) {
                let mut s = LPSolution::failed(LpStatus::Unbounded, n, 0);
                s.solve_time = clock.seconds();
                return Ok(s);
            }
            (vec![0.0; reduced.c.len()], 0)
        } else {
            let mut a = reduced.a.clone();
            let (rs, cs) = if self.equilibrate {
                equilibrate(&mut a, 12)
            } else {
                (vec![1.0; a.nrows], vec![1.0; a.ncols])
            };
            let mut b: Vec<f64> = reduced.b.iter().zip(&rs).map(|(b, r)| b * r).collect();
            let mut c: Vec<f64> = reduced.c.iter().zip(&cs).map(|(c, s)| c * s).collect();
            let beta = crate::math::max_abs(&b).max(1.0);
            let gamma = crate::math::max_abs(&c).max(1.0);
            b.iter_mut().for_each(|v| *v /= beta);
            c.iter_mut().for_each(|v| *v /= gamma);

            let res = ipm::solve(&a, &b, &c, tolerance, self.max_iterations);
            let status = match res.status {
                ipm::IpmStatus::Optimal => None,
                ipm::IpmStatus::Infeasible => Some(LpStatus::Infeasible),
                ipm::IpmStatus::Unbounded => Some(LpStatus::Unbounded),
                ipm::IpmStatus::Failed => Some(LpStatus::NumericalFailure),
            };
            if let Some(st) = status {
                let mut s = LPSolution::failed(st, n, res.iterations);
                s.solve_time = clock.seconds();
                return Ok(s);
            }
            let mut x = res.x;
            if self.polish {
                if let Some(p) = ipm::polish(&a, &b, &x, &res.z) {
                    x = p;
                }
            }
            let x: Vec<f64> = x.iter().zip(&cs).map(|(x, s)| x * s * beta).collect();
            (x, res.iterations)
        };

        let mut primal = reduced.recovery.original(&x_red);
        // Bound-respecting cleanup: values a rounding error outside a bound
        // are put back on it.
        for j in 0..n {
            let (l, u) = (lp.lower_bounds[j], lp.upper_bounds[j]);
            let slack = 1e-12 * (1.0 + primal[j].abs());
            if primal[j] < l && primal[j] > l - slack {
                primal[j] = l;
            }
            if primal[j] > u && primal[j] < u + slack {
                primal[j] = u;
            }
        }
        let r = residuals(lp, &primal);
        let eq_ok = r.max_eq_residual <= 1e-6 * (1.0 + crate::math::max_abs(&lp.eq_rhs));
        let in_ok = r.max_ineq_violation <= 1e-6 * (1.0 + crate::math::max_abs(&lp.ineq_rhs));
        let bd_ok = r.max_bound_violation <= 1e-9 * (1.0 + crate::math::max_abs(&primal));
        let status = if eq_ok && in_ok && bd_ok { LpStatus::Optimal } else { LpStatus::NumericalFailure };
        Ok(LPSolution {
            status,
            objective_value: lp.objective_at(&primal),
            primal,
            max_eq_residual: r.max_eq_residual,
            max_ineq_violation: r.max_ineq_violation,
            solve_time: clock.seconds(),
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ineq_lp(obj: Vec<f64>, g: Vec<(usize, usize, f64)>, h: Vec<f64>) -> StandardFormLP {
        let n = obj.len();
        StandardFormLP {
            objective: obj,
            eq_matrix: CscMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ineq_matrix: CscMatrix::from_triplets(h.len(), n, &g),
            ineq_rhs: h,
            lower_bounds: vec![0.0; n],
            upper_bounds: vec![f64::INFINITY; n],
            variable_names: (0..n).map(|j| alloc::format!("x{j}")).collect(),
        }
    }

    #[test]
    fn single_active_bound() {
        let lp = ineq_lp(vec![1.0], vec![(0, 0, 1.0)], vec![1.0]);
        let s = solve_lp(&lp, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] - 1.0).abs() < 1e-9);
        assert!((s.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_objective_on_simplex_edge() {
        let mut lp = ineq_lp(vec![1.0, 1.0], vec![], vec![]);
        lp.eq_matrix = CscMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        lp.eq_rhs = vec![1.0];
        let s = solve_lp(&lp, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-9);
        assert!(s.primal.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn perturbed_primal_shows_violation() {
        let lp = ineq_lp(vec![3.0, 2.0], vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)], vec![4.0, 6.0]);
        let mut s = solve_lp(&lp, DEFAULT_TOLERANCE).unwrap();
        s.primal[0] += 0.1;
        let r = validate_solution(&lp, &s).unwrap();
        assert!((r.max_ineq_violation - 0.1).abs() < 1e-8);
    }

    #[test]
    fn validate_rejects_non_optimal() {
        let lp = ineq_lp(vec![1.0], vec![(0, 0, 1.0)], vec![1.0]);
        let s = LPSolution::failed(LpStatus::Infeasible, 1, 0);
        assert_eq!(validate_solution(&lp, &s), Err(Error::NotOptimal));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut lp = ineq_lp(vec![1.0], vec![], vec![]);
        lp.lower_bounds[0] = 2.0;
        lp.upper_bounds[0] = 1.0;
        assert!(solve_lp(&lp, 1e-8).is_err());
        assert_eq!(lp.variable_names[0], "x0".to_string());
    }
}
