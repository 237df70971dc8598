//! One retirement funding plan: the LP over balances, withdrawal components,
//! taxes and a constant consumption level, maximizing bequest less a
//! shortfall penalty.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{CscMatrix, InteriorPoint, LPSolution, LpStatus, SolverBackend, StandardFormLP, DEFAULT_TOLERANCE};
use crate::math::pos;
use crate::tax::TaxSchedule;

/// Tie-breaking weight on Σ τ_t that keeps the tax epigraph tight.
pub const DEFAULT_TIGHTNESS_WEIGHT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    /// T, the number of planned years.
    pub horizon: usize,
    /// Age in the first planned year; only used to label output.
    #[serde(default)]
    pub start_age: u32,
    pub initial_brokerage: f64,
    pub initial_ira: f64,
    pub initial_roth: f64,
    /// δ₀, brokerage basis over value.
    pub basis_ratio: f64,
    /// Gross real returns, one per planned year.
    pub returns_brokerage: Vec<f64>,
    pub returns_ira: Vec<f64>,
    pub returns_roth: Vec<f64>,
    pub earned_income: Vec<f64>,
    pub additional_income: Vec<f64>,
    pub liabilities: Vec<f64>,
    /// κ_t, the RMD fraction of the start-of-year IRA balance.
    pub rmd_fractions: Vec<f64>,
    pub tax_schedule: TaxSchedule,
    pub deposit_limit: f64,
    pub target_consumption: f64,
    pub shortfall_weight: f64,
    #[serde(default = "default_tightness")]
    pub tightness_weight: f64,
}

fn default_tightness() -> f64 {
    DEFAULT_TIGHTNESS_WEIGHT
}

impl PlanInputs {
    pub fn validate(&self) -> Result<()> {
        let t = self.horizon;
        if t == 0 {
            return Err(Error::invalid("horizon must be at least one year"));
        }
        let series: [(&str, &Vec<f64>); 7] = [
            ("returns_brokerage", &self.returns_brokerage),
            ("returns_ira", &self.returns_ira),
            ("returns_roth", &self.returns_roth),
            ("earned_income", &self.earned_income),
            ("additional_income", &self.additional_income),
            ("liabilities", &self.liabilities),
            ("rmd_fractions", &self.rmd_fractions),
        ];
        for (name, v) in series {
            if v.len() != t {
                return Err(Error::invalid(format!("{name} has {} entries, horizon is {t}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        for (name, v) in [
            ("initial_brokerage", self.initial_brokerage),
            ("initial_ira", self.initial_ira),
            ("initial_roth", self.initial_roth),
            ("basis_ratio", self.basis_ratio),
            ("deposit_limit", self.deposit_limit),
            ("target_consumption", self.target_consumption),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        let returns = self.returns_brokerage.iter().chain(&self.returns_ira).chain(&self.returns_roth);
        if returns.clone().any(|r| !(*r > 0.0)) {
            return Err(Error::invalid("gross returns must be positive"));
        }
        if self.earned_income.iter().any(|e| *e < 0.0) {
            return Err(Error::invalid("earned income must be nonnegative"));
        }
        if self.rmd_fractions.iter().any(|k| !(0.0..=1.0).contains(k)) {
            return Err(Error::invalid("rmd fractions must lie in [0, 1]"));
        }
        if !(self.shortfall_weight > 0.0 && self.shortfall_weight.is_finite()) {
            return Err(Error::invalid("shortfall_weight must be positive"));
        }
        if !(self.tightness_weight >= 0.0 && self.tightness_weight.is_finite()) {
            return Err(Error::invalid("tightness_weight must be nonnegative"));
        }
        self.tax_schedule.validate()
    }

    /// ζ = ξ·(1 − δ₀)₊
    pub fn gains_coefficient(&self) -> f64 {
        self.tax_schedule.gains_coefficient(self.basis_ratio)
    }
}

/// Column positions of the LP variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableIndex {
    pub horizon: usize,
    stride: usize,
    flows: usize,
    pub has_gain_epigraph: bool,
    pub consumption: usize,
    pub shortfall: usize,
    pub bequest: usize,
    pub total: usize,
}

const F_B: usize = 0;
const F_I: usize = 1;
const F_R: usize = 2;
const F_IC: usize = 3;
const F_ID: usize = 4;
const F_IW: usize = 5;
const F_RC: usize = 6;
const F_RD: usize = 7;
const F_RW: usize = 8;
const F_TAX: usize = 9;
const F_GAIN: usize = 10;

impl VariableIndex {
    fn new(horizon: usize, has_gain_epigraph: bool) -> Self {
        let stride = if has_gain_epigraph { 11 } else { 10 };
        let flows = 3 * (horizon + 1);
        let consumption = flows + stride * horizon;
        VariableIndex {
            horizon,
            stride,
            flows,
            has_gain_epigraph,
            consumption,
            shortfall: consumption + 1,
            bequest: consumption + 2,
            total: consumption + 3,
        }
    }

    /// B_t for t = 0..=T (t = 0 is the first planned year).
    pub fn brokerage(&self, t: usize) -> usize {
        t
    }
    pub fn ira(&self, t: usize) -> usize {
        self.horizon + 1 + t
    }
    pub fn roth(&self, t: usize) -> usize {
        2 * (self.horizon + 1) + t
    }
    fn flow(&self, t: usize, k: usize) -> usize {
        self.flows + self.stride * t + k
    }
    pub fn b(&self, t: usize) -> usize {
        self.flow(t, F_B)
    }
    pub fn i(&self, t: usize) -> usize {
        self.flow(t, F_I)
    }
    pub fn r(&self, t: usize) -> usize {
        self.flow(t, F_R)
    }
    pub fn ic(&self, t: usize) -> usize {
        self.flow(t, F_IC)
    }
    pub fn id(&self, t: usize) -> usize {
        self.flow(t, F_ID)
    }
    pub fn iw(&self, t: usize) -> usize {
        self.flow(t, F_IW)
    }
    pub fn rc(&self, t: usize) -> usize {
        self.flow(t, F_RC)
    }
    pub fn rd(&self, t: usize) -> usize {
        self.flow(t, F_RD)
    }
    pub fn rw(&self, t: usize) -> usize {
        self.flow(t, F_RW)
    }
    pub fn tax(&self, t: usize) -> usize {
        self.flow(t, F_TAX)
    }
    /// g_t ≥ (b_t)₊, present only when ζ > 0.
    pub fn gain(&self, t: usize) -> Option<usize> {
        self.has_gain_epigraph.then(|| self.flow(t, F_GAIN))
    }
}

/// Problem size in two conventions: the model's own (each relaxed tax
/// constraint counted once, balance nonnegativity counted as inequalities,
/// the bequest definition not counted) and the raw LP rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSize {
    pub variables: usize,
    pub model_equalities: usize,
    pub model_inequalities: usize,
    pub lp_equality_rows: usize,
    pub lp_inequality_rows: usize,
    /// Extra rows from the tax pieces beyond the first and from g_t ≥ b_t.
    pub epigraph_rows: usize,
}

pub struct BuiltLp {
    pub lp: StandardFormLP,
    pub index: VariableIndex,
    pub size: ProblemSize,
}

struct Rows {
    trip: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl Rows {
    fn new() -> Self {
        Rows { trip: Vec::new(), rhs: Vec::new() }
    }
    fn push(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let r = self.rhs.len();
        for &(c, v) in entries {
            if v != 0.0 {
                self.trip.push((r, c, v));
            }
        }
        self.rhs.push(rhs);
    }
    fn matrix(&self, ncols: usize) -> CscMatrix {
        CscMatrix::from_triplets(self.rhs.len(), ncols, &self.trip)
    }
}

pub fn build_lp(inputs: &PlanInputs) -> Result<BuiltLp> {
    inputs.validate()?;
    let t_len = inputs.horizon;
    let zeta = inputs.gains_coefficient();
    let ix = VariableIndex::new(t_len, zeta > 0.0);
    let n = ix.total;
    let pieces = inputs.tax_schedule.epigraph();

    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut names = vec![String::new(); n];
    for t in 0..=t_len {
        names[ix.brokerage(t)] = format!("B[{}]", t + 1);
        names[ix.ira(t)] = format!("I[{}]", t + 1);
        names[ix.roth(t)] = format!("R[{}]", t + 1);
    }
    for (col, v) in [(ix.brokerage(0), inputs.initial_brokerage), (ix.ira(0), inputs.initial_ira), (ix.roth(0), inputs.initial_roth)] {
        lower[col] = v;
        upper[col] = v;
    }
    for t in 0..t_len {
        for (col, label) in [
            (ix.b(t), "b"),
            (ix.i(t), "i"),
            (ix.r(t), "r"),
            (ix.ic(t), "ic"),
            (ix.id(t), "id"),
            (ix.iw(t), "iw"),
            (ix.rc(t), "rc"),
            (ix.rd(t), "rd"),
            (ix.rw(t), "rw"),
            (ix.tax(t), "tau"),
        ] {
            names[col] = format!("{label}[{}]", t + 1);
        }
        for col in [ix.b(t), ix.i(t), ix.r(t)] {
            lower[col] = f64::NEG_INFINITY;
        }
        if let Some(g) = ix.gain(t) {
            names[g] = format!("g[{}]", t + 1);
        }
    }
    names[ix.consumption] = "c".into();
    names[ix.shortfall] = "s".into();
    names[ix.bequest] = "q".into();
    lower[ix.bequest] = f64::NEG_INFINITY;

    let mut eq = Rows::new();
    let mut ineq = Rows::new();
    for t in 0..t_len {
        let (rb, ri, rr) = (inputs.returns_brokerage[t], inputs.returns_ira[t], inputs.returns_roth[t]);
        eq.push(&[(ix.brokerage(t + 1), 1.0), (ix.brokerage(t), -rb), (ix.b(t), rb)], 0.0);
        eq.push(&[(ix.ira(t + 1), 1.0), (ix.ira(t), -ri), (ix.i(t), ri)], 0.0);
        eq.push(&[(ix.roth(t + 1), 1.0), (ix.roth(t), -rr), (ix.r(t), rr)], 0.0);
        eq.push(&[(ix.i(t), 1.0), (ix.ic(t), -1.0), (ix.id(t), 1.0), (ix.iw(t), -1.0)], 0.0);
        eq.push(&[(ix.r(t), 1.0), (ix.rc(t), 1.0), (ix.rd(t), 1.0), (ix.rw(t), -1.0)], 0.0);
        let (e, a, l) = (inputs.earned_income[t], inputs.additional_income[t], inputs.liabilities[t]);
        eq.push(
            &[(ix.b(t), 1.0), (ix.i(t), 1.0), (ix.r(t), 1.0), (ix.consumption, -1.0), (ix.tax(t), -1.0)],
            l - e - a,
        );
        eq.push(&[(ix.ic(t), 1.0), (ix.rc(t), -1.0)], 0.0);

        ineq.push(&[(ix.b(t), 1.0), (ix.brokerage(t), -1.0)], 0.0);
        ineq.push(&[(ix.i(t), 1.0), (ix.ira(t), -1.0)], 0.0);
        ineq.push(&[(ix.r(t), 1.0), (ix.roth(t), -1.0)], 0.0);
        ineq.push(&[(ix.ira(t), inputs.rmd_fractions[t]), (ix.iw(t), -1.0)], 0.0);
        ineq.push(&[(ix.id(t), 1.0), (ix.rd(t), 1.0)], inputs.deposit_limit.min(e));
        for p in &pieces {
            let mut row = vec![(ix.ic(t), p.slope), (ix.id(t), -p.slope), (ix.iw(t), p.slope), (ix.tax(t), -1.0)];
            if let Some(g) = ix.gain(t) {
                row.push((g, zeta));
            }
            ineq.push(&row, -p.slope * (e + a) - p.intercept);
        }
        if let Some(g) = ix.gain(t) {
            ineq.push(&[(ix.b(t), 1.0), (g, -1.0)], 0.0);
        }
    }
    eq.push(
        &[(ix.bequest, 1.0), (ix.brokerage(t_len), -1.0), (ix.ira(t_len), -1.0), (ix.roth(t_len), -1.0)],
        0.0,
    );
    ineq.push(&[(ix.consumption, -1.0), (ix.shortfall, -1.0)], -inputs.target_consumption);

    let mut objective = vec![0.0; n];
    objective[ix.bequest] = 1.0;
    objective[ix.shortfall] = -inputs.shortfall_weight;
    for t in 0..t_len {
        objective[ix.tax(t)] = -inputs.tightness_weight;
    }

    let lp = StandardFormLP {
        objective,
        eq_matrix: eq.matrix(n),
        eq_rhs: eq.rhs,
        ineq_matrix: ineq.matrix(n),
        ineq_rhs: ineq.rhs,
        lower_bounds: lower,
        upper_bounds: upper,
        variable_names: names,
    };
    let epigraph_rows = t_len * (pieces.len() - 1) + if ix.has_gain_epigraph { t_len } else { 0 };
    let size = ProblemSize {
        variables: n,
        model_equalities: 7 * t_len,
        model_inequalities: 9 * t_len,
        lp_equality_rows: lp.eq_rhs.len(),
        lp_inequality_rows: lp.ineq_rhs.len(),
        epigraph_rows,
    };
    Ok(BuiltLp { lp, index: ix, size })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub status: LpStatus,
    pub backend: String,
    pub iterations: usize,
    pub solve_time: f64,
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    /// max_t |τ_t − φ(ω_t) − ζ(b_t)₊|
    pub tightness_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub start_age: u32,
    /// Start-of-year balances, T + 1 entries.
    pub brokerage: Vec<f64>,
    pub ira: Vec<f64>,
    pub roth: Vec<f64>,
    pub b: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    pub ic: Vec<f64>,
    pub id: Vec<f64>,
    pub iw: Vec<f64>,
    pub rc: Vec<f64>,
    pub rd: Vec<f64>,
    pub rw: Vec<f64>,
    pub tax: Vec<f64>,
    pub consumption: f64,
    pub bequest: f64,
    pub shortfall: f64,
    pub objective_value: f64,
    pub diagnostics: SolverDiagnostics,
}

impl Plan {
    pub fn horizon(&self) -> usize {
        self.tax.len()
    }

    /// ω_t = i^c − i^d + i^w + e + a
    pub fn taxable_income(&self, inputs: &PlanInputs, t: usize) -> f64 {
        self.ic[t] - self.id[t] + self.iw[t] + inputs.earned_income[t] + inputs.additional_income[t]
    }
}

fn extract(inputs: &PlanInputs, ix: &VariableIndex, sol: &LPSolution, backend: &str) -> Plan {
    let x = &sol.primal;
    let t_len = inputs.horizon;
    let col = |f: &dyn Fn(usize) -> usize| -> Vec<f64> { (0..t_len).map(|t| x[f(t)]).collect() };
    let mut plan = Plan {
        start_age: inputs.start_age,
        brokerage: (0..=t_len).map(|t| x[ix.brokerage(t)]).collect(),
        ira: (0..=t_len).map(|t| x[ix.ira(t)]).collect(),
        roth: (0..=t_len).map(|t| x[ix.roth(t)]).collect(),
        b: col(&|t| ix.b(t)),
        i: col(&|t| ix.i(t)),
        r: col(&|t| ix.r(t)),
        ic: col(&|t| ix.ic(t)),
        id: col(&|t| ix.id(t)),
        iw: col(&|t| ix.iw(t)),
        rc: col(&|t| ix.rc(t)),
        rd: col(&|t| ix.rd(t)),
        rw: col(&|t| ix.rw(t)),
        tax: col(&|t| ix.tax(t)),
        consumption: x[ix.consumption],
        bequest: x[ix.bequest],
        shortfall: x[ix.shortfall],
        objective_value: sol.objective_value,
        diagnostics: SolverDiagnostics {
            status: sol.status,
            backend: backend.into(),
            iterations: sol.iterations,
            solve_time: sol.solve_time,
            max_eq_residual: sol.max_eq_residual,
            max_ineq_violation: sol.max_ineq_violation,
            tightness_residual: 0.0,
        },
    };
    // Simultaneous deposit and withdrawal on the same account nets out; keep
    // the withdrawal at or above the RMD.
    for t in 0..t_len {
        let rmd = inputs.rmd_fractions[t] * plan.ira[t];
        let wash = plan.id[t].min(plan.iw[t] - rmd);
        if wash > 0.0 {
            plan.id[t] -= wash;
            plan.iw[t] -= wash;
        }
        let wash = plan.rd[t].min(plan.rw[t]);
        if wash > 0.0 {
            plan.rd[t] -= wash;
            plan.rw[t] -= wash;
        }
    }
    tighten(inputs, &mut plan);
    plan.diagnostics.tightness_residual = (0..t_len)
        .map(|t| tightness_gap(inputs, &plan, t))
        .fold(0.0, f64::max);
    plan
}

/// Removes any slack the solver left between τ_t and the exact tax. The cash
/// freed this way stays in (or is deposited to) the brokerage account and
/// compounds into the bequest, so the plan only improves. With ζ > 0 a
/// smaller sale also shrinks the gains term: for `b ≥ 0` the cash identity
/// gives `b = K + ζ·b`, hence `b = K / (1 − ζ)`.
fn tighten(inputs: &PlanInputs, plan: &mut Plan) {
    let zeta = inputs.gains_coefficient();
    for t in 0..inputs.horizon {
        let exact = inputs.tax_schedule.income_tax(plan.taxable_income(inputs, t)) + zeta * pos(plan.b[t]);
        if plan.tax[t] <= exact {
            continue;
        }
        let ordinary = exact - zeta * pos(plan.b[t]);
        let k = plan.consumption + inputs.liabilities[t] + ordinary
            - plan.i[t]
            - plan.r[t]
            - inputs.earned_income[t]
            - inputs.additional_income[t];
        let b_new = if k > 0.0 { k / (1.0 - zeta) } else { k };
        if b_new > plan.b[t] {
            continue;
        }
        let freed = plan.b[t] - b_new;
        plan.b[t] = b_new;
        plan.tax[t] = ordinary + zeta * pos(b_new);
        let mut carry = freed;
        for s in t..inputs.horizon {
            carry *= inputs.returns_brokerage[s];
            plan.brokerage[s + 1] += carry;
        }
        plan.bequest += carry;
        plan.objective_value += carry + inputs.tightness_weight * freed;
    }
}

fn tightness_gap(inputs: &PlanInputs, plan: &Plan, t: usize) -> f64 {
    let exact = inputs.tax_schedule.income_tax(plan.taxable_income(inputs, t)) + inputs.gains_coefficient() * pos(plan.b[t]);
    (plan.tax[t] - exact).abs()
}

/// Best-effort location of the first year the plan cannot be funded: run the
/// most generous cash recursion (no taxes, best return) and report where
/// liabilities first exceed everything available.
fn first_unfundable_year(inputs: &PlanInputs) -> Option<usize> {
    let mut wealth = inputs.initial_brokerage + inputs.initial_ira + inputs.initial_roth;
    for t in 0..inputs.horizon {
        let available = wealth + inputs.earned_income[t] + inputs.additional_income[t];
        if inputs.liabilities[t] > available + 1e-9 * (1.0 + available.abs()) {
            return Some(t + 1);
        }
        let growth = inputs.returns_brokerage[t].max(inputs.returns_ira[t]).max(inputs.returns_roth[t]);
        wealth = (available - inputs.liabilities[t]) * growth;
    }
    None
}

/// Solves with the embedded interior point solver at the default tolerance.
pub fn solve_plan(inputs: &PlanInputs) -> Result<Plan> {
    solve_plan_with(inputs, &InteriorPoint::default(), DEFAULT_TOLERANCE)
}

/// Absolute accuracy a returned plan must reach on every constraint family;
/// looser solves are repeated at a tighter tolerance.
pub const PLAN_ACCURACY: f64 = 1e-7;

pub fn solve_plan_with(inputs: &PlanInputs, backend: &dyn SolverBackend, tolerance: f64) -> Result<Plan> {
    let built = build_lp(inputs)?;
    let mut tol = tolerance;
    let mut best: Option<(f64, Plan)> = None;
    for _ in 0..3 {
        let sol = backend.solve(&built.lp, tol)?;
        match sol.status {
            LpStatus::Optimal => {
                let plan = extract(inputs, &built.index, &sol, backend.name());
                let worst = verify_plan(inputs, &plan).max();
                if best.as_ref().is_none_or(|(w, _)| worst < *w) {
                    best = Some((worst, plan));
                }
                if worst <= PLAN_ACCURACY {
                    break;
                }
            }
            LpStatus::Infeasible => return Err(Error::Infeasible { year: first_unfundable_year(inputs) }),
            // The bequest is bounded by balances and income, so an unbounded
            // report can only be numerical trouble.
            LpStatus::Unbounded | LpStatus::NumericalFailure => {
                if best.is_none() && tol < tolerance * 1e-3 {
                    return Err(Error::Solver(format!("{:?} after {} iterations", sol.status, sol.iterations)));
                }
            }
        }
        tol *= 0.01;
    }
    best.map(|(_, p)| p).ok_or_else(|| Error::Solver("no accurate solution".into()))
}

/// Largest violation per constraint family, recomputed from the plan alone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanViolations {
    pub initial: f64,
    /// |X_{t+1}/ρ_t − (X_t − x_t)|, in start-of-year dollars.
    pub dynamics: f64,
    /// Net flows against their components.
    pub components: f64,
    pub cash: f64,
    pub caps: f64,
    pub nonnegativity: f64,
    pub rmd: f64,
    pub deposit: f64,
    pub conversion: f64,
    pub tightness: f64,
    pub bequest: f64,
}

impl PlanViolations {
    pub fn max(&self) -> f64 {
        [
            self.initial,
            self.dynamics,
            self.components,
            self.cash,
            self.caps,
            self.nonnegativity,
            self.rmd,
            self.deposit,
            self.conversion,
            self.tightness,
            self.bequest,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn verify_plan(inputs: &PlanInputs, plan: &Plan) -> PlanViolations {
    let mut v = PlanViolations::default();
    let upd = |slot: &mut f64, x: f64| {
        if x > *slot || x.is_nan() {
            *slot = x;
        }
    };
    upd(&mut v.initial, (plan.brokerage[0] - inputs.initial_brokerage).abs());
    upd(&mut v.initial, (plan.ira[0] - inputs.initial_ira).abs());
    upd(&mut v.initial, (plan.roth[0] - inputs.initial_roth).abs());
    let zeta = inputs.gains_coefficient();
    for t in 0..inputs.horizon {
        for (bal, flow, rho) in [
            (&plan.brokerage, &plan.b, inputs.returns_brokerage[t]),
            (&plan.ira, &plan.i, inputs.returns_ira[t]),
            (&plan.roth, &plan.r, inputs.returns_roth[t]),
        ] {
            upd(&mut v.dynamics, (bal[t + 1] / rho - (bal[t] - flow[t])).abs());
            upd(&mut v.caps, flow[t] - bal[t]);
            upd(&mut v.nonnegativity, -bal[t + 1]);
        }
        upd(&mut v.components, (plan.i[t] - (plan.ic[t] - plan.id[t] + plan.iw[t])).abs());
        upd(&mut v.components, (plan.r[t] - (-plan.rc[t] - plan.rd[t] + plan.rw[t])).abs());
        for x in [plan.ic[t], plan.id[t], plan.iw[t], plan.rc[t], plan.rd[t], plan.rw[t], plan.tax[t]] {
            upd(&mut v.nonnegativity, -x);
        }
        let (e, a, l) = (inputs.earned_income[t], inputs.additional_income[t], inputs.liabilities[t]);
        let cash = plan.b[t] + plan.i[t] + plan.r[t] + e + a - (plan.consumption + l + plan.tax[t]);
        upd(&mut v.cash, cash.abs());
        upd(&mut v.rmd, inputs.rmd_fractions[t] * plan.ira[t] - plan.iw[t]);
        upd(&mut v.deposit, plan.id[t] + plan.rd[t] - inputs.deposit_limit.min(e));
        upd(&mut v.conversion, (plan.ic[t] - plan.rc[t]).abs());
        let omega = plan.ic[t] - plan.id[t] + plan.iw[t] + e + a;
        let exact = inputs.tax_schedule.income_tax(omega) + zeta * pos(plan.b[t]);
        upd(&mut v.tightness, (plan.tax[t] - exact).abs());
    }
    upd(&mut v.nonnegativity, -plan.consumption);
    let t = inputs.horizon;
    upd(&mut v.bequest, (plan.bequest - (plan.brokerage[t] + plan.ira[t] + plan.roth[t])).abs());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn simple(t: usize) -> PlanInputs {
        PlanInputs {
            horizon: t,
            start_age: 65,
            initial_brokerage: 100_000.0,
            initial_ira: 0.0,
            initial_roth: 0.0,
            basis_ratio: 1.0,
            returns_brokerage: vec![1.0; t],
            returns_ira: vec![1.0; t],
            returns_roth: vec![1.0; t],
            earned_income: vec![0.0; t],
            additional_income: vec![0.0; t],
            liabilities: vec![0.0; t],
            rmd_fractions: vec![0.0; t],
            tax_schedule: TaxSchedule::zero(),
            deposit_limit: 0.0,
            target_consumption: 40_000.0,
            shortfall_weight: 500.0,
            tightness_weight: DEFAULT_TIGHTNESS_WEIGHT,
        }
    }

    #[test]
    fn one_year_counts() {
        let built = build_lp(&simple(1)).unwrap();
        let s = built.size;
        assert_eq!(s.model_equalities, 7);
        assert_eq!(s.model_inequalities, 9);
        // 7 + bequest definition
        assert_eq!(s.lp_equality_rows, 8);
        // caps 3, rmd, deposit, two tax pieces (zero and 0%), shortfall
        assert_eq!(s.lp_inequality_rows, 3 + 1 + 1 + 2 + 1);
        assert_eq!(s.epigraph_rows, 1);
        assert!(!built.index.has_gain_epigraph);
    }

    #[test]
    fn gain_epigraph_only_with_unrealized_gains() {
        let mut p = simple(2);
        p.tax_schedule = TaxSchedule::us_2024_single(0.15);
        assert!(build_lp(&p).unwrap().index.gain(0).is_none());
        p.basis_ratio = 0.5;
        let built = build_lp(&p).unwrap();
        assert!(built.index.gain(1).is_some());
        assert_eq!(built.size.variables, 3 * 3 + 11 * 2 + 3);
    }

    #[test]
    fn hand_solved_one_year_plans() {
        let plan = solve_plan(&simple(1)).unwrap();
        assert!((plan.consumption - 40_000.0).abs() < 1e-4);
        assert!((plan.bequest - 60_000.0).abs() < 1e-4);
        let mut poor = simple(1);
        poor.initial_brokerage = 10_000.0;
        let plan = solve_plan(&poor).unwrap();
        assert!((plan.consumption - 10_000.0).abs() < 1e-4);
        assert!(plan.bequest.abs() < 1e-4);
        assert!((plan.objective_value + 500.0 * 30_000.0).abs() < 1e-2);
    }

    #[test]
    fn rmd_row_is_respected() {
        let mut p = simple(2);
        p.initial_brokerage = 0.0;
        p.initial_ira = 100_000.0;
        p.rmd_fractions = vec![0.1, 0.0];
        p.target_consumption = 1_000.0;
        let plan = solve_plan(&p).unwrap();
        assert!(plan.iw[0] >= 10_000.0 - 1e-6);
        assert!(verify_plan(&p, &plan).max() <= 1e-6);
    }

    #[test]
    fn perturbations_are_reported() {
        let mut p = simple(3);
        p.tax_schedule = TaxSchedule::us_2024_single(0.15);
        p.initial_ira = 200_000.0;
        p.returns_brokerage = vec![1.02; 3];
        let plan = solve_plan(&p).unwrap();
        assert!(verify_plan(&p, &plan).max() <= 1e-6);
        let mut bumped = plan.clone();
        bumped.tax[0] += 1.0;
        let v = verify_plan(&p, &bumped);
        assert!((v.tightness - 1.0).abs() < 1e-6);
        let mut moved = plan.clone();
        moved.brokerage[1] += 250.0;
        let v = verify_plan(&p, &moved);
        assert!((v.dynamics - 250.0).abs() < 1e-6);
    }

    #[test]
    fn liabilities_beyond_means_are_infeasible() {
        let mut p = simple(3);
        p.initial_brokerage = 0.0;
        p.liabilities = vec![0.0, 5_000.0, 0.0];
        assert_eq!(solve_plan(&p).unwrap_err(), Error::Infeasible { year: Some(2) });
    }
}
