//! HTTP service for the dashboard: `POST /plan`, `POST /simulate`, `GET /health`.
//!
//! Stateless apart from the busy and degraded flags. Timing goes in the
//! `x-elapsed-ms` header so identical requests get identical bodies.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

use retire_core::collar::CollarConfig;
use retire_core::planner::{solve_plan, Plan, PlanInputs};
use retire_core::profile::{ForecastMode, Profile};
use retire_core::sim::{AgeBand, AgeBands, EmpiricalCdf, PairedMetrics};

use crate::config::{DataSection, ProfileSection, RunConfig};
use crate::error::{AppError, AppResult};
use crate::runner;

pub const DEFAULT_SCENARIO_CAP: usize = 2_000;
pub const DEFAULT_UI_ORIGIN: &str = "http://localhost:5173";
const CDF_POINTS: usize = 101;
const ELAPSED: HeaderName = HeaderName::from_static("x-elapsed-ms");

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub scenario_cap: usize,
    pub workers: usize,
    pub ui_origin: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { scenario_cap: DEFAULT_SCENARIO_CAP, workers: 0, ui_origin: DEFAULT_UI_ORIGIN.into() }
    }
}

#[derive(Clone)]
pub struct AppState {
    cfg: Arc<ServiceConfig>,
    pool: Arc<rayon::ThreadPool>,
    busy: Arc<AtomicBool>,
    degraded: Arc<AtomicBool>,
}

impl AppState {
    pub fn new(cfg: ServiceConfig) -> AppResult<Self> {
        let pool = runner::pool(cfg.workers)?;
        Ok(AppState {
            cfg: Arc::new(cfg),
            pool: Arc::new(pool),
            busy: Arc::new(AtomicBool::new(false)),
            degraded: Arc::new(AtomicBool::new(false)),
        })
    }

    /// Holds the simulation slot, as a running request would.
    pub fn occupy(&self) -> Option<BusyGuard> {
        BusyGuard::take(&self.busy)
    }

    pub fn mark_degraded(&self) {
        self.degraded.store(true, Ordering::SeqCst);
    }
}

pub struct BusyGuard(Arc<AtomicBool>);

impl BusyGuard {
    fn take(flag: &Arc<AtomicBool>) -> Option<Self> {
        flag.compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst).ok().map(|_| BusyGuard(flag.clone()))
    }
}

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ApiError {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
    /// First plan year (1-based) that cannot be funded.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub year: Option<usize>,
}

struct Failure(StatusCode, ApiError);

impl Failure {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        Failure(status, ApiError { error: msg.into(), field: None, year: None })
    }

    fn invalid(msg: impl Into<String>) -> Self {
        let msg = msg.into();
        let mut bare = msg.as_str();
        for prefix in ["profile: ", "invalid input: "] {
            bare = bare.strip_prefix(prefix).unwrap_or(bare);
        }
        let field = FIELDS.iter().find(|f| bare.starts_with(*f)).map(|f| f.to_string());
        Failure(StatusCode::UNPROCESSABLE_ENTITY, ApiError { error: msg, field, year: None })
    }
}

const FIELDS: &[&str] = &[
    "initial_brokerage", "initial_ira", "initial_roth", "basis_ratio", "deposit_limit", "target_consumption",
    "shortfall_weight", "tightness_weight", "returns_brokerage", "returns_ira", "returns_roth", "earned_income",
    "additional_income", "liabilities", "rmd_fractions", "horizon", "scenarios", "profile", "tax",
];

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Solver(retire_core::Error::Infeasible { year }) => Failure(
                StatusCode::CONFLICT,
                ApiError { error: "plan infeasible".into(), field: None, year },
            ),
            AppError::Solver(e) => Failure::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
            AppError::Config(m) => Failure::invalid(m),
            e @ AppError::Data { .. } => Failure::invalid(e.to_string()),
            AppError::Service(m) => Failure::new(StatusCode::INTERNAL_SERVER_ERROR, m),
        }
    }
}

fn body<T>(r: Result<Json<T>, JsonRejection>) -> Result<T, Failure> {
    r.map(|Json(v)| v).map_err(|e| Failure::invalid(e.body_text()))
}

fn elapsed_header(t0: Instant) -> [(HeaderName, HeaderValue); 1] {
    let ms = format!("{:.3}", t0.elapsed().as_secs_f64() * 1e3);
    [(ELAPSED, HeaderValue::from_str(&ms).unwrap_or(HeaderValue::from_static("0")))]
}

/// A retiree given by preset name, a full profile, or raw plan inputs, with
/// optional overrides on top of the first two.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProfileRequest {
    pub preset: Option<String>,
    pub profile: Option<Profile>,
    pub target_consumption: Option<f64>,
    pub shortfall_weight: Option<f64>,
    pub basis_ratio: Option<f64>,
    pub forecast: Option<ForecastMode>,
}

impl ProfileRequest {
    fn run_config(&self) -> Result<RunConfig, Failure> {
        if self.preset.is_some() && self.profile.is_some() {
            return Err(Failure::invalid("profile: give either preset or profile, not both"));
        }
        Ok(RunConfig {
            profile: ProfileSection {
                preset: self.preset.clone().or_else(|| self.profile.is_none().then(|| "upper".into())),
                file: None,
                target_consumption: self.target_consumption,
                shortfall_weight: self.shortfall_weight,
                basis_ratio: self.basis_ratio,
                forecast: self.forecast,
            },
            data: DataSection::default(),
            ..RunConfig::default()
        })
    }

    fn resolve(&self, mut rc: RunConfig) -> Result<crate::config::Resolved, Failure> {
        match &self.profile {
            None => Ok(rc.resolve()?),
            Some(p) => {
                // Resolve against a preset, then swap in the inline profile
                // with the overrides applied.
                rc.profile.preset = Some("upper".into());
                let mut r = rc.resolve()?;
                let mut p = p.clone();
                if let Some(v) = self.target_consumption {
                    p.target_consumption = Some(v);
                }
                if let Some(v) = self.shortfall_weight {
                    p.shortfall_weight = v;
                }
                if let Some(v) = self.basis_ratio {
                    p.basis_ratio = v;
                }
                if let Some(f) = self.forecast {
                    p.forecast = f;
                }
                p.validate().map_err(|e| Failure::invalid(format!("profile: {e}")))?;
                r.table = retire_core::lifetable::LifeTable::synthetic(p.sex);
                r.table.expected_remaining(p.start_age).map_err(|e| Failure::invalid(format!("profile: {e}")))?;
                r.scenario.brokerage.stock_weight = p.brokerage_stock_weight;
                r.scenario.retirement.stock_weight = p.retirement_stock_weight;
                r.target = p.consumption_target();
                r.profile = p;
                Ok(r)
            }
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PlanRequest {
    #[serde(flatten)]
    pub retiree: ProfileRequest,
    /// Solve exactly these inputs instead of building them from a profile.
    pub inputs: Option<PlanInputs>,
}

/// Per-year plan arrays; balances hold `T + 1` entries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlanSeries {
    pub age: Vec<u32>,
    pub brokerage: Vec<f64>,
    pub ira: Vec<f64>,
    pub roth: Vec<f64>,
    pub b: Vec<f64>,
    pub ic: Vec<f64>,
    pub id: Vec<f64>,
    pub iw: Vec<f64>,
    pub rc: Vec<f64>,
    pub rd: Vec<f64>,
    pub rw: Vec<f64>,
    pub tax: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlanResponse {
    pub consumption: f64,
    pub bequest: f64,
    pub shortfall: f64,
    pub objective: f64,
    pub tightness_residual: f64,
    pub iterations: usize,
    pub series: PlanSeries,
    /// The inputs actually solved.
    pub inputs: PlanInputs,
}

fn plan_response(inputs: PlanInputs, plan: Plan) -> PlanResponse {
    let t = plan.horizon();
    PlanResponse {
        consumption: plan.consumption,
        bequest: plan.bequest,
        shortfall: plan.shortfall,
        objective: plan.objective_value,
        tightness_residual: plan.diagnostics.tightness_residual,
        iterations: plan.diagnostics.iterations,
        series: PlanSeries {
            age: (0..=t as u32).map(|k| plan.start_age + k).collect(),
            brokerage: plan.brokerage,
            ira: plan.ira,
            roth: plan.roth,
            b: plan.b,
            ic: plan.ic,
            id: plan.id,
            iw: plan.iw,
            rc: plan.rc,
            rd: plan.rd,
            rw: plan.rw,
            tax: plan.tax,
        },
        inputs,
    }
}

async fn plan_handler(req: Result<Json<PlanRequest>, JsonRejection>) -> Response {
    let t0 = Instant::now();
    let result = async {
        let req = body(req)?;
        let work = move || -> Result<PlanResponse, Failure> {
            let (inputs, plan) = match req.inputs {
                Some(inputs) => {
                    inputs.validate().map_err(|e| Failure::invalid(e.to_string()))?;
                    let plan = solve_plan(&inputs).map_err(AppError::from)?;
                    (inputs, plan)
                }
                None => {
                    let r = req.retiree.resolve(req.retiree.run_config()?)?;
                    runner::initial_plan(&r)?
                }
            };
            Ok(plan_response(inputs, plan))
        };
        tokio::task::spawn_blocking(work).await.map_err(|e| Failure::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    }
    .await;
    match result {
        Ok(resp) => (elapsed_header(t0), Json(resp)).into_response(),
        Err(f) => f.into_response(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateRequest {
    #[serde(flatten)]
    pub retiree: ProfileRequest,
    pub scenarios: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub collar: Option<CollarConfig>,
    #[serde(default)]
    pub initial_rates: Option<(f64, f64)>,
    /// Keep every k-th age in the bands.
    #[serde(default = "one")]
    pub band_stride: usize,
}

fn default_seed() -> u64 {
    42
}
fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BandSet {
    pub brokerage: Vec<AgeBand>,
    pub ira: Vec<AgeBand>,
    pub roth: Vec<AgeBand>,
    pub conversion: Vec<AgeBand>,
    pub tax: Vec<AgeBand>,
    pub consumption: Vec<AgeBand>,
}

impl BandSet {
    fn of(b: &AgeBands, stride: usize) -> Self {
        let pick = |v: &[AgeBand]| v.iter().step_by(stride.max(1)).copied().collect();
        BandSet {
            brokerage: pick(&b.brokerage),
            ira: pick(&b.ira),
            roth: pick(&b.roth),
            conversion: pick(&b.conversion),
            tax: pick(&b.tax),
            consumption: pick(&b.consumption),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResolvedEcho {
    pub profile: Profile,
    pub target_consumption: f64,
    pub scenarios: usize,
    pub seed: u64,
    pub collar: Option<CollarConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimulateResponse {
    pub config: ResolvedEcho,
    pub median_relative_bequest: f64,
    pub fraction_mpc_bequest_larger: f64,
    pub conditional_median_uplift: f64,
    pub fraction_consumption_differs: f64,
    pub relative_bequest: retire_core::sim::Percentiles,
    pub relative_consumption: retire_core::sim::Percentiles,
    pub mpc_bequest: retire_core::sim::Percentiles,
    pub benchmark_bequest: retire_core::sim::Percentiles,
    pub depletion_fraction_mpc: f64,
    pub depletion_fraction_benchmark: f64,
    /// `(value, probability)` points.
    pub relative_bequest_cdf: Vec<(f64, f64)>,
    pub mpc_bequest_cdf: Vec<(f64, f64)>,
    pub benchmark_bequest_cdf: Vec<(f64, f64)>,
    pub mpc_bands: BandSet,
    pub benchmark_bands: BandSet,
}

fn simulate_response(echo: ResolvedEcho, m: &PairedMetrics, mpc: &AgeBands, bench: &AgeBands, stride: usize) -> SimulateResponse {
    let cdf = |v: Vec<f64>| EmpiricalCdf::new(v).grid(CDF_POINTS);
    SimulateResponse {
        config: echo,
        median_relative_bequest: m.median_relative_bequest,
        fraction_mpc_bequest_larger: m.fraction_mpc_bequest_larger,
        conditional_median_uplift: m.conditional_median_uplift,
        fraction_consumption_differs: m.fraction_consumption_differs,
        relative_bequest: m.relative_bequest,
        relative_consumption: m.relative_consumption,
        mpc_bequest: m.mpc_bequest,
        benchmark_bequest: m.benchmark_bequest,
        depletion_fraction_mpc: m.depletion_fraction_mpc,
        depletion_fraction_benchmark: m.depletion_fraction_benchmark,
        relative_bequest_cdf: m.relative_bequest_cdf().grid(CDF_POINTS),
        mpc_bequest_cdf: cdf(m.outcomes.iter().map(|o| o.mpc_bequest).collect()),
        benchmark_bequest_cdf: cdf(m.outcomes.iter().map(|o| o.benchmark_bequest).collect()),
        mpc_bands: BandSet::of(mpc, stride),
        benchmark_bands: BandSet::of(bench, stride),
    }
}

async fn simulate_handler(State(st): State<AppState>, req: Result<Json<SimulateRequest>, JsonRejection>) -> Response {
    let t0 = Instant::now();
    let result = async {
        let req = body(req)?;
        if req.scenarios == 0 || req.scenarios > st.cfg.scenario_cap {
            return Err(Failure::invalid(format!("scenarios must lie in 1..={}", st.cfg.scenario_cap)));
        }
        let mut rc = req.retiree.run_config()?;
        rc.scenarios = req.scenarios;
        rc.seed = req.seed;
        rc.collar = req.collar;
        rc.initial_rates = req.initial_rates;
        let r = req.retiree.resolve(rc)?;
        let guard = st.occupy().ok_or_else(|| Failure::new(StatusCode::TOO_MANY_REQUESTS, "a simulation is already running"))?;
        let pool = st.pool.clone();
        let joined = tokio::task::spawn_blocking(move || {
            let _guard = guard;
            let run = runner::simulate(&r, r.config.scenarios, r.config.seed, &pool)?;
            let echo = ResolvedEcho {
                profile: r.profile.clone(),
                target_consumption: r.target,
                scenarios: r.config.scenarios,
                seed: r.config.seed,
                collar: r.config.collar,
            };
            let (Some(m), Some(mb), Some(bb)) = (&run.metrics, &run.mpc_bands, &run.benchmark_bands) else {
                return Err(Failure::new(StatusCode::INTERNAL_SERVER_ERROR, "paired metrics missing"));
            };
            Ok(simulate_response(echo, m, mb, bb, req.band_stride))
        })
        .await;
        match joined {
            Ok(r) => r,
            Err(e) => {
                st.mark_degraded();
                Err(Failure::new(StatusCode::INTERNAL_SERVER_ERROR, format!("simulation worker failed: {e}")))
            }
        }
    }
    .await;
    match result {
        Ok(resp) => (elapsed_header(t0), Json(resp)).into_response(),
        Err(f) => f.into_response(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub status: String,
    pub busy: bool,
}

async fn health_handler(State(st): State<AppState>) -> Json<Health> {
    let status = if st.degraded.load(Ordering::SeqCst) { "degraded" } else { "ok" };
    Json(Health { status: status.into(), busy: st.busy.load(Ordering::SeqCst) })
}

pub fn router(st: AppState) -> AppResult<Router> {
    let origin = HeaderValue::from_str(&st.cfg.ui_origin).map_err(|e| AppError::Config(format!("ui origin: {e}")))?;
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::list([origin]))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
        .expose_headers([ELAPSED]);
    Ok(Router::new()
        .route("/plan", post(plan_handler))
        .route("/simulate", post(simulate_handler))
        .route("/health", get(health_handler))
        .layer(cors)
        .with_state(st))
}

/// Binds and serves until `shutdown` resolves. A taken port is a service error.
pub async fn serve(addr: SocketAddr, cfg: ServiceConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> AppResult<()> {
    let app = router(AppState::new(cfg)?)?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| AppError::Service(format!("bind {addr}: {e}")))?;
    eprintln!("listening on {}", listener.local_addr().map_err(|e| AppError::Service(e.to_string()))?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await.map_err(|e| AppError::Service(e.to_string()))
}

/// Resolves on SIGTERM or Ctrl-C.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
