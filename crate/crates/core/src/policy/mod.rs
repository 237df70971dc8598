//! The two withdrawal policies and the settlement step they share.

pub mod benchmark;
pub mod mpc;
pub mod state;

pub use benchmark::{benchmark_step, benchmark_target, BenchmarkConfig, YearInputs};
pub use mpc::{first_year_action, mpc_step, plan_inputs, MpcDecision, PolicyContext, ReturnForecast};
pub use state::{bequest_at_death, exact_tax, settle_year, BasisTracker, RealizedYear, RetireeState, YearRecord, YearlyAction};
