//! Monte Carlo evaluation of the MPC and benchmark policies.

pub mod metrics;
pub mod run;
pub mod scenario;

pub use metrics::{aggregate, AgeBand, AgeBands, EmpiricalCdf, PairedMetrics, PairedOutcome, Percentiles};
pub use run::{run_trajectory, PolicyKind, SimulationReport};
pub use scenario::{generate_scenario, generate_scenarios, market_paths, MarketYear, Scenario, ScenarioConfig, YearCollars};
