//! `retire` command line.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use retire_core::collar::CollarConfig;
use retire_core::lifetable::{LifeTable, Sex};
use retire_core::market::{fit_gmm, fit_var, GmmFitOptions, MarketModel, PwlTransform};
use retire_core::profile::Profile;
use retire_core::sim::EmpiricalCdf;
use retire_core::tax::RmdSchedule;

use crate::acceptance;
use crate::api::{self, ServiceConfig};
use crate::config::{PolicySelection, RunConfig};
use crate::error::{AppError, AppResult};
use crate::io;
use crate::runner;

#[derive(Parser, Debug)]
#[command(name = "retire", version, about = "Tax-aware retirement withdrawal planning and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one plan and write it as CSV and JSON.
    Plan(RunArgs),
    /// Run MPC and benchmark over sampled scenarios and write reports.
    Simulate(SimulateArgs),
    /// Fit market models to historical series and write a preset.
    Fit(FitArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Run the acceptance suite and print one line per criterion.
    Acceptance(AcceptanceArgs),
    /// Write the built-in data files (life table, RMD table, tax schedule, presets).
    Tables(TablesArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Profile preset: upper or lower.
    #[arg(long)]
    pub preset: Option<String>,
    /// Profile document (TOML).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<f64>,
    /// Shortfall weight γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub basis_ratio: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, short = 'n')]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicySelection>,
    /// Collar every stock holding with this fixed floor, e.g. -0.075.
    #[arg(long, allow_hyphen_values = true)]
    pub collar_floor: Option<f64>,
    /// Also write the per-year long-format file.
    #[arg(long)]
    pub yearly: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// CSV with columns year,market_return.
    #[arg(long)]
    pub market: PathBuf,
    /// CSV with columns year,treasury_rate,inflation_rate.
    #[arg(long)]
    pub rates: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output preset (TOML).
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = api::DEFAULT_SCENARIO_CAP)]
    pub cap: usize,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Origin allowed to call the API from a browser.
    #[arg(long, default_value = api::DEFAULT_UI_ORIGIN)]
    pub ui_origin: String,
}

#[derive(Args, Debug, Clone)]
pub struct AcceptanceArgs {
    /// Small sample sizes; sampling criteria will not be met.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TablesArgs {
    #[arg(long, short, default_value = "data")]
    pub out: PathBuf,
}

fn run_config(a: &RunArgs) -> AppResult<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if a.preset.is_some() || a.profile.is_some() {
        c.profile.preset = a.preset.clone();
        c.profile.file = a.profile.clone();
    }
    if a.target.is_some() {
        c.profile.target_consumption = a.target;
    }
    if a.gamma.is_some() {
        c.profile.shortfall_weight = a.gamma;
    }
    if a.basis_ratio.is_some() {
        c.profile.basis_ratio = a.basis_ratio;
    }
    if let Some(o) = &a.out {
        c.output_dir = o.clone();
    }
    Ok(c)
}

fn create_dir(p: &Path) -> AppResult<()> {
    std::fs::create_dir_all(p).map_err(|e| AppError::data(p, e))
}

pub fn cmd_plan(a: &RunArgs) -> AppResult<()> {
    let r = run_config(a)?.resolve()?;
    let (inputs, plan) = runner::initial_plan(&r)?;
    let dir = &r.config.output_dir;
    create_dir(dir)?;
    io::write_plan_csv(&dir.join("plan.csv"), &plan)?;
    io::write_json(&dir.join("plan.json"), &plan)?;
    io::write_plan_inputs(&dir.join("plan_inputs.json"), &inputs)?;
    println!("profile      {}", r.profile.name);
    println!("horizon      {} years (ages {}-{})", inputs.horizon, inputs.start_age, inputs.start_age + inputs.horizon as u32 - 1);
    println!("consumption  {:.0}", plan.consumption);
    println!("shortfall    {:.0}", plan.shortfall);
    println!("bequest      {:.0}", plan.bequest);
    println!("solve time   {:.1} ms ({} iterations)", plan.diagnostics.solve_time * 1e3, plan.diagnostics.iterations);
    println!("wrote        {}", dir.join("plan.csv").display());
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> AppResult<()> {
    let mut c = run_config(&a.run)?;
    if let Some(n) = a.scenarios {
        c.scenarios = n;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(w) = a.workers {
        c.workers = w;
    }
    if let Some(p) = a.policy {
        c.policy = p;
    }
    if let Some(f) = a.collar_floor {
        c.collar = Some(CollarConfig::fixed(f));
    }
    let r = c.resolve()?;
    let pool = runner::pool(r.config.workers)?;
    let run = runner::simulate(&r, r.config.scenarios, r.config.seed, &pool)?;
    let dir = &r.config.output_dir;
    create_dir(dir)?;
    const POINTS: usize = 201;
    if a.yearly {
        io::write_yearly_csv(&dir.join("years.csv"), &[&run.mpc, &run.benchmark])?;
    }
    for (name, reps) in [("mpc", &run.mpc), ("benchmark", &run.benchmark)] {
        if !reps.is_empty() {
            let cdf = EmpiricalCdf::new(reps.iter().map(|r| r.bequest));
            io::write_cdf_csv(&dir.join(format!("{name}_bequest_cdf.csv")), &cdf.grid(POINTS))?;
        }
    }
    if let Some(b) = &run.mpc_bands {
        io::write_json(&dir.join("mpc_bands.json"), b)?;
    }
    if let Some(b) = &run.benchmark_bands {
        io::write_json(&dir.join("benchmark_bands.json"), b)?;
    }
    println!("profile {} target {:.0} scenarios {} seed {} ({:.1} s)", r.profile.name, r.target, r.config.scenarios, r.config.seed, run.elapsed.as_secs_f64());
    match &run.metrics {
        Some(m) => {
            io::write_scenario_csv(&dir.join("scenarios.csv"), m, &run.mpc, &run.benchmark)?;
            io::write_json(&dir.join("metrics.json"), m)?;
            io::write_cdf_csv(&dir.join("relative_bequest_cdf.csv"), &m.relative_bequest_cdf().grid(POINTS))?;
            let p = &m.relative_bequest;
            println!("{:<18}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}", "", "min", "max", "1st", "5th", "50th", "95th", "99th");
            let max = if m.infinite_relative_bequests > 0 { "---".to_string() } else { format!("{:.2}", p.max) };
            println!("{:<18}{:>8.2}{:>8}{:>8.2}{:>8.2}{:>8.2}{:>8.2}{:>8.2}", "relative bequest", p.min, max, p.p1, p.p5, p.p50, p.p95, p.p99);
            let q = &m.relative_consumption;
            println!("{:<18}{:>8.2}{:>8.2}{:>8.2}{:>8.2}{:>8.2}{:>8.2}{:>8.2}", "rel. consumption", q.min, q.max, q.p1, q.p5, q.p50, q.p95, q.p99);
            println!("median relative bequest {:.4}", m.median_relative_bequest);
            println!("MPC bequest larger in {:.1}% of scenarios, conditional median uplift {:.1}%", m.fraction_mpc_bequest_larger * 100.0, m.conditional_median_uplift * 100.0);
            println!("relative consumption differs from one in {:.1}% of scenarios", m.fraction_consumption_differs * 100.0);
        }
        None => {
            let reps = if run.mpc.is_empty() { &run.benchmark } else { &run.mpc };
            let p = retire_core::sim::Percentiles::of(reps.iter().map(|r| r.bequest));
            println!("bequest p5 {:.0} p50 {:.0} p95 {:.0}", p.p5, p.p50, p.p95);
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_fit(a: &FitArgs) -> AppResult<()> {
    let market = io::read_market_returns(&a.market)?;
    let rates = io::read_rates(&a.rates)?;
    let gmm = fit_gmm(&market, a.components, a.seed, GmmFitOptions::default()).map_err(|e| AppError::data(&a.market, e))?;
    let transform = PwlTransform::paper();
    let model0 = MarketModel { gmm: gmm.model.clone(), inflation_transform: transform, var: retire_core::market::VarModel::paper() };
    let states: Vec<_> = rates.iter().map(|&(t, i)| model0.state_of(t, i)).collect();
    let var = fit_var(&states).map_err(|e| AppError::data(&a.rates, e))?;
    let model = MarketModel { var, ..model0 };
    io::write_toml(&a.out, &model)?;
    println!("mixture ({} iterations, log-likelihood {:.3})", gmm.iterations, gmm.log_likelihood);
    for k in 0..gmm.model.components() {
        println!("  weight {:.3} mean {:.4} std {:.4}", gmm.model.weights[k], gmm.model.means[k], gmm.model.std_devs[k]);
    }
    println!("VAR mean {:?}", model.var.mean);
    println!("VAR A    {:?}", model.var.coefficient);
    println!("VAR Σε   {:?}", model.var.noise_cov);
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn cmd_serve(a: &ServeArgs) -> AppResult<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| AppError::Service(e.to_string()))?;
    let cfg = ServiceConfig { scenario_cap: a.cap, workers: a.workers, ui_origin: a.ui_origin.clone() };
    rt.block_on(api::serve(a.addr, cfg, api::shutdown_signal()))?;
    rt.shutdown_timeout(std::time::Duration::from_secs(2));
    Ok(())
}

pub fn cmd_acceptance(a: &AcceptanceArgs) -> AppResult<bool> {
    let mut opts = if a.quick { acceptance::Options::quick() } else { acceptance::Options::default() };
    opts.workers = a.workers;
    let results = acceptance::run_all(&opts, |c| println!("{c}"))?;
    Ok(results.iter().all(|c| c.passed))
}

pub fn cmd_tables(a: &TablesArgs) -> AppResult<()> {
    create_dir(&a.out)?;
    let f = LifeTable::synthetic(Sex::Female).with_derived_expectancy();
    let m = LifeTable::synthetic(Sex::Male).with_derived_expectancy();
    io::write_lifetable_csv(&a.out.join("lifetable.csv"), &f, &m)?;
    io::write_rmd_csv(&a.out.join("rmd.csv"), &RmdSchedule::uniform_lifetime())?;
    io::write_toml(&a.out.join("tax_2024_single.toml"), &retire_core::tax::TaxSchedule::us_2024_single(0.15))?;
    io::write_toml(&a.out.join("market.toml"), &MarketModel::paper())?;
    io::write_toml(&a.out.join("profile_upper.toml"), &Profile::upper_middle())?;
    io::write_toml(&a.out.join("profile_lower.toml"), &Profile::lower_middle())?;
    println!("wrote {}", a.out.display());
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Acceptance(a) => match cmd_acceptance(a) {
            Ok(true) => Ok(()),
            Ok(false) => return 1,
            Err(e) => Err(e),
        },
        Command::Tables(a) => cmd_tables(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
