//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration errors (including bad
//! flags), 3 for data errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::behavior::WeightingFn;
use crate::dpob::{measure_convergence, write_convergence_csv};
use crate::error::{Error, Result};
use crate::learn::{collect_samples, train_svm_with_report, SvmModel};
use crate::market::Bid;
use crate::sim::{
    bootstrap_history, bootstrap_seed, generate_scenario, run_experiment, run_scenario, sweep_report, Acceptance,
    ClassifierScope, ClassifierSource, ExperimentConfig, GridConfig, Mode, Scenario,
};

#[derive(Debug, Parser)]
#[command(name = "hetbid", version, about = "HetNet bidding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a network and write it as TOML.
    GenScenario(GenScenarioArgs),
    /// Write labelled offers (the classifier training history) as CSV.
    Bootstrap(TrainArgs),
    /// Train an acceptance classifier and write it as TOML.
    Train(TrainArgs),
    /// Play one stored scenario under each mode and write a CSV report.
    Simulate(SimulateArgs),
    /// Run the load sweep and write a CSV report.
    Sweep(SweepArgs),
    /// Measure search iterations against grid size and write CSV.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML). Defaults apply without one.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenScenarioArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of users; `scenario.users` of the configuration otherwise.
    #[arg(long)]
    pub users: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario file; a network is drawn from the configuration otherwise.
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    /// Offer history written by `bootstrap`, used instead of drawing one.
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    pub history: Option<PathBuf>,
    #[arg(long, value_name = "F")]
    pub alpha: Option<f64>,
    /// Bid grid, rates x bandwidths.
    #[arg(long, value_name = "MxN")]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Comma-separated modes: eut, pt_deviation, dpob.
    #[arg(long, value_name = "LIST")]
    pub modes: Option<String>,
    #[arg(long, value_name = "F")]
    pub alpha: Option<f64>,
    /// Bid grid, rates x bandwidths.
    #[arg(long, value_name = "MxN")]
    pub grid: Option<String>,
    /// Trained classifier shared by every user in dpob mode.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// In dpob mode, train one classifier per user and station instead of
    /// loading one.
    #[arg(long, conflicts_with = "model")]
    pub per_link: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated user counts.
    #[arg(long, value_name = "LIST")]
    pub loads: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Comma-separated grid sizes, each MxN.
    #[arg(long, value_name = "LIST", default_value = "8x8,16x16,32x32,64x64")]
    pub sizes: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_name = "U64", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// One row of the offer history CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub sp_id: usize,
    pub rate: f64,
    pub price: f64,
    pub bandwidth: f64,
    pub guarantee: f64,
    pub accepted: bool,
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else {
        3
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenScenario(a) => gen_scenario(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Train(a) => train(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Convergence(a) => convergence(a),
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

/// Parses `MxN`.
pub fn parse_grid(s: &str) -> Result<GridConfig> {
    let bad = || Error::Config(format!("grid must look like 32x32, got {s:?}"));
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let rates: usize = m.trim().parse().map_err(|_| bad())?;
    let bandwidths: usize = n.trim().parse().map_err(|_| bad())?;
    if rates == 0 || bandwidths == 0 {
        return Err(bad());
    }
    Ok(GridConfig { rates, bandwidths })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("bad {what} {t:?}"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("empty {what} list")));
    }
    Ok(items)
}

fn apply_overrides(cfg: &mut ExperimentConfig, alpha: Option<f64>, grid: Option<&str>) -> Result<()> {
    if let Some(a) = alpha {
        cfg.alpha = a;
    }
    if let Some(g) = grid {
        cfg.grid = parse_grid(g)?;
    }
    Ok(())
}

fn gen_scenario(a: GenScenarioArgs) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let mut sc = cfg.scenario;
    if let Some(u) = a.users {
        sc.users = u;
    }
    let scenario = generate_scenario(&sc, cfg.seed)?;
    emit(a.common.out.as_deref(), &scenario.to_toml()?)
}

fn history_from(a: &TrainArgs, cfg: &ExperimentConfig) -> Result<Vec<(Bid, bool)>> {
    if let Some(p) = &a.history {
        return read_history(p);
    }
    let scenario = match &a.scenario {
        Some(p) => Scenario::load(p)?,
        None => generate_scenario(&cfg.scenario, cfg.seed)?,
    };
    let weighting = WeightingFn::prelec(cfg.alpha).map_err(|e| Error::Config(e.to_string()))?;
    let seed = bootstrap_seed(cfg.seed, scenario.users.len());
    bootstrap_history(&scenario, weighting, &cfg.bootstrap, &cfg.grid, seed)
}

fn bootstrap(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    apply_overrides(&mut cfg, a.alpha, a.grid.as_deref())?;
    let history = history_from(&a, &cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (bid, accepted) in &history {
        w.serialize(HistoryRecord {
            sp_id: bid.sp_id,
            rate: bid.rate,
            price: bid.price,
            bandwidth: bid.bandwidth,
            guarantee: bid.guarantee,
            accepted: *accepted,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
    emit(a.common.out.as_deref(), &String::from_utf8_lossy(&bytes))
}

pub fn read_history(path: &Path) -> Result<Vec<(Bid, bool)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<HistoryRecord>()
        .map(|rec| {
            let h = rec?;
            let bid = Bid {
                sp_id: h.sp_id,
                rate: h.rate,
                price: h.price,
                bandwidth: h.bandwidth,
                guarantee: h.guarantee,
            };
            Ok((bid, h.accepted))
        })
        .collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    apply_overrides(&mut cfg, a.alpha, a.grid.as_deref())?;
    let history = history_from(&a, &cfg)?;
    let samples = collect_samples(&history);
    let accepted = samples.iter().filter(|s| s.y == 1).count();
    eprintln!(
        "samples {} (accepted {accepted}, rejected {})",
        samples.len(),
        samples.len() - accepted
    );
    let (model, report) = train_svm_with_report(&samples, &cfg.svm)?;
    eprintln!("training accuracy {:.4}", report.training_accuracy);
    eprintln!("{report}");
    emit(a.common.out.as_deref(), &model.to_toml())
}

fn resolve_modes(cfg: &mut ExperimentConfig, m: &ModelArgs) -> Result<Option<SvmModel>> {
    if let Some(list) = &m.modes {
        cfg.modes = parse_list(list, "mode")?;
    }
    apply_overrides(cfg, m.alpha, m.grid.as_deref())?;
    cfg.validate()?;
    if !cfg.modes.contains(&Mode::Dpob) {
        return Ok(None);
    }
    match (&m.model, m.per_link) {
        (Some(p), _) => SvmModel::load(p).map(Some),
        (None, true) => {
            cfg.bootstrap.scope = ClassifierScope::PerUser;
            Ok(None)
        }
        (None, false) => Err(Error::Config("dpob mode needs --model PATH or --per-link".into())),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    let model = resolve_modes(&mut cfg, &a.model)?;
    let scenario = Scenario::load(&a.scenario)?;
    let shared = model.map(Acceptance::Svm);
    let source = match &shared {
        Some(s) => Some(ClassifierSource::Shared(s)),
        None if cfg.modes.contains(&Mode::Dpob) => Some(ClassifierSource::PerUser),
        None => None,
    };
    let rows = cfg
        .modes
        .iter()
        .map(|&mode| run_scenario(&scenario, mode, &cfg, source))
        .collect::<Result<Vec<_>>>()?;
    emit(a.common.out.as_deref(), &sweep_report(&rows)?)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(l) = &a.loads {
        cfg.loads = parse_list(l, "load")?;
    }
    let model = resolve_modes(&mut cfg, &a.model)?;
    let rows = run_experiment(&cfg, model.as_ref())?;
    emit(a.common.out.as_deref(), &sweep_report(&rows)?)
}

fn convergence(a: ConvergenceArgs) -> Result<()> {
    let sizes = parse_list::<String>(&a.sizes, "grid size")?
        .iter()
        .map(|s| parse_grid(s).map(|g| (g.rates, g.bandwidths)))
        .collect::<Result<Vec<_>>>()?;
    let rows = measure_convergence(&sizes, a.trials, a.seed).map_err(|e| Error::Config(e.to_string()))?;
    let mut buf = Vec::new();
    write_convergence_csv(&rows, &mut buf)?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))
}
