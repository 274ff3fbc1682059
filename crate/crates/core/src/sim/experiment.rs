//! Training-data bootstrap and load sweeps.

use std::cell::Cell;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::behavior::{decide, WeightingFn};
use crate::dpob::{dpob, BidClassifier, BidGrid, MdpConfig};
use crate::error::{Error, Result};
use crate::learn::{collect_samples, train_svm, train_svm_with_report, SvmConfig, SvmModel, TrainingReport};
use crate::market::{best_response_bid, solve_sp_best_response, stackelberg_round, Bid, GameOutcome, SpContext};
use crate::radio::StationKind;

use super::config::{BootstrapConfig, ClassifierScope, ExperimentConfig, GridConfig, Mode, ScenarioConfig};
use super::scenario::{derive_seed, generate_scenario, Scenario, UserView};

const BOOTSTRAP_TAG: u64 = 0xb007;
const DPOB_TAG: u64 = 0xd90b;

/// The bid grid for one SP and user: `rates` values over
/// `(min_rate, b_max]` and `bandwidths` values over `(0, bw_max]`. `None`
/// when the link cannot carry more than the minimum rate.
pub fn bid_grid(ctx: &SpContext, grid: &GridConfig) -> Option<BidGrid> {
    if !(ctx.b_max > ctx.min_rate) || !(ctx.bw_max > 0.0) {
        return None;
    }
    BidGrid::uniform(ctx.min_rate, ctx.b_max, grid.rates, ctx.bw_max, grid.bandwidths).ok()
}

fn decide_standalone(view: &UserView, ctx: &SpContext, bid: &Bid, weighting: WeightingFn) -> bool {
    let s = match ctx.kind {
        StationKind::Macro => decide(&view.user, Some(bid), None, weighting),
        StationKind::Wifi => decide(&view.user, None, Some(bid), weighting),
    };
    s.accepted_count() > 0
}

/// `bids_per_user` labelled offers to one user, each from a uniformly
/// chosen serving station at a uniformly chosen point of that station's
/// bid grid, judged on its own. Empty when no station can bid.
pub fn user_history(
    view: &UserView,
    weighting: WeightingFn,
    bids_per_user: usize,
    grid: &GridConfig,
    rng: &mut impl Rng,
) -> Result<Vec<(Bid, bool)>> {
    let grids: Vec<(&SpContext, BidGrid)> = view
        .contexts()
        .filter_map(|c| bid_grid(c, grid).map(|g| (c, g)))
        .collect();
    if grids.is_empty() {
        return Ok(Vec::new());
    }
    let mut history = Vec::with_capacity(bids_per_user);
    for _ in 0..bids_per_user {
        let (ctx, g) = &grids[rng.random_range(0..grids.len())];
        let s = g.state(rng.random_range(0..g.len()));
        let bid = ctx.make_bid(s.rate, s.bandwidth)?;
        history.push((bid, decide_standalone(view, ctx, &bid, weighting)));
    }
    Ok(history)
}

/// `bids` labelled offers from one station to one user at uniformly chosen
/// points of the station's bid grid. Empty when the station has no grid.
pub fn link_history(
    view: &UserView,
    ctx: &SpContext,
    weighting: WeightingFn,
    bids: usize,
    grid: &GridConfig,
    rng: &mut impl Rng,
) -> Result<Vec<(Bid, bool)>> {
    let Some(g) = bid_grid(ctx, grid) else {
        return Ok(Vec::new());
    };
    (0..bids)
        .map(|_| {
            let s = g.state(rng.random_range(0..g.len()));
            let bid = ctx.make_bid(s.rate, s.bandwidth)?;
            Ok((bid, decide_standalone(view, ctx, &bid, weighting)))
        })
        .collect()
}

/// Labelled offers for training a network-wide acceptance classifier:
/// [`user_history`] for up to `plan.users` randomly drawn users that some
/// station can bid to.
pub fn bootstrap_history(
    scenario: &Scenario,
    weighting: WeightingFn,
    plan: &BootstrapConfig,
    grid: &GridConfig,
    seed: u64,
) -> Result<Vec<(Bid, bool)>> {
    if plan.bids_per_user == 0 {
        return Err(Error::invalid("bids_per_user", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut views: Vec<UserView> = scenario
        .market_views()
        .into_iter()
        .filter(|v| v.contexts().any(|c| bid_grid(c, grid).is_some()))
        .collect();
    views.shuffle(&mut rng);
    views.truncate(plan.users);
    let mut history = Vec::with_capacity(views.len() * plan.bids_per_user);
    for v in &views {
        history.extend(user_history(v, weighting, plan.bids_per_user, grid, &mut rng)?);
    }
    Ok(history)
}

fn scenario_for_load(config: &ScenarioConfig, users: usize, seed: u64) -> Result<Scenario> {
    let cfg = ScenarioConfig { users, ..*config };
    generate_scenario(&cfg, seed)
}

/// A trained classifier, or a constant one when the history holds a
/// single class.
#[derive(Debug, Clone, PartialEq)]
pub enum Acceptance {
    Svm(SvmModel),
    Constant(bool),
}

impl Acceptance {
    /// Fits on `history`; an empty history predicts rejection.
    pub fn fit(history: &[(Bid, bool)], config: &SvmConfig) -> Result<Self> {
        let first = history.first().map(|h| h.1);
        if history.iter().all(|h| Some(h.1) == first) {
            return Ok(Acceptance::Constant(first.unwrap_or(false)));
        }
        Ok(Acceptance::Svm(train_svm(&collect_samples(history), config)?))
    }
}

impl BidClassifier for Acceptance {
    fn accepts(&self, rate: f64, price: f64, bandwidth: f64) -> bool {
        match self {
            Acceptance::Svm(m) => m.accepts(rate, price, bandwidth),
            Acceptance::Constant(c) => *c,
        }
    }
}

/// Seed of the training history drawn for the network at load `users`.
pub fn bootstrap_seed(master: u64, users: usize) -> u64 {
    derive_seed(derive_seed(master, users as u64), BOOTSTRAP_TAG)
}

/// Trains a network-wide classifier on the bootstrap of an independent
/// draw of the network at `users` users.
pub fn train_for_load(config: &ExperimentConfig, users: usize) -> Result<(SvmModel, TrainingReport)> {
    let seed = bootstrap_seed(config.seed, users);
    let scenario = scenario_for_load(&config.scenario, users, seed)?;
    let weighting = WeightingFn::prelec(config.alpha)?;
    let history = bootstrap_history(&scenario, weighting, &config.bootstrap, &config.grid, seed)?;
    train_svm_with_report(&collect_samples(&history), &config.svm)
}

/// Aggregates of one mode at one load. Column order of the CSV report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub mode: Mode,
    /// Number of users in the network.
    pub users: usize,
    /// Prelec parameter; empty for objective users.
    pub alpha: Option<f64>,
    pub seed: u64,
    pub sum_sp_utility: f64,
    /// Sum of the users' utilities as they evaluate them.
    pub sum_user_utility: f64,
    /// Accepted over offered bids; 0 when nothing was offered.
    pub acceptance_rate: f64,
    /// Users that accepted at least one bid.
    pub connected_users: usize,
    pub offered_bids: usize,
    pub accepted_bids: usize,
    /// Median objective guarantee of the offered bids.
    pub median_guarantee: Option<f64>,
    /// Mean search iterations per searched bid; empty outside `dpob`.
    pub mean_dpob_iterations: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// The bid an SP posts after searching its grid with the classifier,
/// starting from its best response. Returns the bid and the iteration
/// count, or `None` when the SP has no grid.
pub fn learned_bid(
    ctx: &SpContext,
    classifier: &impl BidClassifier,
    grid: &GridConfig,
    rate_grid_size: usize,
    seed: u64,
) -> Option<(Option<Bid>, usize)> {
    let g = bid_grid(ctx, grid)?;
    let initial = match solve_sp_best_response(ctx, rate_grid_size) {
        Some(br) => g.nearest(br.rate, br.bandwidth),
        None => g.nearest(ctx.b_max, ctx.bw_max),
    };
    let res = dpob(&g, initial, classifier, &ctx.pricing, &ctx.cost, &MdpConfig::new(seed)).ok()?;
    let bid = res.best.and_then(|s| ctx.make_bid(s.rate, s.bandwidth).ok());
    Some((bid, res.iterations))
}

struct UserResult {
    outcome: GameOutcome,
    searches: usize,
    iterations: usize,
}

/// Where the learned bidder gets its classifier from.
#[derive(Debug, Clone, Copy)]
pub enum ClassifierSource<'a> {
    /// Shared by every user.
    Shared(&'a Acceptance),
    /// Trained per user on its own bootstrap history.
    PerUser,
}

fn play(
    view: &UserView,
    mode: Mode,
    config: &ExperimentConfig,
    source: Option<ClassifierSource<'_>>,
    scenario_seed: u64,
) -> Result<UserResult> {
    let weighting = match mode {
        Mode::Eut => WeightingFn::Identity,
        Mode::PtDeviation | Mode::Dpob => WeightingFn::prelec(config.alpha)?,
    };
    let searches = Cell::new(0usize);
    let iterations = Cell::new(0usize);
    let outcome = match mode {
        Mode::Eut | Mode::PtDeviation => {
            stackelberg_round(&view.user, view.cellular.as_ref(), &view.wifi, weighting, |c| {
                best_response_bid(c, config.rate_grid_size)
            })
        }
        Mode::Dpob => {
            let user_seed = derive_seed(derive_seed(scenario_seed, DPOB_TAG), view.user.id as u64);
            let source = source.ok_or_else(|| Error::Config("dpob mode needs a classifier".into()))?;
            let failure = Cell::new(None);
            let outcome = stackelberg_round(&view.user, view.cellular.as_ref(), &view.wifi, weighting, |c| {
                let seed = derive_seed(user_seed, c.sp_id as u64);
                let own;
                let classifier = match source {
                    ClassifierSource::Shared(a) => a,
                    ClassifierSource::PerUser => {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, BOOTSTRAP_TAG));
                        let fitted = link_history(
                            view,
                            c,
                            weighting,
                            config.bootstrap.bids_per_user,
                            &config.grid,
                            &mut rng,
                        )
                        .and_then(|h| Acceptance::fit(&h, &config.svm));
                        match fitted {
                            Ok(a) => own = a,
                            Err(e) => {
                                failure.set(Some(e));
                                return None;
                            }
                        }
                        &own
                    }
                };
                let (bid, iters) = learned_bid(c, classifier, &config.grid, config.rate_grid_size, seed)?;
                searches.set(searches.get() + 1);
                iterations.set(iterations.get() + iters);
                bid
            });
            if let Some(e) = failure.take() {
                return Err(e);
            }
            outcome
        }
    };
    Ok(UserResult {
        outcome,
        searches: searches.get(),
        iterations: iterations.get(),
    })
}

/// Plays every user of `scenario` under `mode` and aggregates.
pub fn run_scenario(
    scenario: &Scenario,
    mode: Mode,
    config: &ExperimentConfig,
    source: Option<ClassifierSource<'_>>,
) -> Result<MetricsRow> {
    let views = scenario.market_views();
    let results: Vec<UserResult> = views
        .par_iter()
        .map(|v| play(v, mode, config, source, scenario.seed))
        .collect::<Result<_>>()?;

    let mut row = MetricsRow {
        mode,
        users: scenario.users.len(),
        alpha: (mode != Mode::Eut).then_some(config.alpha),
        seed: config.seed,
        sum_sp_utility: 0.0,
        sum_user_utility: 0.0,
        acceptance_rate: 0.0,
        connected_users: 0,
        offered_bids: 0,
        accepted_bids: 0,
        median_guarantee: None,
        mean_dpob_iterations: None,
    };
    let mut guarantees = Vec::new();
    let (mut searches, mut iterations) = (0usize, 0usize);
    for r in &results {
        let o = &r.outcome;
        row.sum_sp_utility += o.sum_sp_utility();
        row.sum_user_utility += o.user_utility;
        row.offered_bids += o.offered();
        row.accepted_bids += o.accepted();
        row.connected_users += (o.accepted() > 0) as usize;
        guarantees.extend(o.cellular_bid.iter().chain(o.wifi_bid.iter()).map(|b| b.guarantee));
        searches += r.searches;
        iterations += r.iterations;
    }
    if row.offered_bids > 0 {
        row.acceptance_rate = row.accepted_bids as f64 / row.offered_bids as f64;
    }
    row.median_guarantee = median(guarantees);
    if mode == Mode::Dpob {
        row.mean_dpob_iterations = Some(if searches > 0 {
            iterations as f64 / searches as f64
        } else {
            0.0
        });
    }
    Ok(row)
}

/// Runs every configured mode at every load.
///
/// The network at load `U` is drawn from a seed derived from the master
/// seed and `U`, so all modes see the same users. `dpob` uses `model` for
/// every user when one is given; otherwise it trains classifiers as
/// `config.bootstrap.scope` says, one per load point or one per user.
pub fn run_experiment(config: &ExperimentConfig, model: Option<&SvmModel>) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let fixed = model.map(|m| Acceptance::Svm(m.clone()));
    let mut rows = Vec::with_capacity(config.loads.len() * config.modes.len());
    for &users in &config.loads {
        let scenario = scenario_for_load(&config.scenario, users, derive_seed(config.seed, users as u64))?;
        let trained;
        let source = match (&fixed, config.bootstrap.scope) {
            _ if !config.modes.contains(&Mode::Dpob) => None,
            (Some(a), _) => Some(ClassifierSource::Shared(a)),
            (None, ClassifierScope::PerUser) => Some(ClassifierSource::PerUser),
            (None, ClassifierScope::Global) => {
                let seed = bootstrap_seed(config.seed, users);
                let boot = scenario_for_load(&config.scenario, users, seed)?;
                let weighting = WeightingFn::prelec(config.alpha)?;
                let history = bootstrap_history(&boot, weighting, &config.bootstrap, &config.grid, seed)?;
                trained = Acceptance::fit(&history, &config.svm)?;
                Some(ClassifierSource::Shared(&trained))
            }
        };
        for &mode in &config.modes {
            rows.push(run_scenario(&scenario, mode, config, source)?);
        }
    }
    Ok(rows)
}
