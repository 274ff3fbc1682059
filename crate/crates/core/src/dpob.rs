//! Bid optimisation over a quantised `(rate, bandwidth)` grid.
//!
//! Every grid point is a state; from any state there is one deterministic
//! action per destination state, and with zero discount the value of an
//! action is the immediate reward of its destination bid. The search draws
//! random actions and prunes by dominance after each predicted decision:
//!
//! * accepted at `(b_j, BW_j)`: every bid with `b <= b_j` and `BW >= BW_j`
//!   earns the SP no more, so those actions are dropped;
//! * rejected at `(b_j, BW_j)`: every bid with `b >= b_j` and `BW <= BW_j`
//!   is worse for the user and would be rejected too.
//!
//! Both rules remove the sampled action itself, so the action set shrinks
//! every iteration.

use std::io::Write;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learn::{classify, SvmModel};
use crate::market::{price, sp_cost, CostParams, PricingParams};

/// Predicts whether the user accepts a bid.
pub trait BidClassifier {
    fn accepts(&self, rate: f64, price: f64, bandwidth: f64) -> bool;
}

impl BidClassifier for SvmModel {
    fn accepts(&self, rate: f64, price: f64, bandwidth: f64) -> bool {
        classify(self, &[rate, price, bandwidth]).1
    }
}

impl<F> BidClassifier for F
where
    F: Fn(f64, f64, f64) -> bool,
{
    fn accepts(&self, rate: f64, price: f64, bandwidth: f64) -> bool {
        self(rate, price, bandwidth)
    }
}

/// Quantised bid space: `M` rates by `N` bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BidGrid {
    rates: Vec<f64>,
    bandwidths: Vec<f64>,
}

/// One grid point. States are indexed row-major by rate:
/// `index = rate_index * N + bw_index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub index: usize,
    pub rate_index: usize,
    pub bw_index: usize,
    pub rate: f64,
    pub bandwidth: f64,
}

fn strictly_increasing_positive(v: &[f64]) -> bool {
    !v.is_empty() && v[0] > 0.0 && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl BidGrid {
    pub fn new(rates: Vec<f64>, bandwidths: Vec<f64>) -> Result<Self> {
        if !strictly_increasing_positive(&rates) {
            return Err(Error::invalid(
                "grid.rates",
                "need at least one positive, strictly increasing value",
            ));
        }
        if !strictly_increasing_positive(&bandwidths) {
            return Err(Error::invalid(
                "grid.bandwidths",
                "need at least one positive, strictly increasing value",
            ));
        }
        Ok(Self { rates, bandwidths })
    }

    /// `m` rates evenly spaced over `(rate_lo, rate_hi]` and `n` bandwidths
    /// evenly spaced over `(0, bw_hi]`.
    pub fn uniform(rate_lo: f64, rate_hi: f64, m: usize, bw_hi: f64, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("grid", "dimensions must be positive"));
        }
        if !(rate_hi > rate_lo && rate_lo >= 0.0) || !(bw_hi > 0.0) {
            return Err(Error::invalid("grid", "empty rate or bandwidth interval"));
        }
        let rates = (1..=m)
            .map(|k| rate_lo + (rate_hi - rate_lo) * k as f64 / m as f64)
            .collect();
        let bws = (1..=n).map(|k| bw_hi * k as f64 / n as f64).collect();
        Self::new(rates, bws)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn len(&self) -> usize {
        self.rates.len() * self.bandwidths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, index: usize) -> State {
        let n = self.bandwidths.len();
        let (ri, bi) = (index / n, index % n);
        State {
            index,
            rate_index: ri,
            bw_index: bi,
            rate: self.rates[ri],
            bandwidth: self.bandwidths[bi],
        }
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    /// Closest state in coordinates normalised by each axis' span; ties go
    /// to the lower index.
    pub fn nearest(&self, rate: f64, bandwidth: f64) -> State {
        let norm = |v: &[f64], x: f64| {
            let span = v[v.len() - 1] - v[0];
            if span > 0.0 {
                (x - v[0]) / span
            } else {
                x - v[0]
            }
        };
        let (tr, tb) = (norm(&self.rates, rate), norm(&self.bandwidths, bandwidth));
        let mut best = self.state(0);
        let mut best_d = f64::INFINITY;
        for s in self.states() {
            let d = (norm(&self.rates, s.rate) - tr).powi(2) + (norm(&self.bandwidths, s.bandwidth) - tb).powi(2);
            if d < best_d {
                best_d = d;
                best = s;
            }
        }
        best
    }
}

/// Immediate reward of moving to `dest`: the SP's margin on that bid if the
/// user is predicted to accept it, zero otherwise. Independent of the
/// source state.
pub fn reward(dest: &State, classifier: &impl BidClassifier, pricing: &PricingParams, cost: &CostParams) -> f64 {
    evaluate(dest, classifier, pricing, cost).0
}

fn evaluate(dest: &State, classifier: &impl BidClassifier, pricing: &PricingParams, cost: &CostParams) -> (f64, bool) {
    let r = price(dest.rate, pricing);
    let accepted = classifier.accepts(dest.rate, r, dest.bandwidth);
    let value = if accepted {
        r - sp_cost(dest.rate, dest.bandwidth, cost)
    } else {
        0.0
    };
    (value, accepted)
}

/// How an equal reward treats the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Later states with an equal reward replace the incumbent.
    #[default]
    Latest,
    /// Keep the first state that reached the best reward.
    Earliest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdpConfig {
    /// Fixed at zero; rewards are immediate.
    pub discount: f64,
    pub seed: u64,
    pub tie_break: TieBreak,
}

impl MdpConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            discount: 0.0,
            seed,
            tie_break: TieBreak::Latest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub state: usize,
    pub rate: f64,
    pub bandwidth: f64,
    pub reward: f64,
    pub accepted: bool,
    /// Actions left after pruning.
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpobResult {
    /// Best state found, `None` for the initial `(0, 0)` placeholder when no
    /// predicted-accepted bid reached a non-negative reward.
    pub best: Option<State>,
    pub utility: f64,
    pub iterations: usize,
    pub initial: State,
    pub trace: Vec<TraceStep>,
}

impl DpobResult {
    /// `(rate, bandwidth)` of the best state, `(0, 0)` when there is none.
    pub fn best_bid(&self) -> (f64, f64) {
        self.best.map_or((0.0, 0.0), |s| (s.rate, s.bandwidth))
    }
}

/// Runs the dominance-pruned random search from `initial`.
///
/// The incumbent starts at utility 0 with no state. A sampled state
/// replaces it when it is predicted accepted and its reward is at least the
/// incumbent's (strictly greater under [`TieBreak::Earliest`]).
pub fn dpob(
    grid: &BidGrid,
    initial: State,
    classifier: &impl BidClassifier,
    pricing: &PricingParams,
    cost: &CostParams,
    config: &MdpConfig,
) -> Result<DpobResult> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty"));
    }
    if initial.index >= grid.len() || grid.state(initial.index) != initial {
        return Err(Error::invalid("initial", "not a state of this grid"));
    }
    if config.discount != 0.0 {
        return Err(Error::invalid("discount", "only zero discount is supported"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut actions: Vec<usize> = (0..grid.len()).collect();
    let mut best: Option<State> = None;
    let mut utility = 0.0;
    let mut trace = Vec::new();

    while !actions.is_empty() {
        let pick = actions[rng.random_range(0..actions.len())];
        let s = grid.state(pick);
        let (r, accepted) = evaluate(&s, classifier, pricing, cost);
        let improves = match config.tie_break {
            TieBreak::Latest => r >= utility,
            TieBreak::Earliest => r > utility || (best.is_none() && r == utility),
        };
        if accepted && improves {
            utility = r;
            best = Some(s);
        }
        let n = grid.bandwidths.len();
        if accepted {
            actions.retain(|&k| !(k / n <= s.rate_index && k % n >= s.bw_index));
        } else {
            actions.retain(|&k| !(k / n >= s.rate_index && k % n <= s.bw_index));
        }
        trace.push(TraceStep {
            iteration: trace.len() + 1,
            state: pick,
            rate: s.rate,
            bandwidth: s.bandwidth,
            reward: r,
            accepted,
            remaining: actions.len(),
        });
    }
    Ok(DpobResult {
        best,
        utility,
        iterations: trace.len(),
        initial,
        trace,
    })
}

/// Exhaustive maximum of the reward over the grid. Ties go to the larger
/// rate, then the larger bandwidth.
pub fn brute_force_best_bid(
    grid: &BidGrid,
    classifier: &impl BidClassifier,
    pricing: &PricingParams,
    cost: &CostParams,
) -> (State, f64) {
    let mut best = grid.state(0);
    let mut best_r = reward(&best, classifier, pricing, cost);
    // row-major order visits larger (rate, bandwidth) later
    for s in grid.states().skip(1) {
        let r = reward(&s, classifier, pricing, cost);
        if r >= best_r {
            best = s;
            best_r = r;
        }
    }
    (best, best_r)
}

/// Writes a search trace as CSV with header
/// `iteration,state,rate,bandwidth,reward,accepted,remaining`.
pub fn write_trace_csv<W: Write>(trace: &[TraceStep], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for step in trace {
        w.serialize(step)?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

/// A random classifier whose acceptance region is upward-closed in
/// bandwidth and downward-closed in rate: accepted iff `bw_index` reaches a
/// non-decreasing staircase threshold over `rate_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseClassifier {
    rates: Vec<f64>,
    bandwidths: Vec<f64>,
    /// Minimum accepted bandwidth index per rate index; `N` rejects the
    /// whole column.
    threshold: Vec<usize>,
}

impl StaircaseClassifier {
    pub fn random(grid: &BidGrid, rng: &mut impl Rng) -> Self {
        let (m, n) = (grid.rates.len(), grid.bandwidths.len());
        let mut threshold = Vec::with_capacity(m);
        let mut level = rng.random_range(0..=n);
        for _ in 0..m {
            threshold.push(level);
            if level < n {
                level = rng.random_range(level..=n.min(level + 1 + n / 4));
            }
        }
        Self {
            rates: grid.rates.clone(),
            bandwidths: grid.bandwidths.clone(),
            threshold,
        }
    }

    pub fn from_thresholds(grid: &BidGrid, threshold: Vec<usize>) -> Result<Self> {
        if threshold.len() != grid.rates.len() || threshold.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("threshold", "need one non-decreasing entry per rate"));
        }
        Ok(Self {
            rates: grid.rates.clone(),
            bandwidths: grid.bandwidths.clone(),
            threshold,
        })
    }
}

impl BidClassifier for StaircaseClassifier {
    fn accepts(&self, rate: f64, _price: f64, bandwidth: f64) -> bool {
        // off-grid queries use the nearest grid column at or below
        let ri = self.rates.partition_point(|&r| r <= rate).saturating_sub(1);
        let bi = self.bandwidths.partition_point(|&b| b <= bandwidth);
        bi > self.threshold[ri]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub states: usize,
    pub rates: usize,
    pub bandwidths: usize,
    pub trials: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    /// `log_{4/3} |S|`.
    pub log_bound: f64,
}

/// Mean and maximum iteration counts of the search over random
/// staircase classifiers. `sizes` are `(rates, bandwidths)` grid shapes.
pub fn measure_convergence(sizes: &[(usize, usize)], trials: usize, seed: u64) -> Result<Vec<ConvergenceRow>> {
    if trials < 30 {
        return Err(Error::invalid("trials", "need at least 30 trials per size"));
    }
    let pricing = PricingParams::new(1.0, 2.0)?;
    let cost = CostParams::new(0.1, 0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &(m, n) in sizes {
        let grid = BidGrid::uniform(1.0, 1.0 + m as f64, m, n as f64, n)?;
        let mut total = 0usize;
        let mut worst = 0usize;
        for _ in 0..trials {
            let clf = StaircaseClassifier::random(&grid, &mut rng);
            let initial = grid.state(rng.random_range(0..grid.len()));
            let res = dpob(&grid, initial, &clf, &pricing, &cost, &MdpConfig::new(rng.next_u64()))?;
            total += res.iterations;
            worst = worst.max(res.iterations);
        }
        let states = m * n;
        rows.push(ConvergenceRow {
            states,
            rates: m,
            bandwidths: n,
            trials,
            mean_iterations: total as f64 / trials as f64,
            max_iterations: worst,
            log_bound: (states as f64).ln() / (4.0f64 / 3.0).ln(),
        });
    }
    Ok(rows)
}

/// Writes convergence rows as CSV.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<convergence>", e))?;
    Ok(())
}
