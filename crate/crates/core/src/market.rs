//! The leader-follower pricing game between service providers and a user.
//!
//! Each covered SP offers a bid `(rate, price, bandwidth)` whose
//! guarantee follows from the link. The user picks one of four strategies
//! `(p_c, p_w)` over the cellular bid and the best WiFi bid. SPs solve their
//! best response on the curve where the expected rate equals the user's
//! minimum, which reduces the two-dimensional search to one dimension.

use serde::{Deserialize, Serialize};

use crate::behavior::WeightingFn;
use crate::error::{Error, Result};
use crate::guarantee::{GuaranteeCurve, GuaranteeModel};
use crate::radio::{StationKind, UserNode};

/// Relative slack on the minimum-rate constraint. Best-response bids sit
/// exactly on the constraint and would otherwise flip on rounding.
pub const RATE_TOLERANCE: f64 = 1e-9;

/// Convex pricing `scale * rate^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingParams {
    pub scale: f64,
    pub exponent: f64,
}

impl PricingParams {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        let p = Self { scale, exponent };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid("pricing.scale", "must be positive"));
        }
        if !(self.exponent > 1.0 && self.exponent.is_finite()) {
            return Err(Error::invalid("pricing.exponent", "must exceed 1"));
        }
        Ok(())
    }
}

/// Linear service cost `per_rate * rate + per_bandwidth * bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub per_rate: f64,
    pub per_bandwidth: f64,
}

impl CostParams {
    pub fn new(per_rate: f64, per_bandwidth: f64) -> Result<Self> {
        let c = Self {
            per_rate,
            per_bandwidth,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.per_rate >= 0.0 && self.per_bandwidth >= 0.0) {
            return Err(Error::invalid("cost", "coefficients must be non-negative"));
        }
        Ok(())
    }
}

pub fn price(rate: f64, params: &PricingParams) -> f64 {
    params.scale * rate.powf(params.exponent)
}

pub fn sp_cost(rate: f64, bandwidth: f64, params: &CostParams) -> f64 {
    params.per_rate * rate + params.per_bandwidth * bandwidth
}

/// An SP offer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub sp_id: usize,
    /// Advertised rate, Mbps.
    pub rate: f64,
    pub price: f64,
    /// Bandwidth committed to the user, MHz.
    pub bandwidth: f64,
    /// Objective probability that the realised rate reaches `rate`.
    pub guarantee: f64,
}

impl Bid {
    pub fn new(
        sp_id: usize,
        rate: f64,
        bandwidth: f64,
        pricing: &PricingParams,
        curve: &impl GuaranteeCurve,
    ) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::invalid("rate", "must be non-negative"));
        }
        Ok(Bid {
            sp_id,
            rate,
            price: price(rate, pricing),
            bandwidth,
            guarantee: curve.service_guarantee(rate, bandwidth)?,
        })
    }

    /// `rate * guarantee`.
    pub fn expected_rate(&self) -> f64 {
        self.rate * self.guarantee
    }
}

/// Accept (`true`) or reject each of the two bids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct UserStrategy {
    pub cellular: bool,
    pub wifi: bool,
}

impl UserStrategy {
    pub const REJECT_ALL: UserStrategy = UserStrategy::new(false, false);

    pub const fn new(cellular: bool, wifi: bool) -> Self {
        Self { cellular, wifi }
    }

    /// All four strategies in lexicographic `(p_c, p_w)` order.
    pub fn all() -> [UserStrategy; 4] {
        [
            UserStrategy::new(false, false),
            UserStrategy::new(false, true),
            UserStrategy::new(true, false),
            UserStrategy::new(true, true),
        ]
    }

    pub fn accepted_count(&self) -> usize {
        self.cellular as usize + self.wifi as usize
    }
}

fn accepted(bid: Option<&Bid>, taken: bool) -> Option<&Bid> {
    bid.filter(|_| taken)
}

/// The user's (perceived) expected aggregate rate.
pub fn joint_rate(cellular: Option<&Bid>, wifi: Option<&Bid>, strategy: UserStrategy, weighting: WeightingFn) -> f64 {
    [accepted(cellular, strategy.cellular), accepted(wifi, strategy.wifi)]
        .into_iter()
        .flatten()
        .map(|b| b.rate * weighting.weight(b.guarantee))
        .sum()
}

fn total_price(cellular: Option<&Bid>, wifi: Option<&Bid>, strategy: UserStrategy) -> f64 {
    [accepted(cellular, strategy.cellular), accepted(wifi, strategy.wifi)]
        .into_iter()
        .flatten()
        .map(|b| b.price)
        .sum()
}

fn benefit(user: &UserNode, rate: f64) -> f64 {
    user.benefit_scale * rate.powf(1.0 / user.benefit_curvature)
}

/// `scale * joint_rate^(1/curvature) - payments`.
pub fn user_utility(
    cellular: Option<&Bid>,
    wifi: Option<&Bid>,
    strategy: UserStrategy,
    user: &UserNode,
    weighting: WeightingFn,
) -> f64 {
    let rate = joint_rate(cellular, wifi, strategy, weighting);
    benefit(user, rate) - total_price(cellular, wifi, strategy)
}

/// Best feasible strategy and its utility, or `None` when no strategy
/// satisfies both the rate floor and non-negative utility.
pub fn best_feasible_strategy(
    cellular: Option<&Bid>,
    wifi: Option<&Bid>,
    user: &UserNode,
    weighting: WeightingFn,
) -> Option<(UserStrategy, f64)> {
    let floor = user.min_rate * (1.0 - RATE_TOLERANCE);
    let mut best: Option<(UserStrategy, f64, f64)> = None;
    for s in UserStrategy::all() {
        if (s.cellular && cellular.is_none()) || (s.wifi && wifi.is_none()) {
            continue;
        }
        let rate = joint_rate(cellular, wifi, s, weighting);
        if rate < floor {
            continue;
        }
        let paid = total_price(cellular, wifi, s);
        let utility = benefit(user, rate) - paid;
        if utility < 0.0 {
            continue;
        }
        // strategies arrive in lexicographic order, so only strict
        // improvements replace the incumbent
        let better = match best {
            None => true,
            Some((_, u, p)) => utility > u || (utility == u && paid < p),
        };
        if better {
            best = Some((s, utility, paid));
        }
    }
    best.map(|(s, u, _)| (s, u))
}

/// The user's best response. Falls back to rejecting both bids when no
/// strategy is feasible.
pub fn solve_max1(cellular: Option<&Bid>, wifi: Option<&Bid>, user: &UserNode, weighting: WeightingFn) -> UserStrategy {
    best_feasible_strategy(cellular, wifi, user, weighting)
        .map(|(s, _)| s)
        .unwrap_or(UserStrategy::REJECT_ALL)
}

/// What an SP knows about one user when forming a bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpContext {
    pub sp_id: usize,
    pub kind: StationKind,
    pub pricing: PricingParams,
    pub cost: CostParams,
    pub guarantee: GuaranteeModel,
    /// Per-user bandwidth cap, MHz.
    pub bw_max: f64,
    /// Largest achievable rate at `bw_max`, Mbps.
    pub b_max: f64,
    /// The user's minimum rate, Mbps.
    pub min_rate: f64,
}

impl SpContext {
    pub fn make_bid(&self, rate: f64, bandwidth: f64) -> Result<Bid> {
        Bid::new(self.sp_id, rate, bandwidth, &self.pricing, &self.guarantee)
    }

    /// Revenue minus cost, assuming acceptance.
    pub fn margin(&self, rate: f64, bandwidth: f64) -> f64 {
        price(rate, &self.pricing) - sp_cost(rate, bandwidth, &self.cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub rate: f64,
    pub bandwidth: f64,
    pub utility: f64,
}

/// SP best response assuming the bid is accepted.
///
/// Searches `rate_grid_size` rates evenly spaced over `(min_rate, b_max]`
/// and, for each, uses the smallest bandwidth that keeps the expected rate
/// at the user's minimum. Candidates needing more than `bw_max` are
/// dropped. Returns `None` (abstain) when nothing is feasible.
pub fn solve_sp_best_response(ctx: &SpContext, rate_grid_size: usize) -> Option<BestResponse> {
    if rate_grid_size == 0 || !(ctx.bw_max > 0.0) || !(ctx.b_max > ctx.min_rate) {
        return None;
    }
    let span = ctx.b_max - ctx.min_rate;
    let mut best: Option<BestResponse> = None;
    for k in 1..=rate_grid_size {
        let rate = ctx.min_rate + span * k as f64 / rate_grid_size as f64;
        let Ok(bandwidth) = ctx.guarantee.min_bw_for_rate_constraint(rate, ctx.min_rate) else {
            continue;
        };
        if bandwidth > ctx.bw_max {
            continue;
        }
        let utility = ctx.margin(rate, bandwidth);
        if best.is_none_or(|b| utility > b.utility) {
            best = Some(BestResponse {
                rate,
                bandwidth,
                utility,
            });
        }
    }
    best
}

/// The best-response bid, if the SP bids at all.
pub fn best_response_bid(ctx: &SpContext, rate_grid_size: usize) -> Option<Bid> {
    let br = solve_sp_best_response(ctx, rate_grid_size)?;
    ctx.make_bid(br.rate, br.bandwidth).ok()
}

/// SP utility for one bid: resources are committed only on acceptance, so
/// a rejected bid earns nothing.
pub fn sp_utility(bid: &Bid, cost: &CostParams, accepted: bool) -> f64 {
    if accepted {
        bid.price - sp_cost(bid.rate, bid.bandwidth, cost)
    } else {
        0.0
    }
}

/// Result of one user's game.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GameOutcome {
    pub cellular_bid: Option<Bid>,
    /// Bid of the best serving WiFi SP.
    pub wifi_bid: Option<Bid>,
    pub strategy: UserStrategy,
    /// Utility as evaluated by the user (with its weighting).
    pub user_utility: f64,
    pub cellular_sp_utility: f64,
    pub wifi_sp_utility: f64,
    /// Whether a strategy satisfying the user's constraints existed.
    pub feasible: bool,
}

impl GameOutcome {
    pub fn sp_utilities(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if let Some(b) = &self.cellular_bid {
            out.push((b.sp_id, self.cellular_sp_utility));
        }
        if let Some(b) = &self.wifi_bid {
            out.push((b.sp_id, self.wifi_sp_utility));
        }
        out
    }

    pub fn offered(&self) -> usize {
        self.cellular_bid.is_some() as usize + self.wifi_bid.is_some() as usize
    }

    pub fn accepted(&self) -> usize {
        self.strategy.accepted_count()
    }

    pub fn sum_sp_utility(&self) -> f64 {
        self.cellular_sp_utility + self.wifi_sp_utility
    }
}

/// Plays one user's game.
///
/// `bidder` is the SPs' bidding machinery (best response, learned bidding,
/// ...). Among the WiFi offers, the one giving the user the highest
/// achievable utility alongside the cellular offer is presented; ties go to
/// the earlier SP in `wifi`.
pub fn stackelberg_round<F>(
    user: &UserNode,
    cellular: Option<&SpContext>,
    wifi: &[SpContext],
    weighting: WeightingFn,
    bidder: F,
) -> GameOutcome
where
    F: Fn(&SpContext) -> Option<Bid>,
{
    let cellular_bid = cellular.and_then(&bidder);

    let mut best_wifi: Option<(Bid, bool, f64)> = None;
    for ctx in wifi {
        let Some(bid) = bidder(ctx) else { continue };
        let (feasible, value) = match best_feasible_strategy(cellular_bid.as_ref(), Some(&bid), user, weighting) {
            Some((_, u)) => (true, u),
            None => (false, f64::NEG_INFINITY),
        };
        let better = match best_wifi {
            None => true,
            Some((_, f, v)) => (feasible && !f) || (feasible == f && value > v),
        };
        if better {
            best_wifi = Some((bid, feasible, value));
        }
    }
    let wifi_bid = best_wifi.map(|(b, _, _)| b);

    let (strategy, feasible) = match best_feasible_strategy(cellular_bid.as_ref(), wifi_bid.as_ref(), user, weighting) {
        Some((s, _)) => (s, true),
        None => (UserStrategy::REJECT_ALL, false),
    };
    let user_utility = user_utility(cellular_bid.as_ref(), wifi_bid.as_ref(), strategy, user, weighting);

    let wifi_cost = wifi_bid
        .and_then(|b| wifi.iter().find(|c| c.sp_id == b.sp_id))
        .map(|c| c.cost);
    GameOutcome {
        cellular_sp_utility: match (cellular_bid.as_ref(), cellular) {
            (Some(b), Some(ctx)) => sp_utility(b, &ctx.cost, strategy.cellular),
            _ => 0.0,
        },
        wifi_sp_utility: match (wifi_bid.as_ref(), wifi_cost) {
            (Some(b), Some(cost)) => sp_utility(b, &cost, strategy.wifi),
            _ => 0.0,
        },
        cellular_bid,
        wifi_bid,
        strategy,
        user_utility,
        feasible,
    }
}
