//! User decision models: objective (expected utility) users and users who
//! distort advertised guarantees with a Prelec probability weighting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{self, Bid, UserStrategy};
use crate::radio::UserNode;

/// How a user perceives an advertised probability.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightingFn {
    /// Objective probabilities.
    #[default]
    Identity,
    /// `w(p) = exp(-(-ln p)^alpha)` with `0 < alpha < 1`.
    Prelec { alpha: f64 },
}

impl WeightingFn {
    pub fn prelec(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(WeightingFn::Prelec { alpha })
    }

    pub fn weight(&self, p: f64) -> f64 {
        match *self {
            WeightingFn::Identity => p,
            WeightingFn::Prelec { alpha } => prelec_unchecked(p, alpha),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            WeightingFn::Identity => None,
            WeightingFn::Prelec { alpha } => Some(alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("Prelec parameter must lie in (0, 1), got {alpha}"),
        ))
    }
}

/// Prelec weighting of probability `p`. The endpoints are the continuous
/// limits `w(0) = 0` and `w(1) = 1`.
pub fn prelec(p: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("probability out of range: {p}")));
    }
    Ok(prelec_unchecked(p, alpha))
}

fn prelec_unchecked(p: f64, alpha: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        (-(-p.ln()).powf(alpha)).exp()
    }
}

/// The bid as the user sees it: only the guarantee is distorted.
pub fn perceive(bid: &Bid, weighting: WeightingFn) -> Bid {
    Bid {
        guarantee: weighting.weight(bid.guarantee),
        ..*bid
    }
}

/// The user's accept/reject decision on a pair of bids, evaluated on the
/// perceived bids.
pub fn decide(user: &UserNode, cellular: Option<&Bid>, wifi: Option<&Bid>, weighting: WeightingFn) -> UserStrategy {
    let c = cellular.map(|b| perceive(b, weighting));
    let w = wifi.map(|b| perceive(b, weighting));
    market::solve_max1(c.as_ref(), w.as_ref(), user, WeightingFn::Identity)
}
