//! Bidding and pricing for heterogeneous wireless networks.
//!
//! A macro cell and several WiFi stations sell bandwidth to users. Each
//! station posts a bid `(rate, price, bandwidth, guarantee)`; the user takes
//! any subset of the best cellular and best WiFi bid. Users may weigh the
//! advertised guarantee objectively or through a Prelec distortion.
//!
//! * [`radio`]: path loss, coverage and per-user budgets.
//! * [`guarantee`]: the probability that a link sustains a rate.
//! * [`market`]: user and provider best responses and one game round.
//! * [`behavior`]: probability weighting and the user's decision.
//! * [`learn`]: a linear soft-margin SVM predicting user decisions.
//! * [`dpob`]: pruned random search over a quantised bid grid.
//! * [`sim`]: scenarios, training-data bootstrap and load sweeps.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod cli;
pub mod dpob;
pub mod error;
pub mod guarantee;
pub mod learn;
pub mod market;
pub mod radio;
pub mod sim;

pub use behavior::{decide, perceive, prelec, WeightingFn};
pub use dpob::{brute_force_best_bid, dpob, measure_convergence, BidClassifier, BidGrid, DpobResult, MdpConfig, State};
pub use error::{Error, Result};
pub use guarantee::{GuaranteeCurve, GuaranteeModel};
pub use learn::{classify, train_svm, Sample, SvmConfig, SvmModel};
pub use market::{Bid, CostParams, GameOutcome, PricingParams, SpContext, UserStrategy};
pub use radio::{LinkBudget, Position, Station, StationKind, UserNode};
