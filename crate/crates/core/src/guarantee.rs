//! Probabilistic service guarantees: `Pr(B >= b | BW)` for the realised
//! rate `B` of a link, and the bandwidth that makes a bid's expected rate
//! exactly meet the user's minimum.

use crate::error::{Error, Result};

/// A service-guarantee curve for one link.
pub trait GuaranteeCurve {
    /// Probability that the realised rate meets or exceeds `rate` (Mbps)
    /// when `bandwidth` (MHz) is allocated.
    fn service_guarantee(&self, rate: f64, bandwidth: f64) -> Result<f64>;

    /// The bandwidth at which `rate * guarantee(rate, bw) == min_rate`.
    fn min_bw_for_rate_constraint(&self, rate: f64, min_rate: f64) -> Result<f64>;
}

/// Rayleigh block fading: the realised rate is `BW * log2(1 + snr * X)` with
/// `X ~ Exp(1)`, so the guarantee is `exp(-(2^(b/BW) - 1) / snr)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteeModel {
    pub mean_snr: f64,
}

impl GuaranteeModel {
    pub fn new(mean_snr: f64) -> Self {
        Self { mean_snr }
    }
}

impl GuaranteeCurve for GuaranteeModel {
    fn service_guarantee(&self, rate: f64, bandwidth: f64) -> Result<f64> {
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth", "must be positive"));
        }
        if !(rate >= 0.0) {
            return Err(Error::invalid("rate", "must be non-negative"));
        }
        if rate == 0.0 {
            return Ok(1.0);
        }
        if !(self.mean_snr > 0.0) {
            return Ok(0.0);
        }
        // exp_m1 keeps precision when b/BW is small
        let threshold = (rate / bandwidth * std::f64::consts::LN_2).exp_m1();
        Ok((-threshold / self.mean_snr).exp())
    }

    fn min_bw_for_rate_constraint(&self, rate: f64, min_rate: f64) -> Result<f64> {
        if !(min_rate > 0.0) {
            return Err(Error::invalid("min_rate", "must be positive"));
        }
        if !(rate > min_rate) {
            return Err(Error::Infeasible(format!(
                "rate {rate} does not exceed the minimum {min_rate}; the guarantee would have to be 1"
            )));
        }
        let exponent = self.mean_snr * (rate / min_rate).ln();
        if !(exponent > 0.0) {
            return Err(Error::Infeasible("no signal to carry the rate".into()));
        }
        Ok(rate / exponent.ln_1p() * std::f64::consts::LN_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn zero_rate_is_certain() {
        for snr in [0.0, 0.5, 1.0, 1e4] {
            let m = GuaranteeModel::new(snr);
            assert_eq!(m.service_guarantee(0.0, 3.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn unit_spectral_efficiency() {
        let g = GuaranteeModel::new(1.0).service_guarantee(4.0, 4.0).unwrap();
        assert!((g - 1.0 / E).abs() < 1e-15);
    }

    #[test]
    fn wide_band_tends_to_one() {
        let m = GuaranteeModel::new(2.0);
        let g = m.service_guarantee(1.0, 1e9).unwrap();
        assert!((1.0 - g) < 1e-9);
    }

    #[test]
    fn bad_bandwidth() {
        let m = GuaranteeModel::new(2.0);
        assert!(m.service_guarantee(1.0, 0.0).is_err());
        assert!(m.service_guarantee(1.0, -1.0).is_err());
    }

    #[test]
    fn closed_form_inverse() {
        // snr = 1/ln2, b = 2, b_min = 1: snr * ln 2 = 1 and log2(2) = 1
        let bw = GuaranteeModel::new(1.0 / LN_2)
            .min_bw_for_rate_constraint(2.0, 1.0)
            .unwrap();
        assert!((bw - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tight_constraint_needs_headroom() {
        let m = GuaranteeModel::new(10.0);
        assert!(matches!(
            m.min_bw_for_rate_constraint(1.0, 1.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            m.min_bw_for_rate_constraint(0.5, 1.0),
            Err(Error::Infeasible(_))
        ));
        let dead = GuaranteeModel::new(0.0);
        assert!(matches!(
            dead.min_bw_for_rate_constraint(2.0, 1.0),
            Err(Error::Infeasible(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn decreasing_in_rate(snr in 0.01..1e4f64, bw in 0.01..100.0f64, b1 in 0.0..50.0f64, db in 1e-3..50.0f64) {
                let m = GuaranteeModel::new(snr);
                let g1 = m.service_guarantee(b1, bw).unwrap();
                let g2 = m.service_guarantee(b1 + db, bw).unwrap();
                prop_assume!(g1 > 1e-300);
                prop_assert!(g2 < g1);
            }

            #[test]
            fn increasing_in_bandwidth(snr in 0.01..1e4f64, b in 0.01..50.0f64, bw in 0.05..100.0f64, dbw in 1e-2..100.0f64) {
                let m = GuaranteeModel::new(snr);
                let g1 = m.service_guarantee(b, bw).unwrap();
                let g2 = m.service_guarantee(b, bw + dbw).unwrap();
                prop_assume!(g2 < 1.0 && g2 > 1e-300);
                prop_assert!(g2 > g1);
            }

            #[test]
            fn round_trip(snr in 0.05..1e4f64, b_min in 0.01..20.0f64, ratio in 1.001..20.0f64) {
                let m = GuaranteeModel::new(snr);
                let b = b_min * ratio;
                let bw = m.min_bw_for_rate_constraint(b, b_min).unwrap();
                let back = b * m.service_guarantee(b, bw).unwrap();
                prop_assert!(((back - b_min) / b_min).abs() < 1e-9);
            }

            #[test]
            fn min_bw_increasing_in_floor(snr in 0.05..1e4f64, b in 1.0..20.0f64, f1 in 0.05..0.9f64, df in 0.01..0.09f64) {
                let m = GuaranteeModel::new(snr);
                let lo = m.min_bw_for_rate_constraint(b, b * f1).unwrap();
                let hi = m.min_bw_for_rate_constraint(b, b * (f1 + df)).unwrap();
                prop_assert!(hi > lo);
            }
        }
    }
}
