//! Physical layer: path loss, coverage, per-user bandwidth budgets and
//! achievable rates.
//!
//! Distances are metres internally; the propagation formula takes
//! kilometres. Powers are dBm at the interface and milliwatts inside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{CostParams, PricingParams};

/// Feet to metres.
pub const FEET_TO_METERS: f64 = 0.3048;

/// Links shorter than this are evaluated at this distance. The urban
/// propagation formula diverges as the distance goes to zero.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationKind {
    Macro,
    Wifi,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A base station run by one service provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: usize,
    pub kind: StationKind,
    pub position: Position,
    pub tx_power_dbm: f64,
    pub carrier_mhz: f64,
    pub antenna_height_m: f64,
    /// Total bandwidth available to the station, MHz.
    pub bandwidth_mhz: f64,
    /// Fraction of the band usable after guard bands, in (0, 1].
    pub allocation_gain: f64,
    /// Nominal cell radius; users outside it are not served.
    pub coverage_radius_m: f64,
    pub pricing: PricingParams,
    pub cost: CostParams,
}

impl Station {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_mhz > 0.0 && self.bandwidth_mhz.is_finite()) {
            return Err(Error::invalid("bandwidth_mhz", "must be positive"));
        }
        if !(self.allocation_gain > 0.0 && self.allocation_gain <= 1.0) {
            return Err(Error::invalid("allocation_gain", "must lie in (0, 1]"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::invalid("tx_power_dbm", "must be finite"));
        }
        if !(self.carrier_mhz >= 1.0) {
            return Err(Error::invalid("carrier_mhz", "must be at least 1 MHz"));
        }
        if !(self.antenna_height_m >= 1.0) {
            return Err(Error::invalid("antenna_height_m", "must be at least 1 m"));
        }
        if !(self.coverage_radius_m > 0.0) {
            return Err(Error::invalid("coverage_radius_m", "must be positive"));
        }
        self.pricing.validate()?;
        self.cost.validate()
    }

    pub fn tx_power_mw(&self) -> f64 {
        10f64.powf(self.tx_power_dbm / 10.0)
    }
}

/// A mobile user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserNode {
    pub id: usize,
    pub position: Position,
    /// Whether the user currently has data demand.
    pub active: bool,
    /// Minimum expected rate the user will accept, Mbps.
    pub min_rate: f64,
    /// Scale of the concave benefit `scale * rate^(1/curvature)`.
    pub benefit_scale: f64,
    /// Curvature of the benefit, > 1.
    pub benefit_curvature: f64,
    pub antenna_height_m: f64,
}

impl UserNode {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_rate > 0.0) {
            return Err(Error::invalid("min_rate", "must be positive"));
        }
        if !(self.benefit_scale > 0.0) {
            return Err(Error::invalid("benefit_scale", "must be positive"));
        }
        if !(self.benefit_curvature > 1.0) {
            return Err(Error::invalid("benefit_curvature", "must exceed 1"));
        }
        if !(self.antenna_height_m > 0.0) {
            return Err(Error::invalid("antenna_height_m", "must be positive"));
        }
        Ok(())
    }
}

/// Per-link quantities derived from geometry and the propagation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub path_loss_db: f64,
    /// Fading-averaged channel power gain (linear).
    pub mean_channel_gain: f64,
    /// Noise power, mW (linear).
    pub noise_variance: f64,
    /// `tx_power_mw * mean_channel_gain / noise_variance`.
    pub mean_snr: f64,
    /// SNR at or above the coverage threshold.
    pub covered: bool,
}

impl LinkBudget {
    pub fn snr_db(&self) -> f64 {
        10.0 * self.mean_snr.log10()
    }
}

/// Median urban path loss (Okumura-Hata) with the small/medium-city mobile
/// antenna correction.
///
/// The classical validity range is 150-1500 MHz, 30-200 m base height,
/// 1-10 m mobile height and 1-20 km distance. Values outside it are
/// evaluated with the same formula and not clamped.
pub fn hata_path_loss(freq_mhz: f64, base_height_m: f64, mobile_height_m: f64, distance_km: f64) -> Result<f64> {
    if !(freq_mhz > 0.0) {
        return Err(Error::invalid("freq_mhz", "must be positive"));
    }
    if !(distance_km > 0.0) {
        return Err(Error::invalid("distance_km", "must be positive"));
    }
    if !(base_height_m > 0.0) || !(mobile_height_m > 0.0) {
        return Err(Error::invalid("antenna height", "must be positive"));
    }
    Ok(hata_unchecked(freq_mhz, base_height_m, mobile_height_m, distance_km))
}

fn hata_unchecked(f: f64, hb: f64, hm: f64, d: f64) -> f64 {
    let lf = f.log10();
    let mobile_correction = (1.1 * lf - 0.7) * hm - (1.56 * lf - 0.8);
    69.55 + 26.16 * lf - 13.82 * hb.log10() - mobile_correction + (44.9 - 6.55 * hb.log10()) * d.log10()
}

/// Assembles the link budget between a station and a user.
///
/// Coverage is decided on SNR alone (inclusive threshold); the station's
/// nominal radius is applied by the scenario layer.
pub fn link_budget(station: &Station, user: &UserNode, noise_mw: f64, sinr_threshold_db: f64) -> LinkBudget {
    let distance_m = station.position.distance(&user.position).max(MIN_LINK_DISTANCE_M);
    let path_loss_db = hata_unchecked(
        station.carrier_mhz,
        station.antenna_height_m,
        user.antenna_height_m,
        distance_m / 1000.0,
    )
    .max(0.0);
    let mean_channel_gain = 10f64.powf(-path_loss_db / 10.0);
    let mean_snr = station.tx_power_mw() * mean_channel_gain / noise_mw;
    LinkBudget {
        path_loss_db,
        mean_channel_gain,
        noise_variance: noise_mw,
        mean_snr,
        covered: 10.0 * mean_snr.log10() >= sinr_threshold_db,
    }
}

/// Proportional-fair bandwidth cap per served user:
/// `allocation_gain * bandwidth / #(active and covered users)`.
///
/// `users` holds one `(active, covered)` pair per user in the network.
pub fn bw_per_user(station: &Station, users: &[(bool, bool)]) -> Result<f64> {
    let served = users.iter().filter(|(a, c)| *a && *c).count();
    if served == 0 {
        return Err(Error::NoDemand { station: station.id });
    }
    Ok(station.allocation_gain * station.bandwidth_mhz / served as f64)
}

/// Maximum achievable rate in Mbps for a bandwidth cap in MHz.
pub fn max_rate(bw_max: f64, link: &LinkBudget, active: bool, covered: bool) -> f64 {
    if !(active && covered) {
        return 0.0;
    }
    bw_max * (1.0 + link.mean_snr).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station(bandwidth: f64, gain: f64) -> Station {
        Station {
            id: 0,
            kind: StationKind::Macro,
            position: Position::default(),
            tx_power_dbm: 30.0,
            carrier_mhz: 900.0,
            antenna_height_m: 30.0,
            bandwidth_mhz: bandwidth,
            allocation_gain: gain,
            coverage_radius_m: 300.0,
            pricing: PricingParams::new(1.0, 2.0).unwrap(),
            cost: CostParams::new(0.1, 0.1).unwrap(),
        }
    }

    fn user_at(x: f64) -> UserNode {
        UserNode {
            id: 0,
            position: Position::new(x, 0.0),
            active: true,
            min_rate: 1.0,
            benefit_scale: 1.0,
            benefit_curvature: 2.0,
            antenna_height_m: 1.5,
        }
    }

    #[test]
    fn hata_reference_point() {
        // evaluated independently at 30 significant digits
        let loss = hata_path_loss(900.0, 30.0, 1.5, 1.0).unwrap();
        assert!((loss - 126.403_286_480_857).abs() < 1e-9, "{loss}");
    }

    #[test]
    fn hata_distance_slope() {
        let near = hata_path_loss(900.0, 30.0, 1.5, 1.0).unwrap();
        let far = hata_path_loss(900.0, 30.0, 1.5, 10.0).unwrap();
        let expected = 44.9 - 6.55 * 30f64.log10();
        assert!((far - near - expected).abs() < 1e-9);
        assert!(hata_path_loss(900.0, 30.0, 1.5, 2.0).unwrap() > near);
    }

    #[test]
    fn hata_rejects_bad_inputs() {
        assert!(hata_path_loss(900.0, 30.0, 1.5, 0.0).is_err());
        assert!(hata_path_loss(0.0, 30.0, 1.5, 1.0).is_err());
        assert!(hata_path_loss(900.0, 30.0, 1.5, -2.0).is_err());
    }

    #[test]
    fn link_budget_gain_from_loss() {
        let st = station(20.0, 1.0);
        let link = link_budget(&st, &user_at(100.0), 1e-10, 0.0);
        assert!((link.mean_channel_gain - 10f64.powf(-link.path_loss_db / 10.0)).abs() < 1e-30);
        assert!(link.covered);
        // threshold right at the SNR is inclusive
        let at = link_budget(&st, &user_at(100.0), 1e-10, link.snr_db());
        assert!(at.covered);
        let above = link_budget(&st, &user_at(100.0), 1e-10, link.snr_db() + 1e-6);
        assert!(!above.covered);
    }

    #[test]
    fn co_located_user_is_finite() {
        let st = station(20.0, 1.0);
        let link = link_budget(&st, &user_at(0.0), 1e-10, 0.0);
        assert!(link.path_loss_db >= 0.0 && link.mean_snr.is_finite());
    }

    #[test]
    fn bandwidth_budget_arithmetic() {
        let users = vec![(true, true); 10];
        assert_eq!(bw_per_user(&station(100.0, 1.0), &users).unwrap(), 10.0);
        let mut users = vec![(true, true); 9];
        users.push((false, true));
        users.push((true, false));
        assert!((bw_per_user(&station(200.0, 0.9), &users).unwrap() - 20.0).abs() < 1e-12);
        assert!(matches!(
            bw_per_user(&station(100.0, 1.0), &[(false, true), (true, false)]),
            Err(Error::NoDemand { .. })
        ));
    }

    #[test]
    fn max_rate_cases() {
        let link = LinkBudget {
            path_loss_db: 0.0,
            mean_channel_gain: 1.0,
            noise_variance: 1.0,
            mean_snr: 1.0,
            covered: true,
        };
        assert_eq!(max_rate(10.0, &link, true, true), 10.0);
        assert_eq!(max_rate(20.0, &link, true, true), 20.0);
        assert_eq!(max_rate(10.0, &link, false, true), 0.0);
        assert_eq!(max_rate(10.0, &link, true, false), 0.0);
        assert_eq!(max_rate(0.0, &link, true, true), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hata_increasing_in_distance(f in 150.0..1500.0f64, hb in 30.0..200.0f64, hm in 1.0..10.0f64,
                                           d in 1.0..20.0f64, step in 1e-3..5.0f64) {
                let a = hata_path_loss(f, hb, hm, d).unwrap();
                let b = hata_path_loss(f, hb, hm, d + step).unwrap();
                prop_assert!(b > a);
            }

            #[test]
            fn hata_increasing_in_frequency(f in 150.0..1400.0f64, hb in 30.0..200.0f64, hm in 1.0..10.0f64,
                                            d in 1.0..20.0f64, step in 1.0..100.0f64) {
                let a = hata_path_loss(f, hb, hm, d).unwrap();
                let b = hata_path_loss(f + step, hb, hm, d).unwrap();
                prop_assert!(b > a);
            }

            #[test]
            fn budget_is_conserved(bw in 1.0..500.0f64, gain in 0.01..1.0f64,
                                   flags in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
                let st = station(bw, gain);
                let served = flags.iter().filter(|(a, c)| *a && *c).count();
                match bw_per_user(&st, &flags) {
                    Ok(share) => prop_assert!((share * served as f64 - gain * bw).abs() <= 1e-9 * gain * bw),
                    Err(_) => prop_assert_eq!(served, 0),
                }
            }

            #[test]
            fn max_rate_nonnegative(bw in 0.0..100.0f64, snr in 0.0..1e6f64, a: bool, c: bool) {
                let link = LinkBudget { path_loss_db: 0.0, mean_channel_gain: 1.0, noise_variance: 1.0, mean_snr: snr, covered: c };
                let r = max_rate(bw, &link, a, c);
                prop_assert!(r >= 0.0);
                prop_assert_eq!(r == 0.0, bw == 0.0 || !(a && c) || snr == 0.0);
            }
        }
    }
}
