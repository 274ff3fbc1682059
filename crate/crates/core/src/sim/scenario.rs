//! Network layout and the per-user view each SP bids on.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guarantee::GuaranteeModel;
use crate::market::SpContext;
use crate::radio::{bw_per_user, link_budget, max_rate, LinkBudget, Position, Station, StationKind, UserNode};

use super::config::{Physics, ScenarioConfig, StationClass};

/// One macro cell at the origin, WiFi stations on a ring inside it and
/// users spread uniformly over the macro disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub physics: Physics,
    /// The macro station comes first.
    pub stations: Vec<Station>,
    pub users: Vec<UserNode>,
}

/// Derives a sub-seed from a seed and a tag (splitmix64 finaliser).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        ^ tag
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn station(id: usize, kind: StationKind, position: Position, class: &StationClass) -> Station {
    Station {
        id,
        kind,
        position,
        tx_power_dbm: class.tx_power_dbm,
        carrier_mhz: class.carrier_mhz,
        antenna_height_m: class.antenna_height_m,
        bandwidth_mhz: class.bandwidth_mhz,
        allocation_gain: class.allocation_gain,
        coverage_radius_m: class.coverage_radius_m,
        pricing: class.pricing,
        cost: class.cost,
    }
}

/// Builds the layout with `config.users` users.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut stations = vec![station(
        0,
        StationKind::Macro,
        Position::default(),
        &config.macro_station,
    )];
    let k = config.topology.wifi_count;
    let ring = config.topology.wifi_ring_fraction * config.macro_station.coverage_radius_m;
    for i in 0..k {
        let phi = TAU * i as f64 / k as f64;
        stations.push(station(
            i + 1,
            StationKind::Wifi,
            Position::new(ring * phi.cos(), ring * phi.sin()),
            &config.wifi,
        ));
    }
    for s in &stations {
        s.validate()?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = config.macro_station.coverage_radius_m;
    let u = &config.user;
    let users = (0..config.users)
        .map(|id| {
            // sqrt of a uniform radius fraction gives a uniform density on the disc
            let r = radius * rng.random::<f64>().sqrt();
            let phi = TAU * rng.random::<f64>();
            let active = rng.random::<f64>() < u.active_probability;
            UserNode {
                id,
                position: Position::new(r * phi.cos(), r * phi.sin()),
                active,
                min_rate: u.min_rate,
                benefit_scale: u.benefit_scale,
                benefit_curvature: u.benefit_curvature,
                antenna_height_m: u.antenna_height_m,
            }
        })
        .collect();
    Ok(Scenario {
        seed,
        physics: config.physics,
        stations,
        users,
    })
}

impl Scenario {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidData(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if s.stations.iter().filter(|st| st.kind == StationKind::Macro).count() != 1 {
            return Err(Error::Config("a scenario needs exactly one macro station".into()));
        }
        for st in &s.stations {
            st.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for u in &s.users {
            u.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn link(&self, station: &Station, user: &UserNode) -> LinkBudget {
        link_budget(station, user, self.physics.noise_mw, self.physics.sinr_threshold_db)
    }

    /// Whether `station` serves `user`: the SNR clears the threshold and
    /// the user is inside the nominal cell radius.
    pub fn covers(&self, station: &Station, user: &UserNode) -> bool {
        self.link(station, user).covered && station.position.distance(&user.position) <= station.coverage_radius_m
    }

    /// What every station knows about every user.
    pub fn market_views(&self) -> Vec<UserView> {
        let coverage: Vec<Vec<bool>> = self
            .stations
            .iter()
            .map(|s| self.users.iter().map(|u| self.covers(s, u)).collect())
            .collect();
        let budgets: Vec<Option<f64>> = self
            .stations
            .iter()
            .zip(&coverage)
            .map(|(s, cov)| {
                let flags: Vec<(bool, bool)> = self.users.iter().zip(cov).map(|(u, c)| (u.active, *c)).collect();
                bw_per_user(s, &flags).ok()
            })
            .collect();

        self.users
            .iter()
            .enumerate()
            .map(|(j, user)| {
                let mut cellular = None;
                let mut wifi = Vec::new();
                for (i, s) in self.stations.iter().enumerate() {
                    let (Some(bw_max), true, true) = (budgets[i], coverage[i][j], user.active) else {
                        continue;
                    };
                    let link = self.link(s, user);
                    let ctx = SpContext {
                        sp_id: s.id,
                        kind: s.kind,
                        pricing: s.pricing,
                        cost: s.cost,
                        guarantee: GuaranteeModel::new(link.mean_snr),
                        bw_max,
                        b_max: max_rate(bw_max, &link, true, true),
                        min_rate: user.min_rate,
                    };
                    match s.kind {
                        StationKind::Macro => cellular = Some(ctx),
                        StationKind::Wifi => wifi.push(ctx),
                    }
                }
                UserView {
                    user: user.clone(),
                    cellular,
                    wifi,
                }
            })
            .collect()
    }
}

/// One user with the bidding context of every station that serves it.
#[derive(Debug, Clone, PartialEq)]
pub struct UserView {
    pub user: UserNode,
    pub cellular: Option<SpContext>,
    pub wifi: Vec<SpContext>,
}

impl UserView {
    pub fn contexts(&self) -> impl Iterator<Item = &SpContext> {
        self.cellular.iter().chain(self.wifi.iter())
    }
}
