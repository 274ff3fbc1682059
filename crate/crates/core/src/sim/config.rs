//! Scenario and experiment configuration, read from TOML.
//!
//! Every table has defaults, so a file only needs the keys it changes.
//! Unknown keys are rejected. The economics defaults are not calibrated
//! against any measured network. The macro cell is wide enough that its
//! advertised guarantees cross 1/e inside the default load sweep.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::SvmConfig;
use crate::market::{CostParams, PricingParams};
use crate::radio::FEET_TO_METERS;

/// Radio and economic parameters shared by every station of one kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationClass {
    pub tx_power_dbm: f64,
    pub carrier_mhz: f64,
    pub antenna_height_m: f64,
    pub bandwidth_mhz: f64,
    pub allocation_gain: f64,
    pub coverage_radius_m: f64,
    pub pricing: PricingParams,
    pub cost: CostParams,
}

impl StationClass {
    pub fn default_macro() -> Self {
        Self {
            tx_power_dbm: 43.0,
            carrier_mhz: 900.0,
            antenna_height_m: 30.0,
            bandwidth_mhz: 80.0,
            allocation_gain: 0.9,
            coverage_radius_m: 1000.0 * FEET_TO_METERS,
            pricing: PricingParams {
                scale: 3.0,
                exponent: 2.0,
            },
            cost: CostParams {
                per_rate: 0.05,
                per_bandwidth: 0.1,
            },
        }
    }

    pub fn default_wifi() -> Self {
        Self {
            tx_power_dbm: 20.0,
            carrier_mhz: 2400.0,
            antenna_height_m: 10.0,
            bandwidth_mhz: 20.0,
            allocation_gain: 0.8,
            coverage_radius_m: 300.0 * FEET_TO_METERS,
            pricing: PricingParams {
                scale: 3.0,
                exponent: 2.0,
            },
            cost: CostParams {
                per_rate: 0.05,
                per_bandwidth: 0.1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Topology {
    pub wifi_count: usize,
    /// Radius of the WiFi ring as a fraction of the macro radius.
    pub wifi_ring_fraction: f64,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            wifi_count: 8,
            wifi_ring_fraction: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    /// Noise power per link, mW.
    pub noise_mw: f64,
    pub sinr_threshold_db: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            noise_mw: 1e-10,
            sinr_threshold_db: 5.0,
        }
    }
}

/// Parameters drawn for every user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserClass {
    pub min_rate: f64,
    pub benefit_scale: f64,
    pub benefit_curvature: f64,
    pub antenna_height_m: f64,
    /// Probability that a user has demand.
    pub active_probability: f64,
}

impl Default for UserClass {
    fn default() -> Self {
        Self {
            min_rate: 1.0,
            benefit_scale: 16.0,
            benefit_curvature: 2.0,
            antenna_height_m: 1.5,
            active_probability: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub users: usize,
    pub topology: Topology,
    pub physics: Physics,
    pub user: UserClass,
    #[serde(rename = "macro")]
    pub macro_station: StationClass,
    pub wifi: StationClass,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            users: 200,
            topology: Topology::default(),
            physics: Physics::default(),
            user: UserClass::default(),
            macro_station: StationClass::default_macro(),
            wifi: StationClass::default_wifi(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        if !(t.wifi_ring_fraction >= 0.0 && t.wifi_ring_fraction <= 1.0) {
            return Err(Error::Config("topology.wifi_ring_fraction must lie in [0, 1]".into()));
        }
        if !(self.physics.noise_mw > 0.0) {
            return Err(Error::Config("physics.noise_mw must be positive".into()));
        }
        if !self.physics.sinr_threshold_db.is_finite() {
            return Err(Error::Config("physics.sinr_threshold_db must be finite".into()));
        }
        let u = &self.user;
        if !(u.active_probability >= 0.0 && u.active_probability <= 1.0) {
            return Err(Error::Config("user.active_probability must lie in [0, 1]".into()));
        }
        if !(u.min_rate > 0.0 && u.benefit_scale > 0.0 && u.benefit_curvature > 1.0 && u.antenna_height_m > 0.0) {
            return Err(Error::Config(
                "user: min_rate, benefit_scale and antenna_height_m must be positive, benefit_curvature > 1".into(),
            ));
        }
        for (name, c) in [("macro", &self.macro_station), ("wifi", &self.wifi)] {
            if !(c.bandwidth_mhz > 0.0 && c.allocation_gain > 0.0 && c.allocation_gain <= 1.0) {
                return Err(Error::Config(format!(
                    "{name}: bandwidth_mhz must be positive and allocation_gain in (0, 1]"
                )));
            }
            if !(c.carrier_mhz >= 1.0 && c.antenna_height_m >= 1.0 && c.coverage_radius_m > 0.0) {
                return Err(Error::Config(format!(
                    "{name}: carrier_mhz and antenna_height_m must be >= 1, coverage_radius_m > 0"
                )));
            }
            if !c.tx_power_dbm.is_finite() {
                return Err(Error::Config(format!("{name}: tx_power_dbm must be finite")));
            }
            c.pricing
                .validate()
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
            c.cost.validate().map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Objective users, best-response bids.
    Eut,
    /// Prelec-weighting users, best-response bids.
    PtDeviation,
    /// Prelec-weighting users, bids from the learned search.
    Dpob,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Eut, Mode::PtDeviation, Mode::Dpob];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Eut => "eut",
            Mode::PtDeviation => "pt_deviation",
            Mode::Dpob => "dpob",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eut" => Ok(Mode::Eut),
            "pt_deviation" | "pt" => Ok(Mode::PtDeviation),
            "dpob" => Ok(Mode::Dpob),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub rates: usize,
    pub bandwidths: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            rates: 32,
            bandwidths: 32,
        }
    }
}

/// Which offer history an acceptance classifier is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierScope {
    /// One classifier per network, pooled over a sample of its users.
    Global,
    /// One classifier per user and station, trained on that link's own
    /// decisions.
    #[default]
    PerUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub scope: ClassifierScope,
    /// Users sampled per network under the global scope.
    pub users: usize,
    pub bids_per_user: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            scope: ClassifierScope::default(),
            users: 10,
            bids_per_user: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub modes: Vec<Mode>,
    /// Prelec parameter of non-objective users.
    pub alpha: f64,
    /// User counts to sweep.
    pub loads: Vec<usize>,
    /// Rates tried by the best-response search.
    pub rate_grid_size: usize,
    pub grid: GridConfig,
    pub svm: SvmConfig,
    pub bootstrap: BootstrapConfig,
    pub scenario: ScenarioConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            modes: Mode::ALL.to_vec(),
            alpha: 0.5,
            loads: (1..=10).map(|k| 50 * k).collect(),
            rate_grid_size: 200,
            grid: GridConfig::default(),
            svm: SvmConfig::default(),
            bootstrap: BootstrapConfig::default(),
            scenario: ScenarioConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.modes.is_empty() {
            return Err(Error::Config("modes must not be empty".into()));
        }
        if self.modes.iter().any(|m| *m != Mode::Eut) && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.rate_grid_size == 0 || self.grid.rates == 0 || self.grid.bandwidths == 0 {
            return Err(Error::Config("grid sizes must be positive".into()));
        }
        if self.modes.contains(&Mode::Dpob) {
            if self.bootstrap.users == 0 || self.bootstrap.bids_per_user == 0 {
                return Err(Error::Config(
                    "bootstrap.users and bootstrap.bids_per_user must be positive".into(),
                ));
            }
            self.svm.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}
