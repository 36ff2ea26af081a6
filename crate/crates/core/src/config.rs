//! System and solver configuration.
//!
//! Configuration files are TOML with four sections, `[network]`, `[tasks]`,
//! `[consensus]` and `[admm]`. Every key mirrors a field name of
//! [`SystemConfig`] or [`AdmmConfig`]; missing keys take the defaults below.
//!
//! ```toml
//! [network]
//! num_aps = 5
//! num_users = 5
//! ap_bandwidth_range = [10e6, 50e6]
//!
//! [consensus]
//! block_size = 750e3
//!
//! [admm]
//! penalty_q = 100.0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::config(field, "bounds must be finite"));
        }
        if self.lo <= 0.0 {
            return Err(Error::config(field, "lower bound must be positive"));
        }
        if self.hi < self.lo {
            return Err(Error::config(field, "empty range (hi < lo)"));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Range {
    fn from(v: [f64; 2]) -> Self {
        Range::new(v[0], v[1])
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lo, r.hi]
    }
}

/// Physical parameters of one UC-MEC network.
///
/// Units are SI throughout: Hz, cycles/s, bits, seconds, watts, joules.
/// Defaults reproduce the simulation settings of the reference deployment
/// (5 APs, 5 users, 10 kbit state messages, 500 kbit blocks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas_per_ap: usize,
    pub ap_bandwidth_range: Range,
    pub ap_compute_range: Range,
    pub task_size_range: Range,
    pub compute_density_range: Range,
    pub delay_tolerance_range: Range,
    pub user_tx_power: f64,
    pub ap_tx_power: f64,
    pub ap_interference_power: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_psd: f64,
    /// Transmission energy coefficient, J/s.
    pub epsilon_c: f64,
    /// Computing energy coefficient, J/s.
    pub epsilon_p: f64,
    pub state_msg_size: f64,
    pub block_size: f64,
    /// Heartbeat rounds per block (block interval in blocks).
    pub block_interval: u32,
    pub deployment_radius: f64,
    pub path_loss_exponent: f64,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_aps: 5,
            num_users: 5,
            antennas_per_ap: 16,
            ap_bandwidth_range: Range::new(10e6, 50e6),
            ap_compute_range: Range::new(5e9, 20e9),
            task_size_range: Range::new(100e3, 200e3),
            compute_density_range: Range::new(1000.0, 2000.0),
            delay_tolerance_range: Range::new(0.100, 0.150),
            user_tx_power: 0.1,
            ap_tx_power: 0.2,
            ap_interference_power: 0.02,
            noise_psd: -174.0,
            epsilon_c: 1.5,
            epsilon_p: 1.0,
            state_msg_size: 10e3,
            block_size: 500e3,
            block_interval: 1,
            deployment_radius: 100.0,
            path_loss_exponent: 3.76,
            rng_seed: 42,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_aps < 1 {
            return Err(Error::config("num_aps", "at least one AP is required"));
        }
        if self.num_users < 1 {
            return Err(Error::config("num_users", "at least one user is required"));
        }
        if self.antennas_per_ap <= self.num_users {
            return Err(Error::config(
                "antennas_per_ap",
                format!(
                    "need more antennas than users ({} <= {})",
                    self.antennas_per_ap, self.num_users
                ),
            ));
        }
        self.ap_bandwidth_range.validate("ap_bandwidth_range")?;
        self.ap_compute_range.validate("ap_compute_range")?;
        self.task_size_range.validate("task_size_range")?;
        self.compute_density_range.validate("compute_density_range")?;
        self.delay_tolerance_range.validate("delay_tolerance_range")?;
        for (name, v) in [
            ("user_tx_power", self.user_tx_power),
            ("ap_tx_power", self.ap_tx_power),
            ("ap_interference_power", self.ap_interference_power),
            ("epsilon_c", self.epsilon_c),
            ("epsilon_p", self.epsilon_p),
            ("state_msg_size", self.state_msg_size),
            ("block_size", self.block_size),
            ("deployment_radius", self.deployment_radius),
            ("path_loss_exponent", self.path_loss_exponent),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be strictly positive"));
            }
        }
        if !self.noise_psd.is_finite() {
            return Err(Error::config("noise_psd", "must be finite"));
        }
        if self.state_msg_size >= self.block_size {
            return Err(Error::config(
                "state_msg_size",
                "state messages must be smaller than blocks",
            ));
        }
        Ok(())
    }

    /// Checks the invariants that only matter for the consensus model (M >= 2).
    pub fn validate_consensus(&self) -> Result<()> {
        self.validate()?;
        if self.num_aps < 2 {
            return Err(Error::config("num_aps", "consensus needs at least two APs"));
        }
        Ok(())
    }
}

/// Parameters of the ADMM framework and its per-AP solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    /// Augmented Lagrangian penalty `q`.
    pub penalty_q: f64,
    /// Stopping tolerance on `||A - Â||_2`.
    pub gamma_stop: f64,
    pub t_max: usize,
    /// Allocation floor `beta` as a fraction of the smallest AP resource.
    pub beta_scale: f64,
    /// Energy unit used inside the augmented Lagrangian, in joules.
    pub energy_unit: f64,
    pub dc_max_iters: usize,
    pub dc_tol: f64,
    pub inner_max_iters: usize,
    /// Clustering fractions below this are treated as inactive after convergence.
    pub inactive_threshold: f64,
    /// Solve the per-AP subproblems concurrently.
    pub parallel: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            penalty_q: 100.0,
            gamma_stop: 0.01,
            t_max: 100,
            beta_scale: 1e-3,
            energy_unit: 1.0,
            dc_max_iters: 50,
            dc_tol: 1e-4,
            inner_max_iters: 10_000,
            inactive_threshold: 1e-3,
            parallel: true,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_q > 0.0) {
            return Err(Error::config("penalty_q", "must be positive"));
        }
        if !(self.gamma_stop > 0.0) {
            return Err(Error::config("gamma_stop", "must be positive"));
        }
        if self.t_max < 1 {
            return Err(Error::config("t_max", "must be at least 1"));
        }
        if !(self.beta_scale > 0.0 && self.beta_scale < 1.0) {
            return Err(Error::config("beta_scale", "must lie in (0, 1)"));
        }
        if !(self.energy_unit > 0.0) {
            return Err(Error::config("energy_unit", "must be positive"));
        }
        if self.dc_max_iters < 1 {
            return Err(Error::config("dc_max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default)]
struct NetworkSection {
    num_aps: Option<usize>,
    num_users: Option<usize>,
    antennas_per_ap: Option<usize>,
    ap_bandwidth_range: Option<Range>,
    ap_compute_range: Option<Range>,
    user_tx_power: Option<f64>,
    ap_tx_power: Option<f64>,
    ap_interference_power: Option<f64>,
    noise_psd: Option<f64>,
    deployment_radius: Option<f64>,
    path_loss_exponent: Option<f64>,
    rng_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default)]
struct TasksSection {
    task_size_range: Option<Range>,
    compute_density_range: Option<Range>,
    delay_tolerance_range: Option<Range>,
    epsilon_c: Option<f64>,
    epsilon_p: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default)]
struct ConsensusSection {
    state_msg_size: Option<f64>,
    block_size: Option<f64>,
    block_interval: Option<u32>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    network: NetworkSection,
    tasks: TasksSection,
    consensus: ConsensusSection,
    admm: AdmmConfig,
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub system: SystemConfig,
    pub admm: AdmmConfig,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, [$($f:ident),* $(,)?]) => {
        $( if let Some(v) = $src.$f { $dst.$f = v; } )*
    };
}

impl Config {
    /// Parses a TOML document; absent keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Config> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut system = SystemConfig::default();
        overlay!(
            system,
            file.network,
            [
                num_aps,
                num_users,
                antennas_per_ap,
                ap_bandwidth_range,
                ap_compute_range,
                user_tx_power,
                ap_tx_power,
                ap_interference_power,
                noise_psd,
                deployment_radius,
                path_loss_exponent,
                rng_seed,
            ]
        );
        overlay!(
            system,
            file.tasks,
            [task_size_range, compute_density_range, delay_tolerance_range, epsilon_c, epsilon_p]
        );
        overlay!(system, file.consensus, [state_msg_size, block_size, block_interval]);
        system.validate()?;
        file.admm.validate()?;
        Ok(Config {
            system,
            admm: file.admm,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::from_toml_str(&text)
    }

    /// Renders the configuration back to TOML with every key present.
    pub fn to_toml_string(&self) -> String {
        let s = &self.system;
        let file = ConfigFile {
            network: NetworkSection {
                num_aps: Some(s.num_aps),
                num_users: Some(s.num_users),
                antennas_per_ap: Some(s.antennas_per_ap),
                ap_bandwidth_range: Some(s.ap_bandwidth_range),
                ap_compute_range: Some(s.ap_compute_range),
                user_tx_power: Some(s.user_tx_power),
                ap_tx_power: Some(s.ap_tx_power),
                ap_interference_power: Some(s.ap_interference_power),
                noise_psd: Some(s.noise_psd),
                deployment_radius: Some(s.deployment_radius),
                path_loss_exponent: Some(s.path_loss_exponent),
                rng_seed: Some(s.rng_seed),
            },
            tasks: TasksSection {
                task_size_range: Some(s.task_size_range),
                compute_density_range: Some(s.compute_density_range),
                delay_tolerance_range: Some(s.delay_tolerance_range),
                epsilon_c: Some(s.epsilon_c),
                epsilon_p: Some(s.epsilon_p),
            },
            consensus: ConsensusSection {
                state_msg_size: Some(s.state_msg_size),
                block_size: Some(s.block_size),
                block_interval: Some(s.block_interval),
            },
            admm: self.admm.clone(),
        };
        toml::to_string(&file).expect("config serializes")
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            system: SystemConfig::default(),
            admm: AdmmConfig::default(),
        }
    }
}
