//! Simulation and optimization engine for blockchain-enabled user-centric
//! mobile edge computing (UC-MEC).
//!
//! Users split their tasks across dynamically formed clusters of MEC-enabled
//! access points. After offloading, the APs record the resource trades with a
//! resource-aware RAFT variant whose leader is biased toward the AP with the
//! most spare capacity. The [`optimizer`] jointly chooses clustering,
//! bandwidth and compute so the total offloading plus consensus energy is
//! minimal, decomposed per AP with ADMM.
//!
//! Module map:
//! - [`scenario`]: configuration and reproducible network instances.
//! - [`channel`]: zero-forcing beamformers, uplink and backhaul SINR.
//! - [`consensus`]: reputation, leader model and an event-driven election.
//! - [`energetics`]: closed-form delay and energy evaluators.
//! - [`optimizer`]: ADMM global/local/dual updates and the per-AP solver.
//! - [`baselines`]: SO, BCDO, OO and RO comparison schemes.
//! - [`experiment`]: sweep runner, CSV output and plot files.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod consensus;
pub mod energetics;
mod error;
pub mod experiment;
pub mod optimizer;
pub mod scenario;

pub use config::{AdmmConfig, Range, SystemConfig};
pub use error::{Error, Result};
pub use scenario::Scenario;
