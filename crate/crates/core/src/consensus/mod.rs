//! Resource-aware RAFT: reputation, leader model and bandwidth split.
//!
//! APs with more spare compute and bandwidth earn a higher reputation, which
//! both shortens their election timeout (see [`sim`]) and raises their
//! probability `P_m = R_m / max_k R_k` of acting as leader in the expected
//! energy model.

pub mod sim;

pub use sim::{
    run_election_and_commit, Block, ConsensusTrace, NodeTrace, Role, RoleState, SimOptions,
    TimeoutMode, Transaction,
};

use crate::channel::BackhaulTable;
use crate::config::SystemConfig;
use crate::energetics;
use crate::error::{Error, Result};

/// `C-bar / L^b + B-bar / (L^s + L^b)`.
pub fn reputation(remaining_compute: f64, remaining_bandwidth: f64, ls: f64, lb: f64) -> f64 {
    remaining_compute / lb + remaining_bandwidth / (ls + lb)
}

/// Normalizes reputations by their maximum.
pub fn leader_probability(reputations: &[f64]) -> Result<Vec<f64>> {
    let max = reputations.iter().copied().fold(0.0, f64::max);
    if reputations.is_empty() || max <= 0.0 || !max.is_finite() {
        return Err(Error::DegenerateElection);
    }
    Ok(reputations.iter().map(|r| r / max).collect())
}

/// Splits the remaining bandwidth so state and block messages take equal time:
/// `B^s / L^s = B^b / L^b` and `B^s + B^b = B-bar`.
pub fn bandwidth_split(remaining_bandwidth: f64, ls: f64, lb: f64) -> (f64, f64) {
    let total = ls + lb;
    (remaining_bandwidth * ls / total, remaining_bandwidth * lb / total)
}

/// Per-AP consensus inputs derived from the resources left after offloading.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusProfile {
    pub remaining_compute: Vec<f64>,
    pub remaining_bandwidth: Vec<f64>,
    pub reputation: Vec<f64>,
    pub leader_probability: Vec<f64>,
    pub state_bw: Vec<f64>,
    pub block_bw: Vec<f64>,
    pub max_reputation: f64,
}

impl ConsensusProfile {
    pub fn new(
        remaining_compute: Vec<f64>,
        remaining_bandwidth: Vec<f64>,
        config: &SystemConfig,
    ) -> Result<Self> {
        if remaining_compute.len() != remaining_bandwidth.len() {
            return Err(Error::Domain("remaining resource vectors differ in length".into()));
        }
        if remaining_compute
            .iter()
            .chain(&remaining_bandwidth)
            .any(|&x| !(x >= 0.0) || !x.is_finite())
        {
            return Err(Error::Domain("remaining resources must be finite and >= 0".into()));
        }
        let (ls, lb) = (config.state_msg_size, config.block_size);
        let reputation: Vec<f64> = remaining_compute
            .iter()
            .zip(&remaining_bandwidth)
            .map(|(&c, &b)| reputation(c, b, ls, lb))
            .collect();
        let leader_probability = leader_probability(&reputation)?;
        let (state_bw, block_bw) = remaining_bandwidth
            .iter()
            .map(|&b| bandwidth_split(b, ls, lb))
            .unzip();
        let max_reputation = reputation.iter().copied().fold(0.0, f64::max);
        Ok(ConsensusProfile {
            remaining_compute,
            remaining_bandwidth,
            reputation,
            leader_probability,
            state_bw,
            block_bw,
            max_reputation,
        })
    }

    pub fn num_aps(&self) -> usize {
        self.reputation.len()
    }

    /// Replaces the reputation-derived leader probabilities, e.g. with the
    /// random draws of plain RAFT.
    pub fn with_leader_probability(mut self, probability: Vec<f64>) -> Result<Self> {
        if probability.len() != self.num_aps() || probability.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::Domain("leader probabilities must lie in [0, 1], one per AP".into()));
        }
        self.leader_probability = probability;
        Ok(self)
    }

    /// Highest-reputation AP, lowest index on ties.
    pub fn most_reputable(&self) -> usize {
        let mut best = 0;
        for (m, &r) in self.reputation.iter().enumerate() {
            if r > self.reputation[best] {
                best = m;
            }
        }
        best
    }
}

/// Expected consensus energy of AP `m`: leader cost weighted by `P_m`,
/// follower cost by `1 - P_m`.
pub fn expected_consensus_energy(
    profile: &ConsensusProfile,
    m: usize,
    net: &BackhaulTable,
    config: &SystemConfig,
) -> Result<f64> {
    let terms = energetics::ap_consensus_terms(profile, m, net, config)?;
    Ok(energetics::mix_roles(
        terms.leader_generation + terms.leader_transmission,
        terms.follower_transmission,
        profile.leader_probability[m],
    ))
}
