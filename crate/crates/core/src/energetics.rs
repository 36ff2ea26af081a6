//! Closed-form delay and energy of offloading and consensus.
//!
//! Pairs with `a_{m,n} = 0` cost nothing regardless of `b` and `c`.
//! Remaining resources are floored at [`RESOURCE_FLOOR`] so the consensus
//! formulas stay finite when an allocation saturates an AP.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::channel::{BackhaulTable, SinrTable};
use crate::config::SystemConfig;
use crate::consensus::ConsensusProfile;
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Floor for remaining bandwidth (Hz) and compute (cycles/s).
pub const RESOURCE_FLOOR: f64 = 1.0;

/// Clustering fractions with the bandwidth (Hz) and compute (cycles/s) each
/// AP grants each user. All matrices are `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl Allocation {
    pub fn num_aps(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.a.ncols()
    }

    /// `(C-bar_m, B-bar_m)` per AP, floored.
    pub fn remaining(&self, scenario: &Scenario) -> (Vec<f64>, Vec<f64>) {
        scenario
            .aps
            .iter()
            .enumerate()
            .map(|(m, ap)| {
                (
                    (ap.compute - self.c.row(m).sum()).max(RESOURCE_FLOOR),
                    (ap.bandwidth - self.b.row(m).sum()).max(RESOURCE_FLOOR),
                )
            })
            .unzip()
    }

    /// Largest relative capacity overshoot across APs (0 when feasible).
    pub fn capacity_violation(&self, scenario: &Scenario) -> f64 {
        scenario
            .aps
            .iter()
            .enumerate()
            .map(|(m, ap)| {
                let over_c = self.c.row(m).sum() / ap.compute - 1.0;
                let over_b = self.b.row(m).sum() / ap.bandwidth - 1.0;
                over_c.max(over_b).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Offloading delays in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadDelays {
    /// `D^u_{m,n}`.
    pub transmission: DMatrix<f64>,
    /// `D^e_{m,n}`.
    pub computing: DMatrix<f64>,
    /// `D^o_n`, the slowest cluster member.
    pub user: Vec<f64>,
}

/// Transmission and computing delay of every pair, and the per-user
/// offloading delay.
pub fn offload_delays(
    scenario: &Scenario,
    sinr: &SinrTable,
    alloc: &Allocation,
) -> Result<OffloadDelays> {
    let (mc, nc) = (alloc.num_aps(), alloc.num_users());
    let mut du = DMatrix::zeros(mc, nc);
    let mut de = DMatrix::zeros(mc, nc);
    for n in 0..nc {
        let task = &scenario.users[n];
        for m in 0..mc {
            let a = alloc.a[(m, n)];
            if a <= 0.0 {
                continue;
            }
            let rate = alloc.b[(m, n)] * sinr.spectral_efficiency(m, n);
            let c = alloc.c[(m, n)];
            if !(rate > 0.0) || !(c > 0.0) {
                return Err(Error::InfeasibleAllocation {
                    ap: m,
                    user: n,
                    reason: "positive share with no bandwidth, rate or compute".into(),
                });
            }
            du[(m, n)] = a * task.task_bits / rate;
            de[(m, n)] = a * task.cycles() / c;
        }
    }
    let mut user = Vec::with_capacity(nc);
    for n in 0..nc {
        user.push(user_delay(&alloc.a, &du, &de, n)?);
    }
    Ok(OffloadDelays {
        transmission: du,
        computing: de,
        user,
    })
}

fn user_delay(a: &DMatrix<f64>, du: &DMatrix<f64>, de: &DMatrix<f64>, n: usize) -> Result<f64> {
    (0..a.nrows())
        .filter(|&m| a[(m, n)] > 0.0)
        .map(|m| du[(m, n)] + de[(m, n)])
        .reduce(f64::max)
        .ok_or(Error::EmptyCluster { user: n })
}

/// `D^o_n`: the maximum of `D^u + D^e` over user `n`'s cluster.
pub fn user_offload_delay(alloc: &Allocation, delays: &OffloadDelays, n: usize) -> Result<f64> {
    user_delay(&alloc.a, &delays.transmission, &delays.computing, n)
}

/// Offloading energy in joules.
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadEnergy {
    /// `E^u_{m,n}`, spent by the user.
    pub transmission: DMatrix<f64>,
    /// `E^e_{m,n}`, spent by the AP.
    pub computing: DMatrix<f64>,
    /// `E^o_m`.
    pub ap: Vec<f64>,
    /// `E^o_n`.
    pub user: Vec<f64>,
}

impl OffloadEnergy {
    pub fn total(&self) -> f64 {
        self.ap.iter().sum::<f64>() + self.user.iter().sum::<f64>()
    }
}

pub fn offload_energy(delays: &OffloadDelays, epsilon_c: f64, epsilon_p: f64) -> OffloadEnergy {
    let transmission = &delays.transmission * epsilon_c;
    let computing = &delays.computing * epsilon_p;
    let ap = computing.row_iter().map(|r| r.sum()).collect();
    let user = transmission.column_iter().map(|c| c.sum()).collect();
    OffloadEnergy {
        transmission,
        computing,
        ap,
        user,
    }
}

/// Leader and follower costs of one AP.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ApConsensusTerms {
    /// `E_l^s`.
    pub leader_state: f64,
    /// `E_l^b`.
    pub leader_block: f64,
    /// `E_l^t = E_l^s + E_l^b`.
    pub leader_transmission: f64,
    /// `D_l^g`, seconds.
    pub generation_delay: f64,
    /// `E_l^g`.
    pub leader_generation: f64,
    /// `D_f^s`, seconds.
    pub follower_delay: f64,
    /// `E_f^t`.
    pub follower_transmission: f64,
}

fn log_rate(sinr: f64, what: &str) -> Result<f64> {
    let se = (1.0 + sinr).log2();
    if se > 0.0 && se.is_finite() {
        Ok(se)
    } else {
        Err(Error::InfiniteDelay(format!("{what}: backhaul SINR {sinr} carries no data")))
    }
}

/// Consensus costs of AP `m` acting as leader and as follower. A single AP
/// runs no consensus and costs nothing.
pub fn ap_consensus_terms(
    profile: &ConsensusProfile,
    m: usize,
    net: &BackhaulTable,
    config: &SystemConfig,
) -> Result<ApConsensusTerms> {
    let mc = profile.num_aps();
    if mc < 2 {
        return Ok(ApConsensusTerms::default());
    }
    let (ls, lb) = (config.state_msg_size, config.block_size);
    let di = config.block_interval as f64;
    let followers = (mc - 1) as f64;
    let eps_c = config.epsilon_c;
    let (bs, bb) = (profile.state_bw[m], profile.block_bw[m]);
    if !(bs > 0.0 && bb > 0.0) {
        return Err(Error::InfiniteDelay(format!("AP {m} has no remaining bandwidth")));
    }
    let mut leader_state = 0.0;
    let mut leader_block = 0.0;
    for i in (0..mc).filter(|&i| i != m) {
        let se = log_rate(net.sinr(m, i), "leader link")?;
        leader_state += eps_c * (2.0 + di) * followers * ls / (bs / (2.0 + di) * se);
        leader_block += eps_c * followers * lb / (bb / followers * se);
    }
    let c_bar = profile.remaining_compute[m];
    if !(c_bar > 0.0) {
        return Err(Error::InfiniteDelay(format!("AP {m} has no remaining compute")));
    }
    let generation_delay = lb / c_bar;
    let b_bar = profile.remaining_bandwidth[m];
    let follower_delay =
        ls * (di + 2.0) / (b_bar / (di + 2.0) * log_rate(net.mean(m), "follower link")?);
    Ok(ApConsensusTerms {
        leader_state,
        leader_block,
        leader_transmission: leader_state + leader_block,
        generation_delay,
        leader_generation: config.epsilon_p * generation_delay,
        follower_delay,
        follower_transmission: eps_c * follower_delay,
    })
}

/// `leader * p + follower * (1 - p)`.
pub fn mix_roles(leader: f64, follower: f64, p: f64) -> f64 {
    leader * p + follower * (1.0 - p)
}

/// Consensus energy in joules.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEnergy {
    pub terms: Vec<ApConsensusTerms>,
    /// `E^c_m`.
    pub ap: Vec<f64>,
}

impl ConsensusEnergy {
    pub fn total(&self) -> f64 {
        self.ap.iter().sum()
    }
}

pub fn consensus_energy(
    profile: &ConsensusProfile,
    net: &BackhaulTable,
    config: &SystemConfig,
) -> Result<ConsensusEnergy> {
    let mut terms = Vec::with_capacity(profile.num_aps());
    let mut ap = Vec::with_capacity(profile.num_aps());
    for m in 0..profile.num_aps() {
        let t = ap_consensus_terms(profile, m, net, config)?;
        ap.push(mix_roles(
            t.leader_generation + t.leader_transmission,
            t.follower_transmission,
            profile.leader_probability[m],
        ));
        terms.push(t);
    }
    Ok(ConsensusEnergy { terms, ap })
}

/// `E^a = sum_m (E^o_m + E^c_m) + sum_n E^o_n`.
pub fn total_energy(offload: &OffloadEnergy, consensus: &ConsensusEnergy) -> f64 {
    offload
        .ap
        .iter()
        .zip(&consensus.ap)
        .map(|(o, c)| o + c)
        .sum::<f64>()
        + offload.user.iter().sum::<f64>()
}

/// Worst-case consensus latency `D^c` in seconds: for each prospective
/// leader, the slowest state exchange, follower reply and block copy plus
/// block generation. Zero with a single AP.
pub fn consensus_delay(
    profile: &ConsensusProfile,
    net: &BackhaulTable,
    config: &SystemConfig,
) -> Result<f64> {
    let mc = profile.num_aps();
    if mc < 2 {
        return Ok(0.0);
    }
    let (ls, lb) = (config.state_msg_size, config.block_size);
    let k = config.block_interval as f64 + 2.0;
    let followers = (mc - 1) as f64;
    if let Some(m) = profile.remaining_bandwidth.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::InfiniteDelay(format!("AP {m} has no remaining bandwidth")));
    }
    let mut worst = 0.0_f64;
    for m in 0..mc {
        let mut state = 0.0_f64;
        let mut reply = 0.0_f64;
        let mut block = 0.0_f64;
        for j in (0..mc).filter(|&j| j != m) {
            let se = log_rate(net.sinr(m, j), "leader link")?;
            state = state.max(followers * ls * k * k / (profile.state_bw[m] * se));
            block = block.max(followers * lb / (profile.block_bw[m] * se));
            let se_j = log_rate(net.mean(j), "follower link")?;
            reply = reply.max(k * k * ls / (profile.remaining_bandwidth[j] * se_j));
        }
        let c_bar = profile.remaining_compute[m];
        if !(c_bar > 0.0) {
            return Err(Error::InfiniteDelay(format!("AP {m} has no remaining compute")));
        }
        worst = worst.max(state + reply + block + lb / c_bar);
    }
    Ok(worst)
}

/// All energy terms of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub offload: OffloadEnergy,
    pub consensus: ConsensusEnergy,
    /// `E^a`.
    pub total: f64,
}

impl EnergyBreakdown {
    /// `E^o = sum_n E^o_n + sum_m E^o_m`.
    pub fn offloading(&self) -> f64 {
        self.offload.total()
    }

    /// `E^c = sum_m E^c_m`.
    pub fn consensus_total(&self) -> f64 {
        self.consensus.total()
    }
}

/// All delay terms of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBreakdown {
    pub offload: OffloadDelays,
    /// `D^c`.
    pub consensus: f64,
}

impl DelayBreakdown {
    /// `D^o`, the mean per-user offloading delay.
    pub fn mean_offload(&self) -> f64 {
        self.offload.user.iter().sum::<f64>() / self.offload.user.len() as f64
    }

    /// `D^a = D^o + D^c`.
    pub fn total(&self) -> f64 {
        self.mean_offload() + self.consensus
    }
}

/// Delay, energy and consensus profile of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub energy: EnergyBreakdown,
    pub delay: DelayBreakdown,
    pub profile: ConsensusProfile,
}

impl Evaluation {
    /// Users whose offloading delay exceeds their tolerance by more than
    /// `rel_tol` relative.
    pub fn late_users(&self, scenario: &Scenario, rel_tol: f64) -> Vec<usize> {
        (0..scenario.num_users())
            .filter(|&n| self.delay.offload.user[n] > scenario.users[n].deadline * (1.0 + rel_tol))
            .collect()
    }

    /// One row per `(m, n)` pair, one per AP, and a totals footer.
    pub fn to_csv(&self) -> String {
        let off = &self.delay.offload;
        let en = &self.energy.offload;
        let mut out = String::from("kind,m,n,d_u,d_e,e_u,e_e,e_o_m,e_c_m,d_o_n\n");
        let (mc, nc) = off.transmission.shape();
        for m in 0..mc {
            for n in 0..nc {
                let _ = writeln!(
                    out,
                    "pair,{m},{n},{:e},{:e},{:e},{:e},,,",
                    off.transmission[(m, n)],
                    off.computing[(m, n)],
                    en.transmission[(m, n)],
                    en.computing[(m, n)]
                );
            }
        }
        for m in 0..mc {
            let _ = writeln!(
                out,
                "ap,{m},,,,,,{:e},{:e},",
                en.ap[m], self.energy.consensus.ap[m]
            );
        }
        for n in 0..nc {
            let _ = writeln!(out, "user,,{n},,,{:e},,,,{:e}", en.user[n], off.user[n]);
        }
        let _ = writeln!(
            out,
            "# totals: E_o={:e} E_c={:e} E_a={:e} D_o={:e} D_c={:e} D_a={:e}",
            self.energy.offloading(),
            self.energy.consensus_total(),
            self.energy.total,
            self.delay.mean_offload(),
            self.delay.consensus,
            self.delay.total()
        );
        out
    }
}

/// Channel tables of one scenario, computed once and shared by every
/// evaluation and solver.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub scenario: &'a Scenario,
    pub sinr: SinrTable,
    pub backhaul: BackhaulTable,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        Ok(Evaluator {
            scenario,
            sinr: SinrTable::from_scenario(scenario)?,
            backhaul: BackhaulTable::from_scenario(scenario)?,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.scenario.config
    }

    pub fn profile(&self, alloc: &Allocation) -> Result<ConsensusProfile> {
        let (c_bar, b_bar) = alloc.remaining(self.scenario);
        ConsensusProfile::new(c_bar, b_bar, self.config())
    }

    pub fn evaluate(&self, alloc: &Allocation) -> Result<Evaluation> {
        let profile = self.profile(alloc)?;
        self.evaluate_with_profile(alloc, profile)
    }

    /// Evaluates with externally chosen leader probabilities.
    pub fn evaluate_with_probability(
        &self,
        alloc: &Allocation,
        probability: Vec<f64>,
    ) -> Result<Evaluation> {
        let profile = self.profile(alloc)?.with_leader_probability(probability)?;
        self.evaluate_with_profile(alloc, profile)
    }

    fn evaluate_with_profile(
        &self,
        alloc: &Allocation,
        profile: ConsensusProfile,
    ) -> Result<Evaluation> {
        let cfg = self.config();
        let delays = offload_delays(self.scenario, &self.sinr, alloc)?;
        let offload = offload_energy(&delays, cfg.epsilon_c, cfg.epsilon_p);
        let consensus = consensus_energy(&profile, &self.backhaul, cfg)?;
        let total = total_energy(&offload, &consensus);
        let consensus_delay = consensus_delay(&profile, &self.backhaul, cfg)?;
        Ok(Evaluation {
            energy: EnergyBreakdown {
                offload,
                consensus,
                total,
            },
            delay: DelayBreakdown {
                offload: delays,
                consensus: consensus_delay,
            },
            profile,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat_net(m: usize, phi: f64) -> BackhaulTable {
        BackhaulTable::from_matrix(DMatrix::from_element(m, m, phi))
    }

    #[test]
    fn offload_examples() {
        let cfg = SystemConfig {
            num_aps: 1,
            num_users: 1,
            antennas_per_ap: 2,
            ..SystemConfig::default()
        };
        let mut s = crate::scenario::generate_scenario(&cfg, 1).unwrap();
        s.users[0].task_bits = 2e5;
        s.users[0].density = 1000.0;
        // log2(1 + 1) = 1, so the rate equals the bandwidth.
        let sinr = SinrTable::from_matrix(DMatrix::from_element(1, 1, 1.0));
        let alloc = Allocation {
            a: DMatrix::from_element(1, 1, 0.5),
            b: DMatrix::from_element(1, 1, 1e7),
            c: DMatrix::from_element(1, 1, 1e9),
        };
        let d = offload_delays(&s, &sinr, &alloc).unwrap();
        assert_relative_eq!(d.transmission[(0, 0)], 0.01, max_relative = 1e-15);
        assert_relative_eq!(d.computing[(0, 0)], 0.1, max_relative = 1e-15);
        let e = offload_energy(&d, 1.5, 1.0);
        assert_relative_eq!(e.transmission[(0, 0)], 0.015, max_relative = 1e-15);
        assert_relative_eq!(e.computing[(0, 0)], 0.1, max_relative = 1e-15);
        assert_relative_eq!(d.user[0], 0.11, max_relative = 1e-15);
    }

    #[test]
    fn inactive_pairs_cost_nothing_and_missing_resources_fail() {
        let cfg = SystemConfig {
            num_aps: 2,
            num_users: 1,
            antennas_per_ap: 2,
            ..SystemConfig::default()
        };
        let s = crate::scenario::generate_scenario(&cfg, 2).unwrap();
        let sinr = SinrTable::from_matrix(DMatrix::from_element(2, 1, 3.0));
        let mut alloc = Allocation {
            a: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            b: DMatrix::from_column_slice(2, 1, &[1e6, 0.0]),
            c: DMatrix::from_column_slice(2, 1, &[1e9, 0.0]),
        };
        let d = offload_delays(&s, &sinr, &alloc).unwrap();
        assert_eq!(d.transmission[(1, 0)], 0.0);
        assert_eq!(d.computing[(1, 0)], 0.0);
        assert_eq!(d.user[0], d.transmission[(0, 0)] + d.computing[(0, 0)]);
        alloc.a = DMatrix::from_column_slice(2, 1, &[0.5, 0.5]);
        assert!(matches!(
            offload_delays(&s, &sinr, &alloc),
            Err(Error::InfeasibleAllocation { ap: 1, user: 0, .. })
        ));
    }

    #[test]
    fn user_delay_is_slowest_member() {
        let a = DMatrix::from_column_slice(3, 1, &[0.5, 0.5, 0.0]);
        let du = DMatrix::from_column_slice(3, 1, &[0.01, 0.02, 9.0]);
        let de = DMatrix::from_column_slice(3, 1, &[0.02, 0.03, 9.0]);
        assert_eq!(user_delay(&a, &du, &de, 0).unwrap(), 0.05);
        let empty = DMatrix::zeros(3, 1);
        assert!(matches!(user_delay(&empty, &du, &de, 0), Err(Error::EmptyCluster { user: 0 })));
    }

    #[test]
    fn consensus_term_examples() {
        let cfg = SystemConfig::default();
        // Two APs, unit SINR, B-bar chosen so that B^s = 3e6.
        let b_bar = 3e6 * (cfg.state_msg_size + cfg.block_size) / cfg.state_msg_size;
        let p = ConsensusProfile::new(vec![5e9, 5e9], vec![b_bar, b_bar], &cfg).unwrap();
        let t = ap_consensus_terms(&p, 0, &flat_net(2, 1.0), &cfg).unwrap();
        assert_relative_eq!(t.leader_state, 0.045, max_relative = 1e-12);
        assert_relative_eq!(t.generation_delay, 1e-4, max_relative = 1e-15);
        assert_relative_eq!(t.leader_generation, 1e-4, max_relative = 1e-15);

        let p = ConsensusProfile::new(vec![5e9, 5e9], vec![1e7, 1e7], &cfg).unwrap();
        let t = ap_consensus_terms(&p, 0, &flat_net(2, 1.0), &cfg).unwrap();
        assert_relative_eq!(t.follower_delay, 9e-3, max_relative = 1e-12);
        assert_relative_eq!(t.follower_transmission, 1.35e-2, max_relative = 1e-12);
    }

    #[test]
    fn zero_compute_is_infinite_delay() {
        let cfg = SystemConfig::default();
        let p = ConsensusProfile::new(vec![0.0, 5e9], vec![1e7, 1e7], &cfg).unwrap();
        assert!(matches!(
            ap_consensus_terms(&p, 0, &flat_net(2, 1.0), &cfg),
            Err(Error::InfiniteDelay(_))
        ));
        assert!(consensus_delay(&p, &flat_net(2, 1.0), &cfg).is_err());
    }

    #[test]
    fn total_energy_sums_parts() {
        let offload = OffloadEnergy {
            transmission: DMatrix::zeros(2, 1),
            computing: DMatrix::zeros(2, 1),
            ap: vec![1.0, 2.0],
            user: vec![1.0],
        };
        let consensus = ConsensusEnergy {
            terms: vec![ApConsensusTerms::default(); 2],
            ap: vec![0.5, 0.5],
        };
        assert_eq!(total_energy(&offload, &consensus), 5.0);
        let zero = OffloadEnergy {
            ap: vec![0.0, 0.0],
            user: vec![0.0],
            ..offload
        };
        let none = ConsensusEnergy {
            ap: vec![0.0, 0.0],
            ..consensus
        };
        assert_eq!(total_energy(&zero, &none), 0.0);
    }

    #[test]
    fn two_ap_consensus_delay_is_single_pair() {
        let cfg = SystemConfig::default();
        let p = ConsensusProfile::new(vec![5e9, 5e9], vec![2e7, 2e7], &cfg).unwrap();
        let phi: f64 = 7.0;
        let se = (1.0 + phi).log2();
        let k = cfg.block_interval as f64 + 2.0;
        let expected = cfg.state_msg_size * k * k / (p.state_bw[0] * se)
            + k * k * cfg.state_msg_size / (2e7 * se)
            + cfg.block_size / (p.block_bw[0] * se)
            + cfg.block_size / 5e9;
        let got = consensus_delay(&p, &flat_net(2, phi), &cfg).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-14);
    }

    #[test]
    fn consensus_delay_grows_with_block_size() {
        let mut cfg = SystemConfig::default();
        let net = flat_net(3, 5.0);
        let mut last = 0.0;
        for lb in [2.5e5, 5e5, 7.5e5, 1e6] {
            cfg.block_size = lb;
            let p = ConsensusProfile::new(vec![1e9, 2e9, 3e9], vec![1e7, 2e7, 3e7], &cfg).unwrap();
            let d = consensus_delay(&p, &net, &cfg).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn single_ap_has_no_consensus_cost() {
        let cfg = SystemConfig::default();
        let p = ConsensusProfile::new(vec![5e9], vec![1e7], &cfg).unwrap();
        let net = flat_net(1, 0.0);
        assert_eq!(consensus_energy(&p, &net, &cfg).unwrap().total(), 0.0);
        assert_eq!(consensus_delay(&p, &net, &cfg).unwrap(), 0.0);
    }
}
