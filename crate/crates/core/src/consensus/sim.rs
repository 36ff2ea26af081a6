//! Event-driven R-RAFT round: election, heartbeats, block replication.
//!
//! Events are processed in (time, node id, insertion) order, so a run is a
//! pure function of its inputs. Transmissions between the leader and its
//! followers proceed in parallel; each message takes its Shannon-rate
//! transmission time on the bandwidth share the cost model assigns it.
//!
//! Two simplifications keep the election deterministic: the first candidate
//! of a term suspends every other election timer, and candidacies that start
//! at the same instant collide, after which every node waits one full
//! timeout and draws again.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::BackhaulTable;
use crate::config::SystemConfig;
use crate::consensus::ConsensusProfile;
use crate::energetics::Allocation;
use crate::error::{Error, Result};

/// Base timeout `T_0` of the reputation mode, seconds.
pub const REPUTATION_BASE_TIMEOUT: f64 = 0.010;
/// Timeout range of the random mode, seconds.
pub const RANDOM_TIMEOUT: (f64, f64) = (0.150, 0.300);
const MAX_ELECTIONS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeoutMode {
    /// `T_0 * R / R_m`: the most reputable AP times out first.
    Reputation,
    /// Uniform draw, as in plain RAFT.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Follower,
    Candidate,
    Leader,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Follower => "follower",
            Role::Candidate => "candidate",
            Role::Leader => "leader",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleState {
    pub role: Role,
    pub timeout: f64,
    pub votes_received: usize,
    pub term: u64,
}

/// One resource trade recorded in a block.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub timestamp: f64,
    pub ap: usize,
    pub user: usize,
    pub bandwidth: f64,
    pub compute: f64,
    pub remuneration: f64,
}

/// Transactions for every active pair of an allocation.
pub fn transactions_from_allocation(alloc: &Allocation, timestamp: f64) -> Vec<Transaction> {
    let mut out = Vec::new();
    for n in 0..alloc.num_users() {
        for m in 0..alloc.num_aps() {
            if alloc.a[(m, n)] > 0.0 {
                out.push(Transaction {
                    timestamp,
                    ap: m,
                    user: n,
                    bandwidth: alloc.b[(m, n)],
                    compute: alloc.c[(m, n)],
                    remuneration: 0.0,
                });
            }
        }
    }
    out
}

/// Block content; its wire size is always `L^b` whatever it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub transactions: Vec<Transaction>,
    pub size_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub node_id: usize,
    pub role: Role,
    pub msgs_state: u64,
    pub blocks_sent: u64,
    pub blocks_received: u64,
    /// Time of the node's last send or receive.
    pub sim_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusTrace {
    pub nodes: Vec<NodeTrace>,
    pub states: Vec<RoleState>,
    pub leader: usize,
    /// Election rounds started, including collided ones.
    pub elections: u32,
    /// Rounds lost to simultaneous candidacies.
    pub ties: u32,
    /// `(term, leader)` for every term that elected a leader.
    pub leaders_by_term: Vec<(u64, usize)>,
    pub block: Block,
    pub commit_time_s: f64,
}

impl ConsensusTrace {
    /// Columns `node_id, role, msgs_state, msgs_block, sim_time_s`; block
    /// messages count copies sent by the leader and copies received by
    /// followers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,role,msgs_state,msgs_block,sim_time_s\n");
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e}",
                n.node_id,
                n.role.as_str(),
                n.msgs_state,
                n.blocks_sent + n.blocks_received,
                n.sim_time_s
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub mode: TimeoutMode,
    pub seed: u64,
    /// Timeouts for the first election only; later rounds draw per `mode`.
    pub forced_timeouts: Option<Vec<f64>>,
    pub transactions: Vec<Transaction>,
}

impl SimOptions {
    pub fn new(mode: TimeoutMode, seed: u64) -> Self {
        SimOptions {
            mode,
            seed,
            forced_timeouts: None,
            transactions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Timeout { term: u64 },
    VoteRequest { from: usize, term: u64 },
    VoteReply { term: u64 },
    ElectionConfirm,
    Heartbeat { round: u32 },
    HeartbeatReply { round: u32 },
    BlockReady,
    BlockCopy,
    BlockConfirm,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    node: usize,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.node.cmp(&self.node))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Sim<'a> {
    profile: &'a ConsensusProfile,
    net: &'a BackhaulTable,
    config: &'a SystemConfig,
    queue: BinaryHeap<Event>,
    seq: u64,
    nodes: Vec<NodeTrace>,
    states: Vec<RoleState>,
    voted_for: Vec<Option<usize>>,
}

impl Sim<'_> {
    fn push(&mut self, time: f64, node: usize, kind: Kind) {
        self.seq += 1;
        self.queue.push(Event {
            time,
            node,
            seq: self.seq,
            kind,
        });
    }

    fn touch(&mut self, node: usize, time: f64) {
        self.nodes[node].sim_time_s = self.nodes[node].sim_time_s.max(time);
    }

    fn spectral(&self, value: f64, what: &str) -> Result<f64> {
        let se = (1.0 + value).log2();
        if se > 0.0 && se.is_finite() {
            Ok(se)
        } else {
            Err(Error::ElectionFailure(format!("{what} carries no data")))
        }
    }

    /// State message from `l` to `i` on `B^s_l / (2 + D^i)`.
    fn leader_state_time(&self, l: usize, i: usize) -> Result<f64> {
        let k = self.config.block_interval as f64 + 2.0;
        let se = self.spectral(self.net.sinr(l, i), "leader link")?;
        Ok(self.config.state_msg_size / (self.profile.state_bw[l] / k * se))
    }

    /// State message from follower `f` on `B-bar_f / (D^i + 2)`.
    fn follower_state_time(&self, f: usize) -> Result<f64> {
        let k = self.config.block_interval as f64 + 2.0;
        let se = self.spectral(self.net.mean(f), "follower link")?;
        Ok(self.config.state_msg_size / (self.profile.remaining_bandwidth[f] / k * se))
    }

    /// Block copy from `l` to `i` on `B^b_l / (M - 1)`.
    fn block_time(&self, l: usize, i: usize) -> Result<f64> {
        let followers = (self.profile.num_aps() - 1) as f64;
        let se = self.spectral(self.net.sinr(l, i), "leader link")?;
        Ok(self.config.block_size / (self.profile.block_bw[l] / followers * se))
    }
}

fn draw_timeouts(
    mode: TimeoutMode,
    profile: &ConsensusProfile,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    match mode {
        TimeoutMode::Reputation => profile
            .reputation
            .iter()
            .map(|&r| {
                if r > 0.0 {
                    REPUTATION_BASE_TIMEOUT * profile.max_reputation / r
                } else {
                    f64::INFINITY
                }
            })
            .collect(),
        TimeoutMode::Random => (0..profile.num_aps())
            .map(|_| rng.random_range(RANDOM_TIMEOUT.0..=RANDOM_TIMEOUT.1))
            .collect(),
    }
}

/// Runs one election followed by one block commit.
pub fn run_election_and_commit(
    profile: &ConsensusProfile,
    net: &BackhaulTable,
    config: &SystemConfig,
    options: &SimOptions,
) -> Result<ConsensusTrace> {
    let mc = profile.num_aps();
    if mc < 2 {
        return Err(Error::Domain("consensus needs at least two APs".into()));
    }
    if net.num_aps() != mc {
        return Err(Error::Domain("backhaul table and profile differ in size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut sim = Sim {
        profile,
        net,
        config,
        queue: BinaryHeap::new(),
        seq: 0,
        nodes: (0..mc)
            .map(|node_id| NodeTrace {
                node_id,
                role: Role::Follower,
                msgs_state: 0,
                blocks_sent: 0,
                blocks_received: 0,
                sim_time_s: 0.0,
            })
            .collect(),
        states: (0..mc)
            .map(|_| RoleState {
                role: Role::Follower,
                timeout: 0.0,
                votes_received: 0,
                term: 0,
            })
            .collect(),
        voted_for: vec![None; mc],
    };
    let di = config.block_interval;
    let majority = mc / 2 + 1;
    let mut term = 0_u64;
    let mut elections = 0_u32;
    let mut ties = 0_u32;
    let mut leaders_by_term = Vec::new();
    let mut start = 0.0;
    let mut timeouts = match &options.forced_timeouts {
        Some(t) if t.len() == mc => t.clone(),
        Some(_) => return Err(Error::Domain("one forced timeout per AP required".into())),
        None => draw_timeouts(options.mode, profile, &mut rng),
    };

    // Election: arm timers, fire the earliest, repeat after collisions.
    let leader = loop {
        term += 1;
        elections += 1;
        if elections > MAX_ELECTIONS {
            return Err(Error::ElectionFailure("no unique candidate emerged".into()));
        }
        for (m, st) in sim.states.iter_mut().enumerate() {
            st.term = term;
            st.timeout = timeouts[m];
            st.role = Role::Follower;
            st.votes_received = 0;
        }
        let first = timeouts.iter().copied().fold(f64::INFINITY, f64::min);
        if !first.is_finite() {
            return Err(Error::ElectionFailure("no election timer can expire".into()));
        }
        let fired: Vec<usize> = (0..mc).filter(|&m| timeouts[m] == first).collect();
        if fired.len() > 1 && options.mode == TimeoutMode::Random {
            ties += 1;
            let wait = timeouts.iter().copied().fold(0.0, f64::max).max(RANDOM_TIMEOUT.1);
            start += first + wait;
            timeouts = draw_timeouts(options.mode, profile, &mut rng);
            continue;
        }
        // Lowest id wins simultaneous reputation timeouts.
        let candidate = fired[0];
        sim.push(start + first, candidate, Kind::Timeout { term });
        break candidate;
    };

    let mut leader_elected = false;
    let mut hb_replies = vec![0usize; di as usize + 1];
    let mut block_confirms = 0usize;
    let mut commit_time = f64::NAN;
    while let Some(ev) = sim.queue.pop() {
        let now = ev.time;
        sim.touch(ev.node, now);
        match ev.kind {
            Kind::Timeout { term: t } => {
                let c = ev.node;
                sim.states[c].role = Role::Candidate;
                sim.nodes[c].role = Role::Candidate;
                sim.voted_for[c] = Some(c);
                sim.states[c].votes_received = 1;
                for i in (0..mc).filter(|&i| i != c) {
                    sim.nodes[c].msgs_state += 1;
                    let dt = sim.leader_state_time(c, i)?;
                    sim.push(now + dt, i, Kind::VoteRequest { from: c, term: t });
                }
            }
            Kind::VoteRequest { from, term: t } => {
                let i = ev.node;
                if sim.voted_for[i].is_none() && t == term {
                    sim.voted_for[i] = Some(from);
                    sim.nodes[i].msgs_state += 1;
                    let dt = sim.follower_state_time(i)?;
                    sim.push(now + dt, from, Kind::VoteReply { term: t });
                }
            }
            Kind::VoteReply { term: t } => {
                let c = ev.node;
                sim.states[c].votes_received += 1;
                if !leader_elected && t == term && sim.states[c].votes_received >= majority {
                    leader_elected = true;
                    sim.states[c].role = Role::Leader;
                    sim.nodes[c].role = Role::Leader;
                    leaders_by_term.push((t, c));
                    for i in (0..mc).filter(|&i| i != c) {
                        sim.nodes[c].msgs_state += 1;
                        let dt = sim.leader_state_time(c, i)?;
                        sim.push(now + dt, i, Kind::ElectionConfirm);
                    }
                    start_heartbeat(&mut sim, leader, 1, di, now)?;
                }
            }
            Kind::ElectionConfirm => {}
            Kind::Heartbeat { round } => {
                let i = ev.node;
                sim.nodes[i].msgs_state += 1;
                let dt = sim.follower_state_time(i)?;
                sim.push(now + dt, leader, Kind::HeartbeatReply { round });
            }
            Kind::HeartbeatReply { round } => {
                hb_replies[round as usize] += 1;
                if hb_replies[round as usize] == mc - 1 {
                    start_heartbeat(&mut sim, leader, round + 1, di, now)?;
                }
            }
            Kind::BlockReady => {
                for i in (0..mc).filter(|&i| i != leader) {
                    sim.nodes[leader].blocks_sent += 1;
                    let dt = sim.block_time(leader, i)?;
                    sim.push(now + dt, i, Kind::BlockCopy);
                }
            }
            Kind::BlockCopy => {
                let i = ev.node;
                sim.nodes[i].blocks_received += 1;
                sim.nodes[i].msgs_state += 1;
                let dt = sim.follower_state_time(i)?;
                sim.push(now + dt, leader, Kind::BlockConfirm);
            }
            Kind::BlockConfirm => {
                block_confirms += 1;
                if block_confirms == mc - 1 {
                    commit_time = now;
                }
            }
        }
    }
    if !leader_elected {
        return Err(Error::ElectionFailure("candidate never reached a quorum".into()));
    }
    if !commit_time.is_finite() {
        return Err(Error::ElectionFailure("block never fully confirmed".into()));
    }
    Ok(ConsensusTrace {
        nodes: sim.nodes,
        states: sim.states,
        leader,
        elections,
        ties,
        leaders_by_term,
        block: Block {
            transactions: options.transactions.clone(),
            size_bits: config.block_size,
        },
        commit_time_s: commit_time,
    })
}

/// Sends heartbeat `round`, or starts block generation once all `D^i`
/// rounds are acknowledged.
fn start_heartbeat(sim: &mut Sim<'_>, leader: usize, round: u32, di: u32, now: f64) -> Result<()> {
    let mc = sim.profile.num_aps();
    if round > di {
        let gen = sim.config.block_size / sim.profile.remaining_compute[leader];
        if !gen.is_finite() {
            return Err(Error::InfiniteDelay(format!("leader {leader} has no remaining compute")));
        }
        sim.push(now + gen, leader, Kind::BlockReady);
        return Ok(());
    }
    for i in (0..mc).filter(|&i| i != leader) {
        sim.nodes[leader].msgs_state += 1;
        let dt = sim.leader_state_time(leader, i)?;
        sim.push(now + dt, i, Kind::Heartbeat { round });
    }
    Ok(())
}
