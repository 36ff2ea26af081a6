//! Comparison schemes.
//!
//! - SO: every user offloads to a single AP (rounded relaxation).
//! - BCDO: block coordinate descent over clustering, compute and bandwidth.
//! - OO: the proposed optimizer with the consensus terms left out.
//! - RO: the proposed decision under plain RAFT, where leadership is random.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::AdmmConfig;
use crate::consensus::{run_election_and_commit, sim::transactions_from_allocation, ConsensusTrace};
use crate::consensus::{SimOptions, TimeoutMode};
use crate::energetics::{Allocation, Evaluation, Evaluator};
use crate::error::{Error, Result};
use crate::optimizer::admm::build_models;
use crate::optimizer::blocks::{block_descent, rivals_of};
use crate::optimizer::subproblem::{solve_resources, ApModel, Blocks};
use crate::optimizer::{
    admm_solve_with, allocation_floor, initial_allocation, polish, verify_allocation, AdmmState, DecisionSet,
    ObjectiveMode,
};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SchemeId {
    Proposed,
    So,
    Bcdo,
    Oo,
    Ro,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Proposed,
        SchemeId::So,
        SchemeId::Bcdo,
        SchemeId::Oo,
        SchemeId::Ro,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Proposed => "PROPOSED",
            SchemeId::So => "SO",
            SchemeId::Bcdo => "BCDO",
            SchemeId::Oo => "OO",
            SchemeId::Ro => "RO",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown scheme `{s}`")))
    }
}

/// A scheme's decision and its evaluation.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: SchemeId,
    pub allocation: Allocation,
    pub decision: DecisionSet,
    pub evaluation: Evaluation,
    /// ADMM iterations or BCD cycles.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each iteration or cycle (J).
    pub objective_history: Vec<f64>,
    pub admm: Option<AdmmState>,
    /// Event-simulated election and commit (RO only).
    pub trace: Option<ConsensusTrace>,
    /// False when some user misses its deadline (SO only, after repair).
    pub feasible: bool,
}

fn finish(
    scheme: SchemeId,
    ev: &Evaluator<'_>,
    allocation: Allocation,
    beta: f64,
    evaluation: Evaluation,
) -> SchemeOutcome {
    SchemeOutcome {
        scheme,
        decision: DecisionSet::from_allocation(&allocation, ev.scenario, beta),
        allocation,
        evaluation,
        iterations: 0,
        converged: true,
        objective_history: Vec::new(),
        admm: None,
        trace: None,
        feasible: true,
    }
}

/// Runs one scheme.
pub fn run_scheme(id: SchemeId, scenario: &Scenario, admm: &AdmmConfig) -> Result<SchemeOutcome> {
    match id {
        SchemeId::Proposed => solve_proposed(scenario, admm),
        SchemeId::So => solve_so(scenario, admm),
        SchemeId::Bcdo => solve_bcdo(scenario, admm),
        SchemeId::Oo => solve_oo(scenario, admm),
        SchemeId::Ro => solve_ro(scenario, admm),
    }
}

fn admm_scheme(id: SchemeId, ev: &Evaluator<'_>, admm: &AdmmConfig, mode: ObjectiveMode) -> Result<SchemeOutcome> {
    let out = admm_solve_with(ev, admm, mode)?;
    Ok(SchemeOutcome {
        scheme: id,
        allocation: out.allocation,
        decision: out.decision,
        evaluation: out.evaluation,
        iterations: out.state.t,
        converged: out.converged,
        objective_history: out.state.objectives.clone(),
        admm: Some(out.state),
        trace: None,
        feasible: true,
    })
}

pub fn solve_proposed(scenario: &Scenario, admm: &AdmmConfig) -> Result<SchemeOutcome> {
    let ev = Evaluator::new(scenario)?;
    admm_scheme(SchemeId::Proposed, &ev, admm, ObjectiveMode::Full)
}

/// Consensus terms are dropped from the optimization and evaluated
/// afterwards on whatever resources remain.
pub fn solve_oo(scenario: &Scenario, admm: &AdmmConfig) -> Result<SchemeOutcome> {
    let ev = Evaluator::new(scenario)?;
    admm_scheme(SchemeId::Oo, &ev, admm, ObjectiveMode::OffloadOnly)
}

/// Delay of user `n` at AP `m` holding the whole AP.
fn standalone_delay(model: &ApModel, n: usize) -> f64 {
    model.t_b[n] / model.bandwidth + model.t_c[n] / model.compute
}

fn row(x: &DMatrix<f64>, m: usize) -> Vec<f64> {
    x.row(m).iter().copied().collect()
}

/// Whether AP `m` can meet the deadlines of its current users.
fn row_servable(models: &[ApModel], alloc: &Allocation, m: usize, admm: &AdmmConfig) -> bool {
    let a = row(&alloc.a, m);
    let users: Vec<usize> = (0..a.len()).filter(|&n| a[n] > 0.0).collect();
    solve_resources(
        &models[m],
        &a,
        &row(&alloc.b, m),
        &row(&alloc.c, m),
        &users,
        rivals_of(models, alloc, m),
        Blocks::BOTH,
        admm,
    )
    .is_ok()
}

pub fn solve_so(scenario: &Scenario, admm: &AdmmConfig) -> Result<SchemeOutcome> {
    let ev = Evaluator::new(scenario)?;
    let relaxed = admm_solve_with(&ev, admm, ObjectiveMode::Full)?;
    let mut outcome = so_from_relaxed(&ev, admm, &relaxed.allocation)?;
    outcome.iterations = relaxed.state.t;
    outcome.converged = relaxed.converged;
    Ok(outcome)
}

/// Rounds a relaxed allocation to one AP per user, repairs deadlines and
/// re-solves the resources.
pub fn so_from_relaxed(ev: &Evaluator<'_>, admm: &AdmmConfig, relaxed: &Allocation) -> Result<SchemeOutcome> {
    let s = ev.scenario;
    let (mc, nc) = (s.num_aps(), s.num_users());
    let beta = allocation_floor(s, admm);
    let models = build_models(ev, beta, ObjectiveMode::Full)?;
    let mut alloc = relaxed.clone();
    for n in 0..nc {
        let mut best = 0;
        for m in 1..mc {
            if relaxed.a[(m, n)] > relaxed.a[(best, n)] {
                best = m;
            }
        }
        for m in 0..mc {
            let keep = m == best;
            alloc.a[(m, n)] = if keep { 1.0 } else { 0.0 };
            alloc.b[(m, n)] = if keep { relaxed.b[(m, n)].max(beta) } else { 0.0 };
            alloc.c[(m, n)] = if keep { relaxed.c[(m, n)].max(beta) } else { 0.0 };
        }
    }
    // Deadline repair: while some AP misses a deadline, move one of its
    // users, hardest first, to the AP with the smallest standalone delay
    // that can still serve everyone it holds.
    let mut moves = 0;
    while let Some(m) = (0..mc).find(|&m| !row_servable(&models, &alloc, m, admm)) {
        if moves >= nc * mc {
            break;
        }
        let mut users: Vec<usize> = (0..nc).filter(|&n| alloc.a[(m, n)] > 0.0).collect();
        let pressure = |n: usize| standalone_delay(&models[m], n) / models[m].deadline[n];
        users.sort_by(|&i, &j| pressure(j).total_cmp(&pressure(i)).then(i.cmp(&j)));
        let mut moved = false;
        'users: for n in users {
            let mut targets: Vec<usize> = (0..mc).filter(|&k| k != m).collect();
            targets.sort_by(|&i, &j| {
                standalone_delay(&models[i], n)
                    .total_cmp(&standalone_delay(&models[j], n))
                    .then(i.cmp(&j))
            });
            for k in targets {
                let mut cand = alloc.clone();
                cand.a[(m, n)] = 0.0;
                cand.b[(m, n)] = 0.0;
                cand.c[(m, n)] = 0.0;
                cand.a[(k, n)] = 1.0;
                cand.b[(k, n)] = s.aps[k].bandwidth / (nc + 1) as f64;
                cand.c[(k, n)] = s.aps[k].compute / (nc + 1) as f64;
                if row_servable(&models, &cand, k, admm) {
                    alloc = cand;
                    moved = true;
                    break 'users;
                }
            }
        }
        if !moved {
            break;
        }
        moves += 1;
    }
    // APs that still cannot serve their users in time get energy-optimal
    // resources without deadlines, and the outcome is flagged.
    let mut relaxed_models = models.clone();
    let mut late_aps = Vec::new();
    for m in 0..mc {
        if !row_servable(&models, &alloc, m, admm) {
            relaxed_models[m].deadline.fill(f64::INFINITY);
            late_aps.push(m);
        }
    }
    let allocation = polish(ev, &relaxed_models, &alloc, ObjectiveMode::Full, admm)?;
    if late_aps.is_empty() {
        verify_allocation(ev, &allocation)?;
    }
    let evaluation = ev.evaluate(&allocation)?;
    let mut outcome = finish(SchemeId::So, ev, allocation, beta, evaluation);
    outcome.feasible = late_aps.is_empty();
    Ok(outcome)
}

pub fn solve_bcdo(scenario: &Scenario, admm: &AdmmConfig) -> Result<SchemeOutcome> {
    let ev = Evaluator::new(scenario)?;
    let models = build_models(&ev, allocation_floor(scenario, admm), ObjectiveMode::Full)?;
    let start = initial_allocation(scenario, &models)?;
    solve_bcdo_from(&ev, admm, &start)
}

/// Block coordinate descent from `start`: clustering, then compute, then
/// bandwidth, each block solved exactly with the others fixed.
pub fn solve_bcdo_from(ev: &Evaluator<'_>, admm: &AdmmConfig, start: &Allocation) -> Result<SchemeOutcome> {
    let beta = allocation_floor(ev.scenario, admm);
    let models = build_models(ev, beta, ObjectiveMode::Full)?;
    let run = block_descent(ev, &models, start, ObjectiveMode::Full, admm)?;
    let evaluation = ev.evaluate(&run.allocation)?;
    let mut outcome = finish(SchemeId::Bcdo, ev, run.allocation, beta, evaluation);
    outcome.iterations = run.cycles;
    outcome.converged = run.converged;
    outcome.objective_history = run.history;
    Ok(outcome)
}

/// Independent leader probabilities on `(0, 1]`, one per AP.
pub fn random_leader_probability(seed: u64, num_aps: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5241_4654);
    (0..num_aps).map(|_| 1.0 - rng.random::<f64>()).collect()
}

pub fn solve_ro(scenario: &Scenario, admm: &AdmmConfig) -> Result<SchemeOutcome> {
    let p = random_leader_probability(scenario.seed, scenario.num_aps());
    solve_ro_with(scenario, admm, Some(p))
}

/// RO with explicit leader probabilities; `None` keeps the reputation rule.
pub fn solve_ro_with(scenario: &Scenario, admm: &AdmmConfig, probability: Option<Vec<f64>>) -> Result<SchemeOutcome> {
    let ev = Evaluator::new(scenario)?;
    let out = admm_solve_with(&ev, admm, ObjectiveMode::Full)?;
    let evaluation = match probability {
        Some(p) => ev.evaluate_with_probability(&out.allocation, p)?,
        None => ev.evaluate(&out.allocation)?,
    };
    let trace = if scenario.num_aps() >= 2 {
        let mut options = SimOptions::new(TimeoutMode::Random, scenario.seed);
        options.transactions = transactions_from_allocation(&out.allocation, 0.0);
        Some(run_election_and_commit(&evaluation.profile, &ev.backhaul, ev.config(), &options)?)
    } else {
        None
    };
    Ok(SchemeOutcome {
        scheme: SchemeId::Ro,
        allocation: out.allocation,
        decision: out.decision,
        evaluation,
        iterations: out.state.t,
        converged: out.converged,
        objective_history: out.state.objectives.clone(),
        admm: Some(out.state),
        trace,
        feasible: true,
    })
}
