//! Browser bindings: draw a network, optimize it with one scheme, and run
//! an R-RAFT election on the result. Every call returns plain text so the
//! page needs no JSON glue.

use std::fmt::Write as _;

use ucmec::baselines::{run_scheme, SchemeId};
use ucmec::config::{AdmmConfig, SystemConfig};
use ucmec::consensus::{run_election_and_commit, SimOptions, TimeoutMode};
use ucmec::energetics::Evaluator;
use ucmec::scenario::{generate_scenario, Scenario};
use wasm_bindgen::prelude::*;

fn scenario(num_aps: usize, num_users: usize, block_kbits: f64, seed: u64) -> Result<Scenario, JsError> {
    let config = SystemConfig {
        num_aps,
        num_users,
        antennas_per_ap: (num_users + 1).max(16),
        block_size: block_kbits * 1e3,
        ..SystemConfig::default()
    };
    generate_scenario(&config, seed).map_err(|e| JsError::new(&e.to_string()))
}

fn admm() -> AdmmConfig {
    // No threads in the browser.
    AdmmConfig {
        parallel: false,
        ..AdmmConfig::default()
    }
}

/// AP and user table of a fresh instance, one line per node:
/// `ap,id,x,y,bandwidth_hz,compute_hz` or `user,id,x,y,bits,cycles_per_bit,deadline_s`.
#[wasm_bindgen]
pub fn draw_network(num_aps: usize, num_users: usize, seed: u64) -> Result<String, JsError> {
    let s = scenario(num_aps, num_users, 500.0, seed)?;
    let mut out = String::new();
    for ap in &s.aps {
        let _ = writeln!(
            out,
            "ap,{},{:.2},{:.2},{:.4e},{:.4e}",
            ap.id, ap.position[0], ap.position[1], ap.bandwidth, ap.compute
        );
    }
    for u in &s.users {
        let _ = writeln!(
            out,
            "user,{},{:.2},{:.2},{:.4e},{:.1},{:.4}",
            u.id, u.position[0], u.position[1], u.task_bits, u.density, u.deadline
        );
    }
    Ok(out)
}

/// Runs one scheme (`PROPOSED`, `SO`, `BCDO`, `OO` or `RO`). The first line
/// holds `key=value` totals; the rest is the clustering matrix, one AP per
/// line.
#[wasm_bindgen]
pub fn optimize(
    num_aps: usize,
    num_users: usize,
    block_kbits: f64,
    seed: u64,
    scheme: &str,
) -> Result<String, JsError> {
    let id: SchemeId = scheme.parse().map_err(|e: ucmec::Error| JsError::new(&e.to_string()))?;
    let s = scenario(num_aps, num_users, block_kbits, seed)?;
    let o = run_scheme(id, &s, &admm()).map_err(|e| JsError::new(&e.to_string()))?;
    let e = &o.evaluation;
    let mut out = format!(
        "scheme={id} iterations={} D_o={:.4e} D_c={:.4e} E_o={:.4e} E_c={:.4e} E_a={:.4e} late={}\n",
        o.iterations,
        e.delay.mean_offload(),
        e.delay.consensus,
        e.energy.offloading(),
        e.energy.consensus_total(),
        e.energy.total,
        !o.feasible
    );
    for m in 0..s.num_aps() {
        let row: Vec<String> = (0..s.num_users()).map(|n| format!("{:.3}", o.allocation.a[(m, n)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

/// Optimizes with the proposed scheme, then runs one election and block
/// commit on the remaining resources. `random` switches to plain RAFT
/// timeouts. Returns the per-node trace as CSV after a summary line.
#[wasm_bindgen]
pub fn elect(num_aps: usize, num_users: usize, seed: u64, random: bool) -> Result<String, JsError> {
    let js = |e: ucmec::Error| JsError::new(&e.to_string());
    let s = scenario(num_aps, num_users, 500.0, seed)?;
    let o = run_scheme(SchemeId::Proposed, &s, &admm()).map_err(js)?;
    let ev = Evaluator::new(&s).map_err(js)?;
    let mode = if random {
        TimeoutMode::Random
    } else {
        TimeoutMode::Reputation
    };
    let trace = run_election_and_commit(&o.evaluation.profile, &ev.backhaul, &s.config, &SimOptions::new(mode, seed))
        .map_err(js)?;
    let best = o.evaluation.profile.most_reputable();
    Ok(format!(
        "leader={} most_reputable={} elections={} ties={} commit_s={:.4e}\n{}",
        trace.leader,
        best,
        trace.elections,
        trace.ties,
        trace.commit_time_s,
        trace.to_csv()
    ))
}
