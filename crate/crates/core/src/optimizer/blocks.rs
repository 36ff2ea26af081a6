//! Block coordinate descent over clustering, compute and bandwidth.
//!
//! Each block is solved exactly with the other two fixed: the clustering
//! block is a small linear program per user, the resource blocks are the
//! per-AP convex programs. A block result replaces the current point only
//! if it meets every deadline and lowers the objective, or if the current
//! point misses a deadline.

use nalgebra::DMatrix;

use crate::config::AdmmConfig;
use crate::energetics::{Allocation, Evaluator};
use crate::error::{Error, Result};
use crate::optimizer::admm::{polish, reclaim, verify_allocation, ObjectiveMode};
use crate::optimizer::subproblem::{solve_resources, ApModel, Blocks, Rivals};

/// Relative improvement per cycle below which descent stops.
pub const BLOCK_TOL: f64 = 1e-4;
/// Cycle cap.
pub const BLOCK_MAX_CYCLES: usize = 100;

#[derive(Debug, Clone)]
pub struct BlockDescent {
    pub allocation: Allocation,
    pub cycles: usize,
    pub converged: bool,
    /// Objective after each cycle (J).
    pub history: Vec<f64>,
}

fn row(x: &DMatrix<f64>, m: usize) -> Vec<f64> {
    x.row(m).iter().copied().collect()
}

/// Reputation and leader premium of every AP other than `m`.
pub(crate) fn rivals_of(models: &[ApModel], alloc: &Allocation, m: usize) -> Rivals {
    let mut best = f64::MIN_POSITIVE;
    let mut externality = 0.0;
    for (k, model) in models.iter().enumerate().filter(|&(k, _)| k != m) {
        let (bb, cb) = model.remaining(&row(&alloc.b, k), &row(&alloc.c, k));
        if let Some(kc) = model.consensus {
            let r = kc.reputation(bb, cb);
            best = best.max(r);
            externality += r * (kc.leader(bb, cb) - kc.follower / bb);
        }
    }
    Rivals {
        best_reputation: best,
        externality,
    }
}

fn objective(ev: &Evaluator<'_>, alloc: &Allocation, mode: ObjectiveMode) -> Result<f64> {
    let e = ev.evaluate(alloc)?;
    Ok(match mode {
        ObjectiveMode::Full => e.energy.total,
        ObjectiveMode::OffloadOnly => e.energy.offloading(),
    })
}

fn feasible(ev: &Evaluator<'_>, alloc: &Allocation) -> bool {
    verify_allocation(ev, alloc).is_ok()
}

/// Cheapest split of each user over the APs that can still serve it in
/// time with the current resources. Users whose caps sum below one keep
/// their column.
fn clustering_block(models: &[ApModel], cur: &Allocation) -> Allocation {
    let (mc, nc) = cur.a.shape();
    let mut cand = cur.clone();
    for n in 0..nc {
        let cost = |m: usize| models[m].w_b[n] / cur.b[(m, n)] + models[m].w_c[n] / cur.c[(m, n)];
        let mut order: Vec<usize> = (0..mc).collect();
        order.sort_by(|&i, &j| cost(i).total_cmp(&cost(j)).then(i.cmp(&j)));
        let caps: Vec<f64> = (0..mc)
            .map(|m| models[m].share_limit(n, cur.b[(m, n)], cur.c[(m, n)]) * (1.0 - 1e-9))
            .collect();
        if caps.iter().sum::<f64>() < 1.0 {
            continue;
        }
        let mut left = 1.0;
        for &m in &order {
            let take = caps[m].min(left);
            cand.a[(m, n)] = take;
            left -= take;
        }
    }
    cand
}

/// Runs block coordinate descent from `start` and returns a verified,
/// dust-free allocation.
pub fn block_descent(
    ev: &Evaluator<'_>,
    models: &[ApModel],
    start: &Allocation,
    mode: ObjectiveMode,
    admm: &AdmmConfig,
) -> Result<BlockDescent> {
    let (mc, nc) = start.a.shape();
    let beta = models.first().map_or(0.0, |m| m.beta);
    // Active pairs keep at least the floor; inactive ones hold nothing and
    // stay inactive.
    let mut cur = start.clone();
    for m in 0..mc {
        for n in 0..nc {
            let active = cur.a[(m, n)] > 0.0;
            cur.b[(m, n)] = if active { cur.b[(m, n)].max(beta) } else { 0.0 };
            cur.c[(m, n)] = if active { cur.c[(m, n)].max(beta) } else { 0.0 };
        }
    }
    let mut cur_ok = feasible(ev, &cur);
    let mut cur_obj = objective(ev, &cur, mode)?;
    let mut history = Vec::new();
    let mut cycles = 0;
    let mut converged = false;

    let offer = |cand: Allocation, cur: &mut Allocation, cur_ok: &mut bool, cur_obj: &mut f64| -> Result<()> {
        if !feasible(ev, &cand) {
            return Ok(());
        }
        let v = objective(ev, &cand, mode)?;
        if !*cur_ok || v < *cur_obj {
            *cur = cand;
            *cur_ok = true;
            *cur_obj = v;
        }
        Ok(())
    };

    while cycles < BLOCK_MAX_CYCLES {
        cycles += 1;
        let before = cur_obj;
        let was_ok = cur_ok;
        offer(clustering_block(models, &cur), &mut cur, &mut cur_ok, &mut cur_obj)?;
        for blocks in [
            Blocks {
                bandwidth: false,
                compute: true,
            },
            Blocks {
                bandwidth: true,
                compute: false,
            },
        ] {
            for m in 0..mc {
                let users: Vec<usize> = (0..nc).filter(|&n| cur.a[(m, n)] > 0.0).collect();
                let step = solve_resources(
                    &models[m],
                    &row(&cur.a, m),
                    &row(&cur.b, m),
                    &row(&cur.c, m),
                    &users,
                    rivals_of(models, &cur, m),
                    blocks,
                    admm,
                );
                if let Ok(step) = step {
                    let mut cand = cur.clone();
                    for n in 0..nc {
                        cand.b[(m, n)] = step.b[n];
                        cand.c[(m, n)] = step.c[n];
                    }
                    offer(cand, &mut cur, &mut cur_ok, &mut cur_obj)?;
                }
            }
        }
        history.push(cur_obj);
        if was_ok && cur_ok && (before - cur_obj) <= BLOCK_TOL * cur_obj.abs() {
            converged = true;
            break;
        }
    }
    if !cur_ok {
        return Err(Error::InfeasibleDecision(
            "block coordinate descent found no deadline-feasible point".into(),
        ));
    }
    // Drop dust shares and hand their resources back.
    let mut out = cur.clone();
    out.a = reclaim(&cur.a, admm.inactive_threshold);
    for m in 0..mc {
        for n in 0..nc {
            if out.a[(m, n)] == 0.0 {
                out.b[(m, n)] = 0.0;
                out.c[(m, n)] = 0.0;
            }
        }
    }
    if !feasible(ev, &out) {
        out = polish(ev, models, &out, mode, admm)?;
    }
    verify_allocation(ev, &out)?;
    Ok(BlockDescent {
        allocation: out,
        cycles,
        converged,
        history,
    })
}

/// Sweeps cap for [`whole_user_moves`] and [`user_swaps`].
pub const MOVE_MAX_SWEEPS: usize = 10;

/// Re-solves the resources of every AP in `touched` for the clustering of
/// `cand`. `None` when a subproblem fails or a deadline is missed.
fn resolve_rows(
    ev: &Evaluator<'_>,
    models: &[ApModel],
    mut cand: Allocation,
    touched: &[usize],
    admm: &AdmmConfig,
) -> Option<Allocation> {
    let nc = cand.a.ncols();
    for &m in touched {
        let a = row(&cand.a, m);
        let users: Vec<usize> = (0..nc).filter(|&u| a[u] > 0.0).collect();
        let step = solve_resources(
            &models[m],
            &a,
            &row(&cand.b, m),
            &row(&cand.c, m),
            &users,
            rivals_of(models, &cand, m),
            Blocks::BOTH,
            admm,
        )
        .ok()?;
        for u in 0..nc {
            cand.b[(m, u)] = step.b[u];
            cand.c[(m, u)] = step.c[u];
        }
    }
    feasible(ev, &cand).then_some(cand)
}

/// Local search over clustering vertices: hands one user entirely to one
/// AP, re-solves the resources of every AP whose share changed, and keeps
/// the move if the result meets every deadline and lowers the objective.
/// Returns the improved allocation and whether any move was kept.
pub fn whole_user_moves(
    ev: &Evaluator<'_>,
    models: &[ApModel],
    start: &Allocation,
    mode: ObjectiveMode,
    admm: &AdmmConfig,
) -> Result<(Allocation, bool)> {
    let (mc, nc) = start.a.shape();
    let beta = models.first().map_or(0.0, |m| m.beta);
    let mut cur = start.clone();
    let mut cur_obj = objective(ev, &cur, mode)?;
    let mut any = false;
    for _ in 0..MOVE_MAX_SWEEPS {
        let mut improved = false;
        for n in 0..nc {
            let mut best: Option<(f64, Allocation)> = None;
            for k in 0..mc {
                if cur.a[(k, n)] >= 1.0 {
                    continue;
                }
                let mut cand = cur.clone();
                let touched: Vec<usize> = (0..mc).filter(|&m| m == k || cur.a[(m, n)] > 0.0).collect();
                for m in 0..mc {
                    let keep = m == k;
                    cand.a[(m, n)] = if keep { 1.0 } else { 0.0 };
                    cand.b[(m, n)] = if keep { cur.b[(m, n)].max(beta) } else { 0.0 };
                    cand.c[(m, n)] = if keep { cur.c[(m, n)].max(beta) } else { 0.0 };
                }
                let Some(cand) = resolve_rows(ev, models, cand, &touched, admm) else {
                    continue;
                };
                let v = objective(ev, &cand, mode)?;
                if v < cur_obj * (1.0 - BLOCK_TOL) && best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, cand));
                }
            }
            if let Some((v, cand)) = best {
                cur = cand;
                cur_obj = v;
                improved = true;
                any = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((cur, any))
}

/// AP serving user `n` alone, if any.
fn vertex_of(a: &DMatrix<f64>, n: usize) -> Option<usize> {
    (0..a.nrows()).find(|&m| a[(m, n)] >= 1.0)
}

/// Exchanges two users sitting on different APs, each taking over the
/// other's resources as a start. Single moves cannot reach such a point
/// when the intermediate, with both users on one AP, costs more.
pub fn user_swaps(
    ev: &Evaluator<'_>,
    models: &[ApModel],
    start: &Allocation,
    mode: ObjectiveMode,
    admm: &AdmmConfig,
) -> Result<(Allocation, bool)> {
    let nc = start.a.ncols();
    let beta = models.first().map_or(0.0, |m| m.beta);
    let mut cur = start.clone();
    let mut cur_obj = objective(ev, &cur, mode)?;
    let mut any = false;
    for _ in 0..MOVE_MAX_SWEEPS {
        let mut improved = false;
        for n1 in 0..nc {
            for n2 in n1 + 1..nc {
                let (Some(i), Some(j)) = (vertex_of(&cur.a, n1), vertex_of(&cur.a, n2)) else {
                    continue;
                };
                if i == j {
                    continue;
                }
                let mut cand = cur.clone();
                for (n, from, to, other) in [(n1, i, j, n2), (n2, j, i, n1)] {
                    cand.a[(from, n)] = 0.0;
                    cand.b[(from, n)] = 0.0;
                    cand.c[(from, n)] = 0.0;
                    cand.a[(to, n)] = 1.0;
                    cand.b[(to, n)] = cur.b[(to, other)].max(beta);
                    cand.c[(to, n)] = cur.c[(to, other)].max(beta);
                }
                let Some(cand) = resolve_rows(ev, models, cand, &[i, j], admm) else {
                    continue;
                };
                let v = objective(ev, &cand, mode)?;
                if v < cur_obj * (1.0 - BLOCK_TOL) {
                    cur = cand;
                    cur_obj = v;
                    improved = true;
                    any = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok((cur, any))
}

/// Restarts descent once per AP with that AP's compute cut to what its
/// deadlines need, so it enters as the most reputable AP and the others
/// best-respond as followers. Descent settles on whichever AP it starts
/// with, so this is the only way to compare leaders. Returns the best
/// feasible end point, `start` included.
pub fn leader_restarts(
    ev: &Evaluator<'_>,
    models: &[ApModel],
    start: &Allocation,
    mode: ObjectiveMode,
    admm: &AdmmConfig,
) -> Result<Allocation> {
    let (mc, nc) = start.a.shape();
    let mut best = start.clone();
    let mut best_obj = objective(ev, &best, mode)?;
    if mc < 2 {
        return Ok(best);
    }
    for k in 0..mc {
        let model = &models[k];
        let mut cand = start.clone();
        for n in (0..nc).filter(|&n| start.a[(k, n)] > 0.0) {
            let a = start.a[(k, n)];
            let slack = model.deadline[n] - a * model.t_b[n] / start.b[(k, n)];
            if slack > 0.0 {
                let need = a * model.t_c[n] / slack * (1.0 + 1e-6);
                cand.c[(k, n)] = need.max(model.beta).min(start.c[(k, n)]);
            }
        }
        let Ok(run) = block_descent(ev, models, &cand, mode, admm) else {
            continue;
        };
        let v = objective(ev, &run.allocation, mode)?;
        if v < best_obj * (1.0 - BLOCK_TOL) {
            best = run.allocation;
            best_obj = v;
        }
    }
    Ok(best)
}
