//! ADMM over the clustering matrix.
//!
//! Each AP keeps a private copy `A_m` of its clustering row and solves its
//! subproblem against the frozen global copy `A-hat` and multipliers. The
//! coordinator projects `A + Lambda / q` column-wise onto the simplex and
//! takes a dual ascent step. After the loop the global copy is cleaned of
//! negligible shares and the resources are re-solved for it.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::config::AdmmConfig;
use crate::energetics::{Allocation, Evaluation, Evaluator};
use crate::error::{Error, Result};
use crate::optimizer::subproblem::{
    solve_resources, solve_subproblem_dc, ApModel, Blocks, Rivals, SubproblemResult,
};
use crate::optimizer::blocks::{block_descent, leader_restarts, user_swaps, whole_user_moves};
use crate::optimizer::feasibility::{deadlines_met, feasible_start};
use crate::optimizer::{allocation_floor, project_simplex, DecisionSet};
use crate::scenario::Scenario;

/// What the per-AP subproblems minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveMode {
    /// Offloading plus expected consensus energy.
    #[default]
    Full,
    /// Offloading energy only; consensus is evaluated afterwards.
    OffloadOnly,
}

/// Coordinator state and per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub a_hat: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub q: f64,
    /// Completed iterations.
    pub t: usize,
    /// `||A - A-hat||_F` after each iteration.
    pub residuals: Vec<f64>,
    /// Sum of the APs' true `V_m` (J) after each iteration.
    pub objectives: Vec<f64>,
    /// Alternation counts per AP, per iteration.
    pub inner_iterations: Vec<Vec<usize>>,
    /// Seconds since the start, per iteration.
    pub wall_times: Vec<f64>,
    /// Blended rivals each AP optimizes against.
    pub rivals: Vec<Rivals>,
    pub converged: bool,
}

impl AdmmState {
    pub fn new(a_hat: DMatrix<f64>, q: f64) -> Self {
        let lambda = DMatrix::zeros(a_hat.nrows(), a_hat.ncols());
        AdmmState {
            a_hat,
            lambda,
            q,
            t: 0,
            residuals: Vec::new(),
            objectives: Vec::new(),
            inner_iterations: Vec::new(),
            wall_times: Vec::new(),
            rivals: Vec::new(),
            converged: false,
        }
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("t,residual,objective_j,inner_iterations,wall_time_s\n");
        for i in 0..self.residuals.len() {
            let inner: Vec<String> = self.inner_iterations[i].iter().map(|k| k.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{:.6}",
                i + 1,
                self.residuals[i],
                self.objectives[i],
                inner.join(";"),
                self.wall_times[i]
            );
        }
        out
    }
}

/// Everything [`admm_solve`] returns.
#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub allocation: Allocation,
    pub decision: DecisionSet,
    pub state: AdmmState,
    pub evaluation: Evaluation,
    pub converged: bool,
}

/// Each AP's rivals at the allocation `(b, c)`.
fn rivals(models: &[ApModel], b: &DMatrix<f64>, c: &DMatrix<f64>) -> Vec<Rivals> {
    // (reputation, leader premium) per AP.
    let stats: Vec<(f64, f64)> = models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let (bb, cb) = model.remaining(&row(b, m), &row(c, m));
            model.consensus.map_or((0.0, 0.0), |k| {
                (k.reputation(bb, cb), k.leader(bb, cb) - k.follower / bb)
            })
        })
        .collect();
    (0..stats.len())
        .map(|m| {
            let others = stats.iter().enumerate().filter(|&(k, _)| k != m);
            Rivals {
                best_reputation: others
                    .clone()
                    .map(|(_, s)| s.0)
                    .fold(0.0, f64::max)
                    .max(f64::MIN_POSITIVE),
                externality: others.map(|(_, s)| s.0 * s.1).sum(),
            }
        })
        .collect()
}

fn row(x: &DMatrix<f64>, m: usize) -> Vec<f64> {
    x.row(m).iter().copied().collect()
}

fn sum_value(models: &[ApModel], alloc: &Allocation) -> f64 {
    let rv = rivals(models, &alloc.b, &alloc.c);
    models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let own = Rivals::reputation_only(rv[m].best_reputation);
            model.value(&row(&alloc.a, m), &row(&alloc.b, m), &row(&alloc.c, m), own)
        })
        .sum()
}

/// Global update: every AP solves its subproblem against the current global
/// copy and multipliers, starting from its previous local iterate.
pub fn global_update(
    models: &[ApModel],
    state: &AdmmState,
    current: &Allocation,
    rivals: &[Rivals],
    admm: &AdmmConfig,
) -> Result<Vec<SubproblemResult>> {
    let solve = |m: usize| {
        let (a, b, c) = (row(&current.a, m), row(&current.b, m), row(&current.c, m));
        solve_subproblem_dc(
            &models[m],
            &row(&state.a_hat, m),
            &row(&state.lambda, m),
            state.q,
            (&a, &b, &c),
            rivals[m],
            admm,
        )
    };
    #[cfg(feature = "parallel")]
    if admm.parallel {
        use rayon::prelude::*;
        return (0..models.len()).into_par_iter().map(solve).collect();
    }
    (0..models.len()).map(solve).collect()
}

/// Local update: projects each column of `A + Lambda / q` onto the simplex.
pub fn update_local(a: &DMatrix<f64>, lambda: &DMatrix<f64>, q: f64) -> DMatrix<f64> {
    let (mc, nc) = a.shape();
    let mut a_hat = DMatrix::zeros(mc, nc);
    for n in 0..nc {
        let v: Vec<f64> = (0..mc).map(|m| a[(m, n)] + lambda[(m, n)] / q).collect();
        for (m, x) in project_simplex(&v).into_iter().enumerate() {
            a_hat[(m, n)] = x;
        }
    }
    a_hat
}

/// Dual update `Lambda += q (A - A-hat)`.
pub fn update_dual(lambda: &mut DMatrix<f64>, a: &DMatrix<f64>, a_hat: &DMatrix<f64>, q: f64) {
    *lambda += (a - a_hat) * q;
}

/// Blends the rivals seen so far into a running geometric mean, so regime
/// choices settle instead of flipping every iteration.
fn blend_rivals(reference: &mut Vec<Rivals>, fresh: &[Rivals], t: usize) {
    if reference.len() != fresh.len() {
        *reference = fresh.to_vec();
        return;
    }
    let w = 1.0 / (t + 1) as f64;
    let mix = |old: f64, new: f64| {
        if old > 0.0 && new > 0.0 {
            old.powf(1.0 - w) * new.powf(w)
        } else {
            new
        }
    };
    for (r, f) in reference.iter_mut().zip(fresh) {
        r.best_reputation = mix(r.best_reputation, f.best_reputation);
        r.externality = mix(r.externality, f.externality);
    }
}

pub(crate) fn build_models(ev: &Evaluator<'_>, beta: f64, mode: ObjectiveMode) -> Result<Vec<ApModel>> {
    (0..ev.scenario.num_aps())
        .map(|m| ApModel::new(ev, m, beta, mode == ObjectiveMode::Full))
        .collect()
}

/// Move-and-descend rounds after the ADMM loop.
const RECOVERY_ROUNDS: usize = 5;

/// Relative tolerance used when certifying capacity and deadlines.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Checks capacities, column sums and deadlines of a final allocation.
pub fn verify_allocation(ev: &Evaluator<'_>, alloc: &Allocation) -> Result<()> {
    let s = ev.scenario;
    let over = alloc.capacity_violation(s);
    if over > FEASIBILITY_TOL {
        return Err(Error::InfeasibleDecision(format!("capacity exceeded by {over:e} (relative)")));
    }
    for n in 0..s.num_users() {
        let col: f64 = alloc.a.column(n).sum();
        if (col - 1.0).abs() > 1e-9 {
            return Err(Error::InfeasibleDecision(format!("user {n} clustering sums to {col}")));
        }
    }
    let delays = crate::energetics::offload_delays(s, &ev.sinr, alloc)?;
    for (n, u) in s.users.iter().enumerate() {
        if delays.user[n] > u.deadline * (1.0 + FEASIBILITY_TOL) {
            return Err(Error::InfeasibleDecision(format!(
                "user {n} finishes after {:.6} s, deadline {:.6} s",
                delays.user[n], u.deadline
            )));
        }
    }
    Ok(())
}

fn mode_objective(ev: &Evaluator<'_>, alloc: &Allocation, mode: ObjectiveMode) -> Result<f64> {
    let e = ev.evaluate(alloc)?;
    Ok(match mode {
        ObjectiveMode::Full => e.energy.total,
        ObjectiveMode::OffloadOnly => e.energy.offloading(),
    })
}

/// Re-solves every AP's resources for a fixed clustering, AP by AP in index
/// order, with the true reputations of the current allocation. A row update
/// is kept only if it lowers the true objective, unless the row was
/// infeasible. Inactive pairs lose their resources first.
pub fn polish(
    ev: &Evaluator<'_>,
    models: &[ApModel],
    alloc: &Allocation,
    mode: ObjectiveMode,
    admm: &AdmmConfig,
) -> Result<Allocation> {
    let mut cur = alloc.clone();
    let (mc, nc) = cur.a.shape();
    let beta = models.first().map_or(0.0, |m| m.beta);
    for m in 0..mc {
        for n in 0..nc {
            if cur.a[(m, n)] <= 0.0 {
                cur.b[(m, n)] = 0.0;
                cur.c[(m, n)] = 0.0;
            } else {
                cur.b[(m, n)] = cur.b[(m, n)].max(beta);
                cur.c[(m, n)] = cur.c[(m, n)].max(beta);
            }
        }
    }
    let mut best = mode_objective(ev, &cur, mode)?;
    for _sweep in 0..3 {
        let mut improved = false;
        for m in 0..mc {
            let model = &models[m];
            let a = row(&cur.a, m);
            let users: Vec<usize> = (0..nc).filter(|&n| a[n] > 0.0).collect();
            let feasible = row_feasible(model, &a, &row(&cur.b, m), &row(&cur.c, m));
            let rv = rivals(models, &cur.b, &cur.c)[m];
            let step = match solve_resources(
                model,
                &a,
                &row(&cur.b, m),
                &row(&cur.c, m),
                &users,
                rv,
                Blocks::BOTH,
                admm,
            ) {
                Ok(s) => s,
                Err(e) if !feasible => return Err(e),
                Err(_) => continue,
            };
            let mut cand = cur.clone();
            for n in 0..nc {
                cand.b[(m, n)] = step.b[n];
                cand.c[(m, n)] = step.c[n];
            }
            let value = mode_objective(ev, &cand, mode)?;
            if value < best * (1.0 - 1e-12) || !feasible {
                improved |= value < best * (1.0 - 1e-9);
                best = value;
                cur = cand;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(cur)
}

fn row_feasible(model: &ApModel, a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let cap = b.iter().sum::<f64>() <= model.bandwidth * (1.0 + FEASIBILITY_TOL)
        && c.iter().sum::<f64>() <= model.compute * (1.0 + FEASIBILITY_TOL);
    cap && (0..a.len()).all(|n| {
        a[n] <= 0.0 || a[n] * (model.t_b[n] / b[n] + model.t_c[n] / c[n]) <= model.deadline[n]
    })
}

/// Zeroes shares below `threshold` and renormalizes each column.
pub fn reclaim(a: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let mut out = a.map(|x| if x < threshold { 0.0 } else { x });
    for n in 0..out.ncols() {
        let s: f64 = out.column(n).sum();
        if s > 0.0 {
            out.column_mut(n).scale_mut(1.0 / s);
        } else {
            // Every share was negligible; keep the largest one.
            let m = a.column(n).imax();
            out[(m, n)] = 1.0;
        }
    }
    out
}

/// Uniform clustering with an even resource split when that meets every
/// deadline, otherwise the most balanced deadline-feasible point.
pub fn initial_allocation(s: &Scenario, models: &[ApModel]) -> Result<Allocation> {
    let (mc, nc) = (s.num_aps(), s.num_users());
    let uniform = Allocation {
        a: DMatrix::from_element(mc, nc, 1.0 / mc as f64),
        b: DMatrix::from_fn(mc, nc, |m, _| s.aps[m].bandwidth / (nc + 1) as f64),
        c: DMatrix::from_fn(mc, nc, |m, _| s.aps[m].compute / (nc + 1) as f64),
    };
    if deadlines_met(models, &uniform, 0.0) {
        Ok(uniform)
    } else {
        feasible_start(models)
    }
}

/// Runs the proposed optimizer on `scenario`.
pub fn admm_solve(scenario: &Scenario, admm: &AdmmConfig) -> Result<AdmmOutcome> {
    let ev = Evaluator::new(scenario)?;
    admm_solve_with(&ev, admm, ObjectiveMode::Full)
}

/// Seconds since the call. wasm32-unknown-unknown has no clock, so the
/// browser build records zero.
#[cfg(not(target_arch = "wasm32"))]
fn clock() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn clock() -> impl Fn() -> f64 {
    || 0.0
}

/// [`admm_solve`] on precomputed channel tables with a chosen objective.
pub fn admm_solve_with(ev: &Evaluator<'_>, admm: &AdmmConfig, mode: ObjectiveMode) -> Result<AdmmOutcome> {
    admm.validate()?;
    let s = ev.scenario;
    let (mc, nc) = (s.num_aps(), s.num_users());
    let beta = allocation_floor(s, admm);
    let models = build_models(ev, beta, mode)?;
    let elapsed = clock();

    let mut cur = initial_allocation(s, &models)?;
    let mut state = AdmmState::new(cur.a.clone(), admm.penalty_q);

    if mc == 1 {
        // The simplex of one AP is a single point.
        let full = vec![1.0; nc];
        let users: Vec<usize> = (0..nc).collect();
        let step = solve_resources(
            &models[0],
            &full,
            &row(&cur.b, 0),
            &row(&cur.c, 0),
            &users,
            Rivals::reputation_only(1.0),
            Blocks::BOTH,
            admm,
        )?;
        cur.a.fill(1.0);
        for n in 0..nc {
            cur.b[(0, n)] = step.b[n];
            cur.c[(0, n)] = step.c[n];
        }
        state.a_hat.fill(1.0);
        state.t = 1;
        state.residuals.push(0.0);
        state.objectives.push(sum_value(&models, &cur));
        state.inner_iterations.push(vec![1]);
        state.wall_times.push(elapsed());
        state.converged = true;
    } else {
        while state.t < admm.t_max {
            let fresh = rivals(&models, &cur.b, &cur.c);
            blend_rivals(&mut state.rivals, &fresh, state.t);
            let results = global_update(&models, &state, &cur, &state.rivals, admm)?;
            for (m, r) in results.iter().enumerate() {
                for n in 0..nc {
                    cur.a[(m, n)] = r.a[n];
                    cur.b[(m, n)] = r.b[n];
                    cur.c[(m, n)] = r.c[n];
                }
            }
            let a_hat = update_local(&cur.a, &state.lambda, state.q);
            update_dual(&mut state.lambda, &cur.a, &a_hat, state.q);
            let residual = (&cur.a - &a_hat).norm();
            state.a_hat = a_hat;
            state.t += 1;
            state.residuals.push(residual);
            state.objectives.push(sum_value(&models, &cur));
            state.inner_iterations.push(results.iter().map(|r| r.dc_iterations).collect());
            state.wall_times.push(elapsed());
            if residual < admm.gamma_stop {
                state.converged = true;
                break;
            }
        }
    }

    let final_alloc = Allocation {
        a: reclaim(&state.a_hat, admm.inactive_threshold),
        b: cur.b.clone(),
        c: cur.c.clone(),
    };
    // Recovery: re-solve the resources for the consensus clustering, then
    // descend block-wise to a point no single block can improve. When the
    // consensus clustering misses a deadline, descent starts from it anyway
    // and keeps the first deadline-feasible block result.
    let recovered = polish(ev, &models, &final_alloc, mode, admm).unwrap_or(final_alloc);
    let mut allocation = match block_descent(ev, &models, &recovered, mode, admm) {
        Ok(run) => run.allocation,
        Err(_) => block_descent(ev, &models, &initial_allocation(s, &models)?, mode, admm)?.allocation,
    };
    // The energy is concave along clustering columns, so finish with whole
    // user moves between vertices, descending again after each success.
    // Pairwise swaps cover what single moves cannot reach, and one restart
    // per candidate leader escapes the leader descent settled on.
    for _ in 0..RECOVERY_ROUNDS {
        let (moved, mut any) = whole_user_moves(ev, &models, &allocation, mode, admm)?;
        let (swapped, swaps) = user_swaps(ev, &models, &moved, mode, admm)?;
        any |= swaps;
        if !any {
            break;
        }
        allocation = block_descent(ev, &models, &swapped, mode, admm)?.allocation;
    }
    allocation = leader_restarts(ev, &models, &allocation, mode, admm)?;
    let evaluation = ev.evaluate(&allocation)?;
    Ok(AdmmOutcome {
        decision: DecisionSet::from_allocation(&allocation, s, beta),
        allocation,
        converged: state.converged,
        state,
        evaluation,
    })
}
