//! Per-AP subproblem of the ADMM global update.
//!
//! With the other APs' reputations frozen at `R_o`, AP `m`'s consensus cost
//! as a function of its remaining resources is `min(g, L)`: `g` prices the
//! AP as a follower with `P_m = R_m / R_o`, `L` as the sure leader. Both are
//! sums of exponentials in `(ln B-bar, ln C-bar)`, so each regime is a
//! geometric program once the clustering row is fixed. The subproblem
//! alternates an exact clustering step with an exact resource step, which
//! never increases the augmented Lagrangian.

use nalgebra::DVector;

use crate::channel::BackhaulTable;
use crate::config::AdmmConfig;
use crate::consensus::reputation;
use crate::energetics::{Evaluator, RESOURCE_FLOOR};
use crate::error::{Error, Result};
use crate::optimizer::convex::{Affine, ConvexProgram, SmoothConvex, SolverOptions, SumExp};

/// Keeps the clustering step strictly inside the delay rows.
const DELAY_MARGIN: f64 = 1e-9;

/// Consensus constants of one AP, in joules with resources in native units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusCoefs {
    /// Leader transmission: `E_l^t = alpha / B-bar`.
    pub alpha: f64,
    /// Follower transmission: `E_f^t = follower / B-bar`.
    pub follower: f64,
    /// Block generation: `E_l^g = generation / C-bar`.
    pub generation: f64,
    pub block_size: f64,
    /// `L^s + L^b`.
    pub total_size: f64,
}

impl ConsensusCoefs {
    pub fn new(m: usize, net: &BackhaulTable, cfg: &crate::config::SystemConfig) -> Result<Self> {
        let mc = net.num_aps();
        let di = cfg.block_interval as f64;
        let lt = cfg.state_msg_size + cfg.block_size;
        let followers = (mc - 1) as f64;
        let mut inv_se = 0.0;
        for i in (0..mc).filter(|&i| i != m) {
            let se = (1.0 + net.sinr(m, i)).log2();
            if !(se > 0.0) {
                return Err(Error::InfiniteDelay(format!("backhaul {m}->{i} carries no data")));
            }
            inv_se += 1.0 / se;
        }
        let se_mean = (1.0 + net.mean(m)).log2();
        if !(se_mean > 0.0) {
            return Err(Error::InfiniteDelay(format!("AP {m} follower link carries no data")));
        }
        Ok(ConsensusCoefs {
            alpha: cfg.epsilon_c * lt * followers * ((2.0 + di).powi(2) + followers) * inv_se,
            follower: cfg.epsilon_c * (di + 2.0).powi(2) * cfg.state_msg_size / se_mean,
            generation: cfg.epsilon_p * cfg.block_size,
            block_size: cfg.block_size,
            total_size: lt,
        })
    }

    pub fn reputation(&self, b_bar: f64, c_bar: f64) -> f64 {
        reputation(c_bar, b_bar, self.total_size - self.block_size, self.block_size)
    }

    /// Leader cost `E_l^g + E_l^t`.
    pub fn leader(&self, b_bar: f64, c_bar: f64) -> f64 {
        self.generation / c_bar + self.alpha / b_bar
    }

    /// Expected cost with the maximum reputation `max(R_o, R_m)`.
    pub fn expected(&self, b_bar: f64, c_bar: f64, r_others: f64) -> f64 {
        let r_m = self.reputation(b_bar, c_bar);
        let p = if r_m >= r_others { 1.0 } else { r_m / r_others };
        p * self.leader(b_bar, c_bar) + (1.0 - p) * self.follower / b_bar
    }
}

/// Constants of AP `m`'s subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct ApModel {
    pub ap: usize,
    pub bandwidth: f64,
    pub compute: f64,
    pub beta: f64,
    /// `E^u_{m,n} = a w_b / b`.
    pub w_b: Vec<f64>,
    /// `E^e_{m,n} = a w_c / c`.
    pub w_c: Vec<f64>,
    /// `D^u_{m,n} = a t_b / b`.
    pub t_b: Vec<f64>,
    /// `D^e_{m,n} = a t_c / c`.
    pub t_c: Vec<f64>,
    pub deadline: Vec<f64>,
    /// Absent when consensus is not part of the objective.
    pub consensus: Option<ConsensusCoefs>,
}

impl ApModel {
    pub fn new(ev: &Evaluator<'_>, m: usize, beta: f64, with_consensus: bool) -> Result<Self> {
        let s = ev.scenario;
        let cfg = ev.config();
        let se: Vec<f64> = (0..s.num_users()).map(|n| ev.sinr.spectral_efficiency(m, n)).collect();
        if let Some(n) = se.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::InfeasibleAllocation {
                ap: m,
                user: n,
                reason: "zero uplink SINR".into(),
            });
        }
        let consensus = if with_consensus && s.num_aps() >= 2 {
            Some(ConsensusCoefs::new(m, &ev.backhaul, cfg)?)
        } else {
            None
        };
        Ok(ApModel {
            ap: m,
            bandwidth: s.aps[m].bandwidth,
            compute: s.aps[m].compute,
            beta,
            w_b: s.users.iter().zip(&se).map(|(u, se)| cfg.epsilon_c * u.task_bits / se).collect(),
            w_c: s.users.iter().map(|u| cfg.epsilon_p * u.cycles()).collect(),
            t_b: s.users.iter().zip(&se).map(|(u, se)| u.task_bits / se).collect(),
            t_c: s.users.iter().map(|u| u.cycles()).collect(),
            deadline: s.users.iter().map(|u| u.deadline).collect(),
            consensus,
        })
    }

    pub fn num_users(&self) -> usize {
        self.w_b.len()
    }

    pub fn remaining(&self, b: &[f64], c: &[f64]) -> (f64, f64) {
        (
            (self.bandwidth - b.iter().sum::<f64>()).max(RESOURCE_FLOOR),
            (self.compute - c.iter().sum::<f64>()).max(RESOURCE_FLOOR),
        )
    }

    /// Offloading energy of this AP's row (transmission and computing).
    pub fn offload_energy(&self, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
        (0..self.num_users())
            .filter(|&n| a[n] > 0.0)
            .map(|n| a[n] * (self.w_b[n] / b[n] + self.w_c[n] / c[n]))
            .sum()
    }

    /// `V_m` in joules: offloading plus expected consensus cost, plus the
    /// rivals' leader premium scaled by the maximum reputation.
    pub fn value(&self, a: &[f64], b: &[f64], c: &[f64], rivals: Rivals) -> f64 {
        let (b_bar, c_bar) = self.remaining(b, c);
        self.offload_energy(a, b, c)
            + self.consensus.map_or(0.0, |k| {
                let r_max = k.reputation(b_bar, c_bar).max(rivals.best_reputation);
                k.expected(b_bar, c_bar, rivals.best_reputation) + rivals.externality / r_max
            })
    }

    /// Largest share of user `n` the allocation `(b, c)` serves in time.
    pub fn share_limit(&self, n: usize, b: f64, c: f64) -> f64 {
        let per_share = self.t_b[n] / b + self.t_c[n] / c;
        (self.deadline[n] / per_share).min(1.0)
    }
}

/// What AP `m`'s consensus cost depends on outside its own row, frozen
/// during its subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rivals {
    /// Highest reputation among the other APs.
    pub best_reputation: f64,
    /// `sum_k R_k (L_k - F_k)` over the other APs: their leader premium,
    /// which the maximum reputation divides.
    pub externality: f64,
}

impl Rivals {
    /// Rivals whose leader premium is ignored.
    pub fn reputation_only(best_reputation: f64) -> Self {
        Rivals {
            best_reputation,
            externality: 0.0,
        }
    }
}

/// AP `m`'s slice of a [`DecisionSet`](super::DecisionSet).
#[derive(Debug, Clone, PartialEq)]
pub struct ApSlice {
    pub a: Vec<f64>,
    pub bp: Vec<f64>,
    pub cp: Vec<f64>,
    pub chi: Vec<f64>,
    pub psi: Vec<f64>,
    pub kappa: f64,
}

impl ApSlice {
    pub fn from_decision(d: &super::DecisionSet, m: usize) -> Self {
        let row = |x: &nalgebra::DMatrix<f64>| x.row(m).iter().copied().collect::<Vec<_>>();
        ApSlice {
            a: row(&d.a),
            bp: row(&d.bp),
            cp: row(&d.cp),
            chi: row(&d.chi),
            psi: row(&d.psi),
            kappa: d.kappa[m],
        }
    }
}

/// `V_m` evaluated on the reciprocal and auxiliary variables: offloading
/// through `chi` and `psi`, consensus through `B-bar = B - sum 1/b'` and
/// `C-bar = kappa B-bar`, with the other APs' best reputation `r_others`.
pub fn objective_v(model: &ApModel, slice: &ApSlice, r_others: f64) -> Result<f64> {
    let tol = 1e-9;
    let in_box = |x: f64, lo: f64, hi: f64| x >= lo * (1.0 - tol) && x <= hi * (1.0 + tol);
    let mut offload = 0.0;
    let mut used_b = 0.0;
    for n in 0..model.num_users() {
        if !(0.0..=1.0).contains(&slice.a[n]) {
            return Err(Error::Domain(format!("a[{n}] outside [0, 1]")));
        }
        if !in_box(slice.bp[n], 1.0 / model.bandwidth, 1.0 / model.beta)
            || !in_box(slice.cp[n], 1.0 / model.compute, 1.0 / model.beta)
        {
            return Err(Error::Domain(format!("reciprocal allocation of user {n} outside its box")));
        }
        offload += model.w_b[n] * slice.chi[n] + model.w_c[n] * slice.psi[n];
        if slice.a[n] > 0.0 {
            used_b += 1.0 / slice.bp[n];
        }
    }
    if !(slice.kappa >= 0.0 && slice.kappa.is_finite()) {
        return Err(Error::Domain("kappa must be finite and nonnegative".into()));
    }
    let b_bar = (model.bandwidth - used_b).max(RESOURCE_FLOOR);
    let c_bar = slice.kappa * b_bar;
    Ok(offload
        + model
            .consensus
            .map_or(0.0, |k| k.expected(b_bar, c_bar, r_others)))
}

/// Which resources a resource step may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocks {
    pub bandwidth: bool,
    pub compute: bool,
}

impl Blocks {
    pub const BOTH: Blocks = Blocks {
        bandwidth: true,
        compute: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Leader,
    Follower,
}

/// Outcome of one resource step.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceStep {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `V_m` in joules at `(b, c)`.
    pub value: f64,
    pub newton_steps: usize,
}

/// Optimal `(b, c)` for a fixed clustering row. Users outside `users` get
/// nothing; users inside keep at least `beta` of each resource and meet
/// their deadline. Returns an error when no allocation meets the deadlines.
pub fn solve_resources(
    model: &ApModel,
    a: &[f64],
    b0: &[f64],
    c0: &[f64],
    users: &[usize],
    rivals: Rivals,
    blocks: Blocks,
    admm: &AdmmConfig,
) -> Result<ResourceStep> {
    let nc = model.num_users();
    let mut b = vec![0.0; nc];
    let mut c = vec![0.0; nc];
    for &n in users {
        b[n] = b0[n];
        c[n] = c0[n];
    }
    if users.is_empty() {
        return Ok(ResourceStep {
            value: model.value(a, &b, &c, rivals),
            b,
            c,
            newton_steps: 0,
        });
    }
    let regimes: &[Option<Regime>] = if model.consensus.is_some() {
        &[Some(Regime::Follower), Some(Regime::Leader)]
    } else {
        &[None]
    };
    let mut best: Option<ResourceStep> = None;
    let mut steps = 0;
    let mut last_err = None;
    for &regime in regimes {
        match resource_program(model, a, &b, &c, users, rivals, blocks, regime, admm) {
            Ok((bn, cn, used)) => {
                steps += used;
                let value = model.value(a, &bn, &cn, rivals);
                if best.as_ref().is_none_or(|s| value < s.value) {
                    best = Some(ResourceStep {
                        b: bn,
                        c: cn,
                        value,
                        newton_steps: 0,
                    });
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(mut s) => {
            s.newton_steps = steps;
            Ok(s)
        }
        None => Err(last_err.unwrap_or_else(|| Error::InfeasibleDecision("no regime solved".into()))),
    }
}

// Variable layout: [y_n for users] [z_n for users] [u] [v], each block
// present only when optimized. y = ln(b / B), z = ln(c / C),
// u = ln(B-bar / B), v = ln(C-bar / C).
#[allow(clippy::too_many_arguments)]
fn resource_program(
    model: &ApModel,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    users: &[usize],
    rivals: Rivals,
    blocks: Blocks,
    regime: Option<Regime>,
    admm: &AdmmConfig,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let k = users.len();
    let (bw, cp) = (model.bandwidth, model.compute);
    let unit = admm.energy_unit;
    let mut dim = 0;
    let y0 = dim;
    if blocks.bandwidth {
        dim += k;
    }
    let z0 = dim;
    if blocks.compute {
        dim += k;
    }
    let with_consensus = regime.is_some();
    let u_idx = (with_consensus && blocks.bandwidth).then(|| {
        dim += 1;
        dim - 1
    });
    let v_idx = (with_consensus && blocks.compute).then(|| {
        dim += 1;
        dim - 1
    });
    // Fixed resources and what they leave over.
    let fixed_b: f64 = b.iter().sum();
    let fixed_c: f64 = c.iter().sum();
    let b_bar_fixed = (bw - fixed_b).max(RESOURCE_FLOOR);
    let c_bar_fixed = (cp - fixed_c).max(RESOURCE_FLOOR);

    // b^p as (coefficient, exponent entries) for the current layout.
    let pow_b = |j: usize, p: f64| -> (f64, Vec<(usize, f64)>) {
        if blocks.bandwidth {
            (bw.powf(p), vec![(y0 + j, p)])
        } else {
            (b[users[j]].powf(p), vec![])
        }
    };
    let pow_c = |j: usize, p: f64| -> (f64, Vec<(usize, f64)>) {
        if blocks.compute {
            (cp.powf(p), vec![(z0 + j, p)])
        } else {
            (c[users[j]].powf(p), vec![])
        }
    };
    let pow_bbar = |p: f64| -> (f64, Vec<(usize, f64)>) {
        match u_idx {
            Some(i) => (bw.powf(p), vec![(i, p)]),
            None => (b_bar_fixed.powf(p), vec![]),
        }
    };
    let pow_cbar = |p: f64| -> (f64, Vec<(usize, f64)>) {
        match v_idx {
            Some(i) => (cp.powf(p), vec![(i, p)]),
            None => (c_bar_fixed.powf(p), vec![]),
        }
    };
    let mut objective = SumExp::new(0.0);
    let add = |f: &mut SumExp, coef: f64, parts: &[(f64, Vec<(usize, f64)>)]| {
        let mut c = coef;
        let mut e = Vec::new();
        for (pc, pe) in parts {
            c *= pc;
            e.extend_from_slice(pe);
        }
        if e.is_empty() {
            f.constant += c;
        } else {
            f.term(c, e);
        }
    };
    for (j, &n) in users.iter().enumerate() {
        if a[n] > 0.0 {
            add(&mut objective, a[n] * model.w_b[n] / unit, &[pow_b(j, -1.0)]);
            add(&mut objective, a[n] * model.w_c[n] / unit, &[pow_c(j, -1.0)]);
        }
    }
    if let (Some(regime), Some(kc)) = (regime, model.consensus) {
        match regime {
            Regime::Leader => {
                add(&mut objective, kc.generation / unit, &[pow_cbar(-1.0)]);
                add(&mut objective, kc.alpha / unit, &[pow_bbar(-1.0)]);
                if rivals.externality > 0.0 {
                    // ext / R_m, with R_m bounded below by its weighted
                    // geometric mean at the current point.
                    let u1 = c_bar_fixed / kc.block_size;
                    let u2 = b_bar_fixed / kc.total_size;
                    let th = (u1 / (u1 + u2)).clamp(1e-12, 1.0 - 1e-12);
                    let coef = rivals.externality
                        * (th * kc.block_size).powf(th)
                        * ((1.0 - th) * kc.total_size).powf(1.0 - th);
                    add(&mut objective, coef / unit, &[pow_cbar(-th), pow_bbar(th - 1.0)]);
                }
            }
            Regime::Follower => {
                let gap = kc.alpha - kc.follower;
                add(&mut objective, kc.follower / unit, &[pow_bbar(-1.0)]);
                objective.constant += (kc.generation / kc.block_size + gap / kc.total_size) / rivals.best_reputation / unit;
                add(
                    &mut objective,
                    gap / (kc.block_size * rivals.best_reputation * unit),
                    &[pow_cbar(1.0), pow_bbar(-1.0)],
                );
                add(
                    &mut objective,
                    kc.generation / (kc.total_size * rivals.best_reputation * unit),
                    &[pow_bbar(1.0), pow_cbar(-1.0)],
                );
            }
        }
    }

    let mut constraints: Vec<Box<dyn SmoothConvex>> = Vec::new();
    let unit_vec = |i: usize, s: f64| {
        let mut v = DVector::zeros(dim);
        v[i] = s;
        v
    };
    // Capacity: sum of shares plus remaining within the AP total.
    if blocks.bandwidth {
        let mut g = SumExp::new(-1.0);
        for j in 0..k {
            g.term(1.0, vec![(y0 + j, 1.0)]);
        }
        if let Some(i) = u_idx {
            g.term(1.0, vec![(i, 1.0)]);
            constraints.push(Box::new(Affine { a: unit_vec(i, -1.0), b: (RESOURCE_FLOOR / bw).ln() }));
        }
        constraints.push(Box::new(g));
        for j in 0..k {
            constraints.push(Box::new(Affine { a: unit_vec(y0 + j, -1.0), b: (model.beta / bw).ln() }));
        }
    }
    if blocks.compute {
        let mut g = SumExp::new(-1.0);
        for j in 0..k {
            g.term(1.0, vec![(z0 + j, 1.0)]);
        }
        if let Some(i) = v_idx {
            g.term(1.0, vec![(i, 1.0)]);
            constraints.push(Box::new(Affine { a: unit_vec(i, -1.0), b: (RESOURCE_FLOOR / cp).ln() }));
        }
        constraints.push(Box::new(g));
        for j in 0..k {
            constraints.push(Box::new(Affine { a: unit_vec(z0 + j, -1.0), b: (model.beta / cp).ln() }));
        }
    }
    // Deadlines of users with a positive share.
    for (j, &n) in users.iter().enumerate() {
        if a[n] <= 0.0 {
            continue;
        }
        let d = model.deadline[n];
        let mut g = SumExp::new(-1.0);
        add(&mut g, a[n] * model.t_b[n] / d, &[pow_b(j, -1.0)]);
        add(&mut g, a[n] * model.t_c[n] / d, &[pow_c(j, -1.0)]);
        if g.terms.is_empty() {
            // Nothing to choose: a fixed allocation either meets the deadline or not.
            if g.constant > 0.0 {
                return Err(Error::InfeasibleDecision(format!(
                    "AP {}: user {n} misses its deadline with fixed resources",
                    model.ap
                )));
            }
            continue;
        }
        constraints.push(Box::new(g));
    }
    if dim == 0 {
        return Ok((b.to_vec(), c.to_vec(), 0));
    }

    // Start from the current allocation, remaining set halfway into the slack.
    let mut x0 = DVector::zeros(dim);
    for (j, &n) in users.iter().enumerate() {
        if blocks.bandwidth {
            x0[y0 + j] = (b[n].max(model.beta * 1.01) / bw).ln();
        }
        if blocks.compute {
            x0[z0 + j] = (c[n].max(model.beta * 1.01) / cp).ln();
        }
    }
    if let Some(i) = u_idx {
        x0[i] = (0.5 * (bw - fixed_b).max(2.0 * RESOURCE_FLOOR) / bw).ln();
    }
    if let Some(i) = v_idx {
        x0[i] = (0.5 * (cp - fixed_c).max(2.0 * RESOURCE_FLOOR) / cp).ln();
    }
    let program = ConvexProgram {
        dim,
        objective: Box::new(objective),
        constraints,
    };
    let options = SolverOptions {
        max_newton_steps: admm.inner_max_iters,
        ..SolverOptions::default()
    };
    let sol = program.solve(&x0, &options).map_err(|e| match e {
        Error::InfeasibleDecision(msg) => {
            Error::InfeasibleDecision(format!("AP {}: {msg}", model.ap))
        }
        other => other,
    })?;
    let mut bn = b.to_vec();
    let mut cn = c.to_vec();
    for (j, &n) in users.iter().enumerate() {
        if blocks.bandwidth {
            bn[n] = bw * sol.x[y0 + j].exp();
        }
        if blocks.compute {
            cn[n] = cp * sol.x[z0 + j].exp();
        }
    }
    Ok((bn, cn, sol.newton_steps))
}

/// Result of one AP's global update.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Augmented Lagrangian after each alternation, in energy units.
    pub history: Vec<f64>,
    pub dc_iterations: usize,
    pub newton_steps: usize,
}

/// Augmented Lagrangian of AP `m` in units of `admm.energy_unit`.
#[allow(clippy::too_many_arguments)]
pub fn augmented_value(
    model: &ApModel,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    a_hat: &[f64],
    lambda: &[f64],
    q: f64,
    rivals: Rivals,
    unit: f64,
) -> f64 {
    let penalty: f64 = (0..a.len())
        .map(|n| {
            let d = a[n] - a_hat[n];
            lambda[n] * d + 0.5 * q * d * d
        })
        .sum();
    model.value(a, b, c, rivals) / unit + penalty
}

/// Alternates the closed-form clustering step with the resource step until
/// the augmented Lagrangian changes by less than `dc_tol` relative.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem_dc(
    model: &ApModel,
    a_hat: &[f64],
    lambda: &[f64],
    q: f64,
    start: (&[f64], &[f64], &[f64]),
    rivals: Rivals,
    admm: &AdmmConfig,
) -> Result<SubproblemResult> {
    let nc = model.num_users();
    let unit = admm.energy_unit;
    let (mut a, mut b, mut c) = (start.0.to_vec(), start.1.to_vec(), start.2.to_vec());
    let all: Vec<usize> = (0..nc).collect();
    let f = |a: &[f64], b: &[f64], c: &[f64]| {
        augmented_value(model, a, b, c, a_hat, lambda, q, rivals, unit)
    };
    let mut current = f(&a, &b, &c);
    let mut history = Vec::new();
    let mut newton_steps = 0;
    let mut iterations = 0;
    for _ in 0..admm.dc_max_iters {
        iterations += 1;
        // Clustering step: separable quadratic, first without the deadline
        // cap so resources can be resized for a larger share.
        let mut desired = vec![0.0; nc];
        let mut capped = vec![0.0; nc];
        for n in 0..nc {
            let slope = (model.w_b[n] / b[n] + model.w_c[n] / c[n]) / unit;
            desired[n] = (a_hat[n] - (slope + lambda[n]) / q).clamp(0.0, 1.0);
            let cap = model.share_limit(n, b[n], c[n]) * (1.0 - DELAY_MARGIN);
            capped[n] = desired[n].min(cap.max(0.0));
        }
        // Candidates: the desired share with resized resources, the capped
        // share as is, and the capped share with resized resources.
        let (b0, c0) = (b.clone(), c.clone());
        let mut candidates = vec![(capped.clone(), b0.clone(), c0.clone())];
        if desired != capped {
            if let Ok(step) = solve_resources(model, &desired, &b0, &c0, &all, rivals, Blocks::BOTH, admm) {
                newton_steps += step.newton_steps;
                candidates.push((desired, step.b, step.c));
            }
        }
        if let Ok(step) = solve_resources(model, &capped, &b0, &c0, &all, rivals, Blocks::BOTH, admm) {
            newton_steps += step.newton_steps;
            candidates.push((capped, step.b, step.c));
        }
        let mut next = current;
        for (ca, cb, cc) in candidates {
            let v = f(&ca, &cb, &cc);
            if v < next {
                next = v;
                (a, b, c) = (ca, cb, cc);
            }
        }
        history.push(next);
        let change = (current - next).abs() / next.abs().max(1e-12);
        current = next;
        if change < admm.dc_tol {
            break;
        }
    }
    Ok(SubproblemResult {
        a,
        b,
        c,
        history,
        dc_iterations: iterations,
        newton_steps,
    })
}
