//! Linearized constraint system over `(a, b', c', chi, psi, kappa)`.
//!
//! Four McCormick rows bound each product `chi = a b'` and `psi = a c'`
//! over the boxes `a in [0, 1]`, `b' in [1/B_m, 1/beta]`, `c' in
//! [1/C_m, 1/beta]`; four more bound `kappa = C-bar * (1 / B-bar)` with
//! `C-bar in [0, C_m]` and `1 / B-bar in [1/B_m, 1/beta]`. Per-pair delay
//! rows and per-AP capacity rows complete the system: `9MN + 6M` rows.

use nalgebra::DMatrix;

use crate::channel::SinrTable;
use crate::energetics::RESOURCE_FLOOR;
use crate::optimizer::DecisionSet;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Envelope row 1-4 of `chi = a b'`.
    Chi(u8),
    /// Envelope row 1-4 of `psi = a c'`.
    Psi(u8),
    /// Envelope row 1-4 of `kappa = C-bar / B-bar`.
    Kappa(u8),
    /// `L chi / log2(1 + s) + L rho psi <= D^t`.
    Delay,
    /// `sum_n 1/c' <= C_m`.
    ComputeCapacity,
    /// `sum_n 1/b' <= B_m`.
    BandwidthCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RltRow {
    pub kind: RowKind,
    pub ap: usize,
    pub user: Option<usize>,
}

impl RltRow {
    /// Rows other than the kappa envelopes and capacity sums are linear in
    /// the decision variables.
    pub fn is_linear(&self) -> bool {
        matches!(self.kind, RowKind::Chi(_) | RowKind::Psi(_) | RowKind::Delay)
    }
}

#[derive(Debug, Clone)]
pub struct RltSystem {
    pub rows: Vec<RltRow>,
    pub beta: f64,
    bandwidth: Vec<f64>,
    compute: Vec<f64>,
    task_bits: Vec<f64>,
    cycles: Vec<f64>,
    deadline: Vec<f64>,
    spectral: DMatrix<f64>,
}

pub fn build_rlt_constraints(scenario: &Scenario, sinr: &SinrTable, beta: f64) -> RltSystem {
    let (mc, nc) = (scenario.num_aps(), scenario.num_users());
    let mut rows = Vec::with_capacity(9 * mc * nc + 6 * mc);
    for m in 0..mc {
        for n in 0..nc {
            for k in 1..=4 {
                rows.push(RltRow { kind: RowKind::Chi(k), ap: m, user: Some(n) });
            }
            for k in 1..=4 {
                rows.push(RltRow { kind: RowKind::Psi(k), ap: m, user: Some(n) });
            }
            rows.push(RltRow { kind: RowKind::Delay, ap: m, user: Some(n) });
        }
        for k in 1..=4 {
            rows.push(RltRow { kind: RowKind::Kappa(k), ap: m, user: None });
        }
        rows.push(RltRow { kind: RowKind::ComputeCapacity, ap: m, user: None });
        rows.push(RltRow { kind: RowKind::BandwidthCapacity, ap: m, user: None });
    }
    RltSystem {
        rows,
        beta,
        bandwidth: scenario.aps.iter().map(|ap| ap.bandwidth).collect(),
        compute: scenario.aps.iter().map(|ap| ap.compute).collect(),
        task_bits: scenario.users.iter().map(|u| u.task_bits).collect(),
        cycles: scenario.users.iter().map(|u| u.cycles()).collect(),
        deadline: scenario.users.iter().map(|u| u.deadline).collect(),
        spectral: DMatrix::from_fn(mc, nc, |m, n| sinr.spectral_efficiency(m, n)),
    }
}

// `lhs <= rhs` as a residual relative to the magnitudes involved.
fn leq(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
}

impl RltSystem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn used(&self, d: &DecisionSet, m: usize, recip: &DMatrix<f64>) -> f64 {
        (0..d.a.ncols())
            .filter(|&n| d.is_active(m, n))
            .map(|n| 1.0 / recip[(m, n)])
            .sum()
    }

    /// Relative residual of `row` at `d`; feasible when `<= 0`.
    pub fn residual(&self, row: &RltRow, d: &DecisionSet) -> f64 {
        let m = row.ap;
        let beta = self.beta;
        let (bm, cm) = (self.bandwidth[m], self.compute[m]);
        match (row.kind, row.user) {
            (RowKind::Chi(k), Some(n)) => {
                envelope(k, d.chi[(m, n)], d.a[(m, n)], d.bp[(m, n)], 1.0 / bm, 1.0 / beta)
            }
            (RowKind::Psi(k), Some(n)) => {
                envelope(k, d.psi[(m, n)], d.a[(m, n)], d.cp[(m, n)], 1.0 / cm, 1.0 / beta)
            }
            (RowKind::Delay, Some(n)) => leq(
                self.task_bits[n] * d.chi[(m, n)] / self.spectral[(m, n)]
                    + self.cycles[n] * d.psi[(m, n)],
                self.deadline[n],
            ),
            (RowKind::Kappa(k), None) => {
                let c_bar = (cm - self.used(d, m, &d.cp)).max(RESOURCE_FLOOR);
                let b_bar = (bm - self.used(d, m, &d.bp)).max(RESOURCE_FLOOR);
                let kappa = d.kappa[m];
                match k {
                    1 => leq(c_bar / bm, kappa),
                    2 => leq(kappa, c_bar / bm + cm / b_bar - cm / bm),
                    3 => leq(kappa, c_bar / beta),
                    _ => leq(cm / b_bar + (c_bar - cm) / beta, kappa),
                }
            }
            (RowKind::ComputeCapacity, None) => leq(self.used(d, m, &d.cp), cm),
            (RowKind::BandwidthCapacity, None) => leq(self.used(d, m, &d.bp), bm),
            _ => unreachable!("row built with mismatched indices"),
        }
    }

    /// Largest residual and the row attaining it.
    pub fn max_violation(&self, d: &DecisionSet) -> (f64, Option<RltRow>) {
        let mut worst = (f64::NEG_INFINITY, None);
        for row in &self.rows {
            let r = self.residual(row, d);
            if r > worst.0 {
                worst = (r, Some(*row));
            }
        }
        worst
    }
}

/// McCormick row `k` for `w = x y` with `x in [0, 1]`, `y in [lo, hi]`.
fn envelope(k: u8, w: f64, x: f64, y: f64, lo: f64, hi: f64) -> f64 {
    match k {
        1 => leq(x * lo, w),
        2 => leq(w, y + x * lo - lo),
        3 => leq(w, x * hi),
        _ => leq(x * hi - hi + y, w),
    }
}
