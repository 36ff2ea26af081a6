//! Joint clustering, bandwidth and compute optimization.
//!
//! The problem is split per AP with ADMM ([`admm`]): each AP solves its own
//! subproblem ([`subproblem`]) on a private copy of the clustering row, a
//! coordinator projects the copies back onto the simplex ([`simplex`]) and
//! updates the multipliers. Resource subproblems are geometric programs in
//! log-variables, solved by the barrier method in [`convex`]. [`rlt`] holds
//! the linearized constraint system used to certify returned decisions.

pub mod admm;
pub mod blocks;
pub mod convex;
pub mod feasibility;
pub mod rlt;
pub mod simplex;
pub mod subproblem;

pub use admm::{
    admm_solve, admm_solve_with, global_update, initial_allocation, polish, reclaim, update_dual, update_local,
    verify_allocation, AdmmOutcome, AdmmState, ObjectiveMode,
};
pub use rlt::{build_rlt_constraints, RltRow, RltSystem, RowKind};
pub use simplex::project_simplex;
pub use subproblem::{objective_v, solve_subproblem_dc, ApModel, ApSlice, SubproblemResult};

use nalgebra::DMatrix;

use crate::config::AdmmConfig;
use crate::energetics::Allocation;
use crate::scenario::Scenario;

/// `beta`: the smallest allocation an active pair may receive.
pub fn allocation_floor(scenario: &Scenario, admm: &AdmmConfig) -> f64 {
    admm.beta_scale * scenario.min_resource()
}

/// Optimization variables in reciprocal form with their auxiliary products.
///
/// Inactive pairs (`a = 0`) sit at the box corner `b' = c' = 1/beta` with
/// `chi = psi = 0`; they receive no resources.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    pub a: DMatrix<f64>,
    /// `b' = 1/b`.
    pub bp: DMatrix<f64>,
    /// `c' = 1/c`.
    pub cp: DMatrix<f64>,
    /// `chi = a b'`.
    pub chi: DMatrix<f64>,
    /// `psi = a c'`.
    pub psi: DMatrix<f64>,
    /// `kappa_m = C-bar_m / B-bar_m`.
    pub kappa: Vec<f64>,
    pub beta: f64,
}

impl DecisionSet {
    pub fn from_allocation(alloc: &Allocation, scenario: &Scenario, beta: f64) -> Self {
        let (mc, nc) = alloc.a.shape();
        let recip = |x: &DMatrix<f64>| {
            DMatrix::from_fn(mc, nc, |m, n| {
                if alloc.a[(m, n)] > 0.0 {
                    1.0 / x[(m, n)]
                } else {
                    1.0 / beta
                }
            })
        };
        let bp = recip(&alloc.b);
        let cp = recip(&alloc.c);
        let chi = alloc.a.component_mul(&bp);
        let psi = alloc.a.component_mul(&cp);
        let (c_bar, b_bar) = alloc.remaining(scenario);
        let kappa = c_bar.iter().zip(&b_bar).map(|(c, b)| c / b).collect();
        DecisionSet {
            a: alloc.a.clone(),
            bp,
            cp,
            chi,
            psi,
            kappa,
            beta,
        }
    }

    pub fn is_active(&self, m: usize, n: usize) -> bool {
        self.a[(m, n)] > 0.0
    }

    pub fn allocation(&self) -> Allocation {
        let (mc, nc) = self.a.shape();
        let direct = |x: &DMatrix<f64>| {
            DMatrix::from_fn(mc, nc, |m, n| {
                if self.is_active(m, n) {
                    1.0 / x[(m, n)]
                } else {
                    0.0
                }
            })
        };
        Allocation {
            a: self.a.clone(),
            b: direct(&self.bp),
            c: direct(&self.cp),
        }
    }

    /// Largest `|chi - a b'|` and `|psi - a c'|` relative to the product,
    /// over active pairs.
    pub fn product_gap(&self) -> f64 {
        let mut worst = 0.0_f64;
        for ((&a, (&bp, &cp)), (&chi, &psi)) in self
            .a
            .iter()
            .zip(self.bp.iter().zip(self.cp.iter()))
            .zip(self.chi.iter().zip(self.psi.iter()))
        {
            if a > 0.0 {
                worst = worst.max((chi - a * bp).abs() / (a * bp));
                worst = worst.max((psi - a * cp).abs() / (a * cp));
            }
        }
        worst
    }
}
