//! Log-barrier Newton method for small smooth convex programs.
//!
//! `min f(x)` subject to `g_i(x) <= 0`. A strictly feasible start is found
//! with a phase-I problem when the caller's point is not interior.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A twice-differentiable convex function.
pub trait SmoothConvex: Send + Sync {
    fn value(&self, x: &DVector<f64>) -> f64;
    /// Adds the gradient, scaled by `w`, into `g`.
    fn add_gradient(&self, x: &DVector<f64>, w: f64, g: &mut DVector<f64>);
    /// Adds the Hessian, scaled by `w`, into `h`.
    fn add_hessian(&self, x: &DVector<f64>, w: f64, h: &mut DMatrix<f64>);
}

/// `sum_j c_j exp(e_j . x) + constant` with `c_j >= 0`; convex because each
/// term is the exponential of an affine function.
#[derive(Debug, Clone, Default)]
pub struct SumExp {
    /// `(c_j, e_j)` with `e_j` a sparse `(index, coefficient)` list.
    pub terms: Vec<(f64, Vec<(usize, f64)>)>,
    pub constant: f64,
}

impl SumExp {
    pub fn new(constant: f64) -> Self {
        SumExp {
            terms: Vec::new(),
            constant,
        }
    }

    /// Adds `coef * exp(sum_k e_k x_k)`; zero coefficients are dropped.
    pub fn term(&mut self, coef: f64, exponent: Vec<(usize, f64)>) -> &mut Self {
        debug_assert!(coef >= 0.0);
        if coef > 0.0 {
            self.terms.push((coef, exponent));
        }
        self
    }

    fn term_value(x: &DVector<f64>, coef: f64, e: &[(usize, f64)]) -> f64 {
        coef * e.iter().map(|&(k, ek)| ek * x[k]).sum::<f64>().exp()
    }
}

impl SmoothConvex for SumExp {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(c, e)| Self::term_value(x, *c, e))
                .sum::<f64>()
    }

    fn add_gradient(&self, x: &DVector<f64>, w: f64, g: &mut DVector<f64>) {
        for (c, e) in &self.terms {
            let t = w * Self::term_value(x, *c, e);
            for &(k, ek) in e {
                g[k] += t * ek;
            }
        }
    }

    fn add_hessian(&self, x: &DVector<f64>, w: f64, h: &mut DMatrix<f64>) {
        for (c, e) in &self.terms {
            let t = w * Self::term_value(x, *c, e);
            for &(i, ei) in e {
                for &(j, ej) in e {
                    h[(i, j)] += t * ei * ej;
                }
            }
        }
    }
}

/// `a . x + b`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub a: DVector<f64>,
    pub b: f64,
}

impl SmoothConvex for Affine {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.a.dot(x) + self.b
    }
    fn add_gradient(&self, _x: &DVector<f64>, w: f64, g: &mut DVector<f64>) {
        g.axpy(w, &self.a, 1.0);
    }
    fn add_hessian(&self, _x: &DVector<f64>, _w: f64, _h: &mut DMatrix<f64>) {}
}

/// `x' P x / 2 + p . x + r` with `P` positive semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub p_mat: DMatrix<f64>,
    pub p: DVector<f64>,
    pub r: f64,
}

impl SmoothConvex for Quadratic {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p_mat * x)) + self.p.dot(x) + self.r
    }
    fn add_gradient(&self, x: &DVector<f64>, w: f64, g: &mut DVector<f64>) {
        g.axpy(w, &(&self.p_mat * x + &self.p), 1.0);
    }
    fn add_hessian(&self, _x: &DVector<f64>, w: f64, h: &mut DMatrix<f64>) {
        *h += &self.p_mat * w;
    }
}

pub struct ConvexProgram {
    pub dim: usize,
    pub objective: Box<dyn SmoothConvex>,
    /// Each entry must stay `<= 0`.
    pub constraints: Vec<Box<dyn SmoothConvex>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_newton_steps: usize,
    /// Target duality gap relative to `1 + |f|`.
    pub rel_gap: f64,
    pub mu: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_newton_steps: 10_000,
            rel_gap: 1e-10,
            mu: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    /// False when the step cap was hit before the gap target.
    pub converged: bool,
    /// Largest constraint value (`<= 0` means feasible).
    pub max_violation: f64,
}

impl ConvexProgram {
    pub fn max_constraint(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|g| g.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn strictly_feasible(&self, x: &DVector<f64>) -> bool {
        self.constraints.iter().all(|g| {
            let v = g.value(x);
            v < 0.0 && v.is_finite()
        })
    }

    /// Minimizes from `x0`; runs phase I first when `x0` is not interior.
    pub fn solve(&self, x0: &DVector<f64>, options: &SolverOptions) -> Result<Solution> {
        let mut steps = 0;
        let start = if self.strictly_feasible(x0) {
            x0.clone()
        } else {
            let (x, used) = self.phase_one(x0, options)?;
            steps += used;
            x
        };
        let (x, used, converged) = barrier(
            self.dim,
            &*self.objective,
            &self.constraints,
            start,
            options,
            options.max_newton_steps.saturating_sub(steps),
        );
        steps += used;
        Ok(Solution {
            objective: self.objective.value(&x),
            max_violation: if self.constraints.is_empty() {
                0.0
            } else {
                self.max_constraint(&x)
            },
            x,
            newton_steps: steps,
            converged,
        })
    }

    /// `min s` subject to `g_i(x) <= s`, stopped once `s < 0`.
    fn phase_one(&self, x0: &DVector<f64>, options: &SolverOptions) -> Result<(DVector<f64>, usize)> {
        let n = self.dim;
        let s0 = self.max_constraint(x0);
        if !s0.is_finite() {
            return Err(Error::InfeasibleDecision(
                "starting point has non-finite constraint values".into(),
            ));
        }
        let shifted: Vec<Box<dyn SmoothConvex + '_>> = self
            .constraints
            .iter()
            .map(|g| Box::new(Shifted { inner: g.as_ref(), slack: n }) as Box<dyn SmoothConvex + '_>)
            .collect();
        let mut a = DVector::zeros(n + 1);
        a[n] = 1.0;
        let objective = Affine { a, b: 0.0 };
        let mut z = x0.clone().resize_vertically(n + 1, 0.0);
        z[n] = s0.abs().max(1.0) + s0;
        let opts = SolverOptions {
            rel_gap: 1e-6,
            ..*options
        };
        let (z, steps, _) = barrier_until(n + 1, &objective, &shifted, z, &opts, options.max_newton_steps, |z| {
            z[n] < 0.0
        });
        let x = z.rows(0, n).into_owned();
        if !self.strictly_feasible(&x) {
            return Err(Error::InfeasibleDecision(format!(
                "no strictly feasible point (best max constraint {:e})",
                self.max_constraint(&x)
            )));
        }
        Ok((x, steps))
    }
}

struct Shifted<'a> {
    inner: &'a dyn SmoothConvex,
    slack: usize,
}

impl SmoothConvex for Shifted<'_> {
    fn value(&self, z: &DVector<f64>) -> f64 {
        let x = z.rows(0, self.slack).into_owned();
        self.inner.value(&x) - z[self.slack]
    }
    fn add_gradient(&self, z: &DVector<f64>, w: f64, g: &mut DVector<f64>) {
        let x = z.rows(0, self.slack).into_owned();
        let mut gx = DVector::zeros(self.slack);
        self.inner.add_gradient(&x, w, &mut gx);
        g.rows_mut(0, self.slack).add_assign(&gx);
        g[self.slack] -= w;
    }
    fn add_hessian(&self, z: &DVector<f64>, w: f64, h: &mut DMatrix<f64>) {
        let x = z.rows(0, self.slack).into_owned();
        let mut hx = DMatrix::zeros(self.slack, self.slack);
        self.inner.add_hessian(&x, w, &mut hx);
        h.view_mut((0, 0), (self.slack, self.slack)).add_assign(&hx);
    }
}

fn barrier(
    dim: usize,
    objective: &dyn SmoothConvex,
    constraints: &[Box<dyn SmoothConvex + '_>],
    x: DVector<f64>,
    options: &SolverOptions,
    budget: usize,
) -> (DVector<f64>, usize, bool) {
    barrier_until(dim, objective, constraints, x, options, budget, |_| false)
}

/// Barrier path following; `done` allows an early exit (used by phase I).
fn barrier_until(
    dim: usize,
    objective: &dyn SmoothConvex,
    constraints: &[Box<dyn SmoothConvex + '_>],
    mut x: DVector<f64>,
    options: &SolverOptions,
    budget: usize,
    done: impl Fn(&DVector<f64>) -> bool,
) -> (DVector<f64>, usize, bool) {
    let m = constraints.len() as f64;
    let merit = |x: &DVector<f64>, t: f64| -> f64 {
        let mut v = t * objective.value(x);
        for g in constraints {
            let gv = g.value(x);
            if !(gv < 0.0) {
                return f64::INFINITY;
            }
            v -= (-gv).ln();
        }
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    // Start with t balancing the objective against the barrier.
    let mut t = if m == 0.0 {
        1.0
    } else {
        (m / (1.0 + objective.value(&x).abs())).max(1e-12)
    };
    let mut steps = 0;
    loop {
        // Newton centering for the current t.
        let mut centering = 0;
        loop {
            if done(&x) {
                return (x, steps, true);
            }
            if steps >= budget {
                return (x, steps, false);
            }
            let mut g = DVector::zeros(dim);
            let mut h = DMatrix::zeros(dim, dim);
            objective.add_gradient(&x, t, &mut g);
            objective.add_hessian(&x, t, &mut h);
            for c in constraints {
                let gv = c.value(&x);
                let inv = -1.0 / gv;
                let mut gc = DVector::zeros(dim);
                c.add_gradient(&x, 1.0, &mut gc);
                g.axpy(inv, &gc, 1.0);
                // Gradients are sparse; the rank-one update only touches
                // their support.
                let support: Vec<usize> = (0..dim).filter(|&i| gc[i] != 0.0).collect();
                for &i in &support {
                    for &j in &support {
                        h[(i, j)] += inv * inv * gc[i] * gc[j];
                    }
                }
                c.add_hessian(&x, inv, &mut h);
            }
            let dx = match newton_direction(&h, &g) {
                Some(dx) => dx,
                None => return (x, steps, false),
            };
            let decrement = -g.dot(&dx);
            steps += 1;
            let f0 = merit(&x, t);
            centering += 1;
            if !(decrement > 1e-13 * (1.0 + f0.abs())) || centering > MAX_CENTERING {
                break;
            }
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-14 {
                let cand = &x + &dx * s;
                if merit(&cand, t) <= f0 - 0.25 * s * decrement {
                    x = cand;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if m == 0.0 || m / t <= options.rel_gap * (1.0 + objective.value(&x).abs()) {
            return (x, steps, true);
        }
        t *= options.mu;
    }
}

/// Newton steps allowed per centering problem.
const MAX_CENTERING: usize = 200;

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().iter().fold(0.0_f64, |a, &d| a.max(d.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..20 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = hr.cholesky() {
            let dx = -ch.solve(g);
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx);
            }
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    None
}
