//! Deadline-feasible starting points.
//!
//! With bandwidth fraction `x` and compute fraction `y`, AP `m` can serve
//! at most `h(x, y) = T / (P / x + Q / y)` of user `n` in time, where
//! `P = t_b / B` and `Q = t_c / C`. `h` is concave, so maximizing the
//! smallest servable column sum `sum_m min(1, h_mn)` under the capacity
//! rows is a convex program. A maximum of at least 1 yields a feasible
//! clustering by normalizing each column.

use nalgebra::{DMatrix, DVector};

use crate::energetics::Allocation;
use crate::error::{Error, Result};
use crate::optimizer::convex::{Affine, ConvexProgram, SmoothConvex, SolverOptions};
use crate::optimizer::subproblem::ApModel;

/// Deadlines are tightened by this fraction so that dropping dust shares
/// afterwards cannot push a user late.
const DEADLINE_MARGIN: f64 = 1e-2;

/// Whether `(a, b, c)` meets every active deadline within each AP's capacity.
pub fn deadlines_met(models: &[ApModel], alloc: &Allocation, rel_tol: f64) -> bool {
    models.iter().enumerate().all(|(m, model)| {
        let row_b: f64 = alloc.b.row(m).sum();
        let row_c: f64 = alloc.c.row(m).sum();
        row_b <= model.bandwidth * (1.0 + rel_tol)
            && row_c <= model.compute * (1.0 + rel_tol)
            && (0..model.num_users()).all(|n| {
                let a = alloc.a[(m, n)];
                a <= 0.0
                    || a * (model.t_b[n] / alloc.b[(m, n)] + model.t_c[n] / alloc.c[(m, n)])
                        <= model.deadline[n] * (1.0 + rel_tol)
            })
    })
}

/// `s - T x y / (P y + Q x)` over the variables `(s, x, y)`.
struct ShareCap {
    s: usize,
    x: usize,
    y: usize,
    t: f64,
    p: f64,
    q: f64,
}

impl ShareCap {
    fn parts(&self, v: &DVector<f64>) -> (f64, f64, f64) {
        let (x, y) = (v[self.x], v[self.y]);
        (x, y, self.p * y + self.q * x)
    }
}

impl SmoothConvex for ShareCap {
    fn value(&self, v: &DVector<f64>) -> f64 {
        let (x, y, d) = self.parts(v);
        v[self.s] - self.t * x * y / d
    }

    fn add_gradient(&self, v: &DVector<f64>, w: f64, g: &mut DVector<f64>) {
        let (x, y, d) = self.parts(v);
        g[self.s] += w;
        g[self.x] -= w * self.t * self.p * y * y / (d * d);
        g[self.y] -= w * self.t * self.q * x * x / (d * d);
    }

    fn add_hessian(&self, v: &DVector<f64>, w: f64, h: &mut DMatrix<f64>) {
        let (x, y, d) = self.parts(v);
        let k = w * 2.0 * self.t * self.p * self.q / (d * d * d);
        h[(self.x, self.x)] += k * y * y;
        h[(self.y, self.y)] += k * x * x;
        h[(self.x, self.y)] -= k * x * y;
        h[(self.y, self.x)] -= k * x * y;
    }
}

/// A deadline-feasible allocation, or an error when the scenario has none.
/// Every pair keeps at least the resource floor of the models.
pub fn feasible_start(models: &[ApModel]) -> Result<Allocation> {
    let mc = models.len();
    let nc = models.first().map_or(0, |m| m.num_users());
    let dim = 3 * mc * nc + 1;
    let worst = dim - 1;
    let idx = |m: usize, n: usize| 3 * (m * nc + n);
    let affine = |terms: &[(usize, f64)], b: f64| {
        let mut a = DVector::zeros(dim);
        for &(k, w) in terms {
            a[k] += w;
        }
        Box::new(Affine { a, b }) as Box<dyn SmoothConvex>
    };

    let mut constraints: Vec<Box<dyn SmoothConvex>> = Vec::new();
    let mut v = DVector::zeros(dim);
    let split = 1.0 / (nc + 1) as f64;
    for (m, model) in models.iter().enumerate() {
        let floor_x = model.beta / model.bandwidth;
        let floor_y = model.beta / model.compute;
        for n in 0..nc {
            let k = idx(m, n);
            let cap = ShareCap {
                s: k,
                x: k + 1,
                y: k + 2,
                t: model.deadline[n] * (1.0 - DEADLINE_MARGIN),
                p: model.t_b[n] / model.bandwidth,
                q: model.t_c[n] / model.compute,
            };
            v[k + 1] = split;
            v[k + 2] = split;
            let h = -(cap.value(&v) - v[k]);
            v[k] = 0.5 * h.min(1.0);
            constraints.push(Box::new(cap));
            constraints.push(affine(&[(k, -1.0)], 0.0));
            constraints.push(affine(&[(k, 1.0)], -1.0));
            constraints.push(affine(&[(k + 1, -1.0)], floor_x));
            constraints.push(affine(&[(k + 2, -1.0)], floor_y));
        }
        let xs: Vec<(usize, f64)> = (0..nc).map(|n| (idx(m, n) + 1, 1.0)).collect();
        let ys: Vec<(usize, f64)> = (0..nc).map(|n| (idx(m, n) + 2, 1.0)).collect();
        constraints.push(affine(&xs, -1.0));
        constraints.push(affine(&ys, -1.0));
    }
    // worst <= sum_m s_mn for every user.
    let mut lowest = f64::INFINITY;
    for n in 0..nc {
        let mut terms = vec![(worst, 1.0)];
        terms.extend((0..mc).map(|m| (idx(m, n), -1.0)));
        constraints.push(affine(&terms, 0.0));
        lowest = lowest.min((0..mc).map(|m| v[idx(m, n)]).sum());
    }
    v[worst] = 0.5 * lowest;

    let program = ConvexProgram {
        dim,
        objective: affine(&[(worst, -1.0)], 0.0),
        constraints,
    };
    let options = SolverOptions {
        rel_gap: 1e-6,
        ..SolverOptions::default()
    };
    let v = program.solve(&v, &options)?.x;
    if v[worst] < 1.0 {
        return Err(Error::InfeasibleDecision(format!(
            "no clustering meets every deadline (at most {:.4} of some user can be served)",
            v[worst]
        )));
    }

    let mut alloc = Allocation {
        a: DMatrix::from_fn(mc, nc, |m, n| v[idx(m, n)]),
        b: DMatrix::from_fn(mc, nc, |m, n| models[m].bandwidth * v[idx(m, n) + 1]),
        c: DMatrix::from_fn(mc, nc, |m, n| models[m].compute * v[idx(m, n) + 2]),
    };
    for n in 0..nc {
        let col: f64 = alloc.a.column(n).sum();
        alloc.a.column_mut(n).scale_mut(1.0 / col);
    }
    Ok(alloc)
}
