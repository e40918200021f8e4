//! Log-barrier interior-point method on the convex (log-variable) form of a GP.

use nalgebra::{DMatrix, DVector};

use super::model::{GpProblem, Monomial, Posynomial};
use crate::error::{Error, Result};

/// Variables live in `[X_MIN, X_MAX]`.
pub const X_MIN: f64 = 1e-12;
pub const X_MAX: f64 = 1e12;
/// Phase-1 slack tolerance: the problem is infeasible if the best achievable
/// max constraint value exceeds `1 + FEAS_TOL`.
pub const FEAS_TOL: f64 = 1e-8;
pub const GAP_TOL: f64 = 1e-8;
pub const NEWTON_CAP: usize = 500;
pub const OBJECTIVE_FLOOR: f64 = 1e-12;

const ALPHA: f64 = 0.3;
const BETA: f64 = 0.8;
const MU: f64 = 10.0;
const T0: f64 = 1.0;
const CENTERING_TOL: f64 = 1e-10;
const BOUND_MULTIPLIER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

impl std::fmt::Display for GpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GpStatus::Optimal => "optimal",
            GpStatus::Infeasible => "infeasible",
            GpStatus::Unbounded => "unbounded",
            GpStatus::MaxIter => "max-iter",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct GpSolution {
    pub status: GpStatus,
    pub variables: Vec<f64>,
    pub objective_value: f64,
    pub newton_iterations: usize,
    /// Indices of variables that ended at the implicit box bounds.
    pub at_bound: Vec<usize>,
}

impl GpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == GpStatus::Optimal
    }

    /// Returns the solution if optimal, otherwise a `Gp` error naming the status.
    pub fn into_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Gp(self.status.to_string()))
        }
    }
}

/// `log sum_j exp(a_j . y + b_j)`.
#[derive(Debug, Clone)]
struct Lse {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Lse {
    fn from_posynomial(p: &Posynomial, n: usize) -> Self {
        let terms = p.terms();
        let a = DMatrix::from_fn(terms.len(), n, |i, j| terms[i].exponents.get(j).copied().unwrap_or(0.0));
        let b = DVector::from_iterator(terms.len(), terms.iter().map(|t| t.coefficient.ln()));
        Self { a, b }
    }

    fn linear(row: DVector<f64>, b: f64) -> Self {
        Self { a: DMatrix::from_row_slice(1, row.len(), row.as_slice()), b: DVector::from_element(1, b) }
    }

    fn value(&self, y: &DVector<f64>) -> f64 {
        let z = &self.a * y + &self.b;
        if z.len() == 1 {
            return z[0];
        }
        let m = z.max();
        m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    /// Value, gradient and Hessian.
    fn derivs(&self, y: &DVector<f64>) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let z = &self.a * y + &self.b;
        if z.len() == 1 {
            return (z[0], self.a.row(0).transpose(), None);
        }
        let m = z.max();
        let e = z.map(|v| (v - m).exp());
        let s = e.sum();
        let w = e / s;
        let g = self.a.transpose() * &w;
        let aw = DMatrix::from_fn(self.a.nrows(), self.a.ncols(), |i, j| self.a[(i, j)] * w[i]);
        let h = self.a.transpose() * aw - &g * g.transpose();
        (m + s.ln(), g, Some(h))
    }
}

struct Barrier<'a> {
    c: &'a DVector<f64>,
    cons: &'a [Lse],
}

impl Barrier<'_> {
    /// Barrier objective, or `None` outside the strict interior.
    fn value(&self, y: &DVector<f64>, t: f64) -> Option<f64> {
        let mut acc = t * self.c.dot(y);
        for c in self.cons {
            let f = c.value(y);
            if !(f < 0.0) {
                return None;
            }
            acc -= (-f).ln();
        }
        Some(acc)
    }

    fn grad_hess(&self, y: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = y.len();
        let mut g = self.c * t;
        let mut h = DMatrix::zeros(n, n);
        for c in self.cons {
            let (f, gf, hf) = c.derivs(y);
            let inv = 1.0 / (-f);
            g.axpy(inv, &gf, 1.0);
            h.ger(inv * inv, &gf, &gf, 1.0);
            if let Some(hf) = hf {
                h += hf * inv;
            }
        }
        (g, h)
    }
}

struct BarrierRun {
    y: DVector<f64>,
    t: f64,
    newton: usize,
    converged: bool,
    stopped_early: bool,
}

fn newton_direction(g: &DVector<f64>, h: DMatrix<f64>) -> Option<DVector<f64>> {
    let n = g.len();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut hr = h.clone();
        if reg > 0.0 {
            for i in 0..n {
                hr[(i, i)] += reg;
            }
        }
        if let Some(ch) = hr.cholesky() {
            let d = -ch.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-12 * scale } else { reg * 100.0 };
    }
    None
}

/// Minimizes `c . y` over the interior of `cons` starting at the strictly
/// feasible `y0`.
fn barrier_method(
    c: &DVector<f64>,
    cons: &[Lse],
    y0: DVector<f64>,
    cap: usize,
    stop: impl Fn(&DVector<f64>) -> bool,
) -> BarrierRun {
    let bar = Barrier { c, cons };
    let m = cons.len().max(1) as f64;
    let mut y = y0;
    let mut t = T0;
    let mut newton = 0;
    loop {
        // centering
        loop {
            if stop(&y) {
                return BarrierRun { y, t, newton, converged: false, stopped_early: true };
            }
            if newton >= cap {
                return BarrierRun { y, t, newton, converged: false, stopped_early: false };
            }
            let (g, h) = bar.grad_hess(&y, t);
            let Some(dy) = newton_direction(&g, h) else { break };
            let decrement = -g.dot(&dy);
            newton += 1;
            if decrement / 2.0 <= CENTERING_TOL {
                break;
            }
            let f0 = bar.value(&y, t).unwrap_or(f64::INFINITY);
            let slope = g.dot(&dy);
            let mut s = 1.0;
            let mut accepted = false;
            while s > 1e-16 {
                let cand = &y + &dy * s;
                if let Some(f1) = bar.value(&cand, t) {
                    if f1 <= f0 + ALPHA * s * slope {
                        y = cand;
                        // progress below rounding level: treat as centered
                        accepted = f0 - f1 > 64.0 * f64::EPSILON * f0.abs().max(1.0);
                        break;
                    }
                }
                s *= BETA;
            }
            if !accepted {
                break;
            }
        }
        if m / t < GAP_TOL {
            return BarrierRun { y, t, newton, converged: true, stopped_early: false };
        }
        t *= MU;
    }
}

fn box_constraints(n: usize, dim: usize) -> Vec<Lse> {
    let (lo, hi) = (X_MIN.ln(), X_MAX.ln());
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        let mut row = DVector::zeros(dim);
        row[j] = 1.0;
        out.push(Lse::linear(row.clone(), -hi)); // y_j - hi <= 0
        out.push(Lse::linear(-row, lo)); // lo - y_j <= 0
    }
    out
}

/// Solves a geometric program in standard form.
pub fn solve(prob: &GpProblem) -> Result<GpSolution> {
    prob.validate()?;
    let n = prob.num_vars;
    let mut user: Vec<Lse> = prob.constraints.iter().map(|p| Lse::from_posynomial(p, n)).collect();
    let y0 = DVector::zeros(n);
    let mut total_newton = 0;

    let start_max = user.iter().map(|c| c.value(&y0)).fold(f64::NEG_INFINITY, f64::max);
    let mut y_start = y0.clone();
    if start_max >= 0.0 {
        // Phase 1 over (y, z): minimize z s.t. f_i(y) <= z, box on y, z >= -1.
        let dim = n + 1;
        let mut cons: Vec<Lse> = user
            .iter()
            .map(|c| {
                let mut a = c.a.clone().insert_column(n, -1.0);
                a.column_mut(n).fill(-1.0);
                Lse { a, b: c.b.clone() }
            })
            .collect();
        cons.extend(box_constraints(n, dim));
        let mut zrow = DVector::zeros(dim);
        zrow[n] = -1.0;
        cons.push(Lse::linear(zrow, -1.0));
        let mut c = DVector::zeros(dim);
        c[n] = 1.0;
        let mut init = DVector::zeros(dim);
        init[n] = start_max + 1.0;
        let run = barrier_method(&c, &cons, init, NEWTON_CAP, |v| v[n] < 0.0);
        total_newton += run.newton;
        let z = run.y[n];
        let y = run.y.rows(0, n).into_owned();
        if !run.stopped_early {
            if !run.converged && z >= 0.0 {
                return Ok(finish(prob, GpStatus::MaxIter, &y, total_newton, vec![]));
            }
            if z > FEAS_TOL.ln_1p() {
                return Ok(finish(prob, GpStatus::Infeasible, &y, total_newton, vec![]));
            }
            // Marginally feasible: relax by a sub-tolerance slack so that a
            // strict interior exists.
            let s = (z.max(0.0) + FEAS_TOL.ln_1p()) / 2.0;
            for u in &mut user {
                u.b.add_scalar_mut(-s);
            }
        }
        y_start = y;
    }

    let mut cons = user;
    cons.extend(box_constraints(n, n));
    let c = DVector::from_column_slice(&prob.objective.exponents);
    let run = barrier_method(&c, &cons, y_start, NEWTON_CAP, |_| false);
    total_newton += run.newton;

    let (lo, hi) = (X_MIN.ln(), X_MAX.ln());
    let at_bound: Vec<usize> =
        (0..n).filter(|&j| run.y[j] - lo < 1e-3 || hi - run.y[j] < 1e-3).collect();
    if !run.converged {
        return Ok(finish(prob, GpStatus::MaxIter, &run.y, total_newton, at_bound));
    }
    let bound_active = (0..n).any(|j| {
        let slack = (run.y[j] - lo).min(hi - run.y[j]);
        1.0 / (run.t * slack) > BOUND_MULTIPLIER_TOL
    });
    let sol = finish(prob, GpStatus::Optimal, &run.y, total_newton, at_bound);
    if sol.objective_value <= OBJECTIVE_FLOOR || bound_active {
        return Ok(GpSolution { status: GpStatus::Unbounded, ..sol });
    }
    Ok(sol)
}

fn finish(prob: &GpProblem, status: GpStatus, y: &DVector<f64>, newton: usize, at_bound: Vec<usize>) -> GpSolution {
    let variables: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let objective_value = eval_monomial_log(&prob.objective, y).exp();
    GpSolution { status, variables, objective_value, newton_iterations: newton, at_bound }
}

fn eval_monomial_log(m: &Monomial, y: &DVector<f64>) -> f64 {
    m.coefficient.ln() + m.exponents.iter().zip(y.iter()).map(|(a, v)| a * v).sum::<f64>()
}
