#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use relaybf::channel::Scenario;
use relaybf::numerics::{ComplexMatrix, ComplexVector};

pub fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn unit_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let mut m = m.clone();
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= Complex64::new(n, 0.0);
    }
    m
}

/// Angle between two complex directions, ignoring common phase.
pub fn angle(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let a = a / Complex64::new(a.norm(), 0.0);
    let b = b / Complex64::new(b.norm(), 0.0);
    let dot = a.dotc(&b);
    let phase = if dot.norm() > 0.0 { dot / dot.norm() } else { Complex64::new(1.0, 0.0) };
    // chord between the phase-aligned unit vectors; accurate near zero
    2.0 * ((&a * phase - b).norm() / 2.0).min(1.0).asin()
}

/// Random symmetric-antenna instance with `k` users.
pub fn random_scenario(rng: &mut ChaCha8Rng, k: usize) -> Scenario {
    let m = k + rng.random_range(0..=1);
    let mut s = Scenario::symmetric(m, k, 1.0, 0.1, 10.0, 0.5, 0.5);
    s.gamma = (0..k).map(|_| db(rng.random_range(-3.0..6.0))).collect();
    s.sigma_r_sq = log_uniform(rng, 0.02, 0.3);
    s.sigma_k_sq = (0..k).map(|_| log_uniform(rng, 0.02, 0.3)).collect();
    s.p_b_max = rng.random_range(3.0..20.0);
    s.p_r_max = rng.random_range(3.0..20.0);
    s.d_bs_rs = rng.random_range(0.3..0.7);
    s.d_rs_ms = (0..k).map(|_| rng.random_range(0.3..0.8)).collect();
    s
}

/// Minimum of `f` over the box `[lo, hi]^n` in log coordinates by a grid
/// that repeatedly zooms onto its best point (window of +-6 cells, so
/// `points` should be well above 12). `f` returns `None` where
/// infeasible. Returns the best value and point.
pub fn grid_min(n: usize, lo: f64, hi: f64, points: usize, levels: usize, f: impl Fn(&[f64]) -> Option<f64>) -> Option<(f64, Vec<f64>)> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut center = vec![(llo + lhi) / 2.0; n];
    let mut half = (lhi - llo) / 2.0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..levels {
        let step = 2.0 * half / (points - 1) as f64;
        let mut idx = vec![0usize; n];
        let mut level_best: Option<(f64, Vec<f64>)> = None;
        loop {
            let y: Vec<f64> = (0..n).map(|i| (center[i] - half + step * idx[i] as f64).clamp(llo, lhi)).collect();
            let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
            if let Some(v) = f(&x) {
                if level_best.as_ref().is_none_or(|(b, _)| v < *b) {
                    level_best = Some((v, y));
                }
            }
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < points {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == n {
                    break;
                }
            }
            if d == n {
                break;
            }
        }
        let Some((v, y)) = level_best else { break };
        if best.as_ref().is_none_or(|(b, _)| v <= *b) {
            best = Some((v, y.clone()));
        }
        center = best.as_ref().unwrap().1.clone();
        half = 6.0 * step;
    }
    best.map(|(v, y)| (v, y.iter().map(|v| v.exp()).collect()))
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` for a predicate that is false
/// below some threshold and true above it.
pub fn bisect(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    if !pred(hi) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    if pred(a) {
        return Some(a);
    }
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
        if b / a - 1.0 < 1e-14 {
            break;
        }
    }
    Some(b)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Nelder-Mead minimum of `f` from `start`, restarted until a restart no
/// longer improves.
pub fn nelder_mead(start: &[f64], scale: f64, f: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let n = start.len();
    let mut best = (f(start), start.to_vec());
    let mut size = scale;
    for _ in 0..50 {
        let mut simplex: Vec<(f64, Vec<f64>)> = vec![best.clone()];
        for i in 0..n {
            let mut p = best.1.clone();
            p[i] += size;
            simplex.push((f(&p), p));
        }
        for _ in 0..4000 * n {
            simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
            let spread = simplex[n].0 - simplex[0].0;
            if spread.abs() <= 1e-15 * simplex[0].0.abs().max(1e-300) {
                break;
            }
            let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p.1[j]).sum::<f64>() / n as f64).collect();
            let toward = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n].1[j] - centroid[j])).collect() };
            let r = toward(-1.0);
            let fr = f(&r);
            if fr < simplex[0].0 {
                let e = toward(-2.0);
                let fe = f(&e);
                simplex[n] = if fe < fr { (fe, e) } else { (fr, r) };
            } else if fr < simplex[n - 1].0 {
                simplex[n] = (fr, r);
            } else {
                let c = if fr < simplex[n].0 { toward(-0.5) } else { toward(0.5) };
                let fc = f(&c);
                if fc < simplex[n].0.min(fr) {
                    simplex[n] = (fc, c);
                } else {
                    let low = simplex[0].1.clone();
                    for p in simplex.iter_mut().skip(1) {
                        p.1 = (0..n).map(|j| low[j] + 0.5 * (p.1[j] - low[j])).collect();
                        p.0 = f(&p.1);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let improved = simplex[0].0 < best.0 - 1e-15 * best.0.abs();
        if simplex[0].0 <= best.0 {
            best = simplex[0].clone();
        }
        if !improved && size < 1e-6 {
            break;
        }
        size = (size * 0.1).max(1e-9);
    }
    best
}

/// Minimum of `obj(x)` subject to `g(x) <= 1` for every entry of `cons(x)`,
/// for problems convex in `y = ln x`. Log-barrier with a shrinking weight,
/// each stage solved by Nelder-Mead; `start` must be strictly feasible.
pub fn barrier_min(start: &[f64], obj: impl Fn(&[f64]) -> f64, cons: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let phi = |y: &[f64], mu: f64| -> f64 {
        let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        let mut v = obj(&x).ln();
        for g in cons(&x) {
            if g >= 1.0 {
                return f64::INFINITY;
            }
            v -= mu * (-g.ln()).ln();
        }
        v
    };
    let mut y: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    let mut mu = 1e-2;
    while mu > 1e-13 {
        y = nelder_mead(&y, 0.05, |y| phi(y, mu)).1;
        mu *= 0.1;
    }
    obj(&y.iter().map(|v| v.exp()).collect::<Vec<_>>())
}

/// Top generalized eigenvector of `(rs, rn)` by whitening with `rn^{-1/2}`
/// and a dense Hermitian eigendecomposition.
pub fn dense_gen_eigvec(rs: &ComplexMatrix, rn: &ComplexMatrix) -> ComplexVector {
    let eig = rn.clone().symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * ComplexMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(1.0 / l.sqrt(), 0.0)))
        * eig.eigenvectors.adjoint();
    let sym = &inv_sqrt * rs * &inv_sqrt;
    let sym = (&sym + sym.adjoint()) * Complex64::new(0.5, 0.0);
    let se = sym.symmetric_eigen();
    let v = &inv_sqrt * se.eigenvectors.column(se.eigenvalues.imax());
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

pub fn outer(h: &ComplexVector, c: f64) -> ComplexMatrix {
    h * h.adjoint() * Complex64::new(c, 0.0)
}
