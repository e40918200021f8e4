//! Relay-free multi-antenna broadcast: max-min SINR balancing through the
//! virtual uplink with unit-noise channels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, NumericsError, Result};
use crate::numerics::{perron, solve_linear, ComplexMatrix, RealMatrix};
use crate::report::{converged, INNER_CAP};

use super::kernels::gain_matrix;

/// MMSE receivers `(I + sum_{i != k} q_i g_i g_i^H)^{-1} g_k`, unit norm.
pub fn broadcast_beamformers(gn: &ComplexMatrix, q: &[f64]) -> Result<ComplexMatrix> {
    let (m, k) = gn.shape();
    let mut a = ComplexMatrix::zeros(m, k);
    for user in 0..k {
        let mut r = ComplexMatrix::identity(m, m);
        for i in (0..k).filter(|&i| i != user) {
            let g = gn.column(i);
            r += (g * g.adjoint()) * Complex64::new(q[i], 0.0);
        }
        let x = solve_linear(&r, &gn.column(user).into_owned())?;
        let norm = x.norm();
        a.set_column(user, &(x / Complex64::new(norm, 0.0)));
    }
    Ok(a)
}

/// Balanced level and uplink powers summing to `p_max`.
pub fn broadcast_balance(gains: &RealMatrix, gamma: &[f64], p_max: f64) -> Result<(f64, Vec<f64>)> {
    let k = gamma.len();
    if (0..k).any(|j| gains[(j, j)] <= 0.0) {
        return Err(Error::DegenerateChannel("zero direct gain".into()));
    }
    // q_j = C d_j (sum_{i != j} G_ij q_i + 1),  d_j = gamma_j / G_jj
    let d = DVector::from_iterator(k, (0..k).map(|j| gamma[j] / gains[(j, j)]));
    let mut ext = DMatrix::zeros(k + 1, k + 1);
    for j in 0..k {
        for i in (0..k).filter(|&i| i != j) {
            ext[(j, i)] = d[j] * gains[(i, j)];
        }
        ext[(j, k)] = d[j];
    }
    for i in 0..k {
        ext[(k, i)] = (0..k).map(|j| ext[(j, i)]).sum::<f64>() / p_max;
    }
    ext[(k, k)] = d.sum() / p_max;
    let eig = perron(&ext)?;
    let last = eig.vector[k];
    if !(last > 0.0) {
        return Err(NumericsError::Failure("no positive balancing vector".into()).into());
    }
    Ok((1.0 / eig.value, (0..k).map(|i| eig.vector[i] / last).collect()))
}

#[derive(Debug, Clone)]
pub struct BroadcastOutcome {
    pub a: ComplexMatrix,
    pub q: Vec<f64>,
    pub balanced_level: f64,
    pub iterations: usize,
}

/// Alternates receiver updates and balancing until the level settles.
pub fn broadcast_balancing(gn: &ComplexMatrix, gamma: &[f64], p_max: f64, q0: &[f64]) -> Result<BroadcastOutcome> {
    let mut q = q0.to_vec();
    let mut prev = f64::NAN;
    let mut iterations = 0;
    loop {
        let a = broadcast_beamformers(gn, &q)?;
        let (c, q_new) = broadcast_balance(&gain_matrix(gn, &a), gamma, p_max)?;
        iterations += 1;
        q = q_new;
        if converged(prev, c) || iterations >= INNER_CAP {
            return Ok(BroadcastOutcome { a, q, balanced_level: c, iterations });
        }
        prev = c;
    }
}
