//! Power control on coupled links of the form `q = C (M q + d)`.
//!
//! `M` is the nonnegative coupling matrix and `d` the normalized noise
//! vector. Balancing finds the largest common level `C` reachable with
//! `sum q = p_max`; minimization solves `q = M q + d` directly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, NumericsError, Result};
use crate::numerics::{perron, solve_linear, spectral_radius_real, RealMatrix};

/// Builds the `(K+1) x (K+1)` extended coupling matrix.
pub fn extended_coupling(m: &RealMatrix, d: &[f64], p_max: f64) -> RealMatrix {
    let k = d.len();
    let mut ext = DMatrix::zeros(k + 1, k + 1);
    ext.view_mut((0, 0), (k, k)).copy_from(m);
    for i in 0..k {
        ext[(i, k)] = d[i];
    }
    for j in 0..k {
        ext[(k, j)] = m.column(j).sum() / p_max;
    }
    ext[(k, k)] = d.iter().sum::<f64>() / p_max;
    ext
}

/// Returns the balanced level and the power vector meeting `sum q = p_max`.
pub fn balance(m: &RealMatrix, d: &[f64], p_max: f64) -> Result<(f64, Vec<f64>)> {
    let k = d.len();
    let eig = perron(&extended_coupling(m, d, p_max))?;
    let last = eig.vector[k];
    if !(eig.value > 0.0) || !(last > 0.0) {
        return Err(NumericsError::Failure("extended coupling matrix has no positive eigenvector".into()).into());
    }
    let q: Vec<f64> = (0..k).map(|i| (eig.vector[i] / last).max(0.0)).collect();
    Ok((1.0 / eig.value, q))
}

/// Solves `(I - M) q = d`, requiring spectral radius of `M` below one.
pub fn min_power(m: &RealMatrix, d: &[f64]) -> Result<Vec<f64>> {
    let k = d.len();
    let rho = spectral_radius_real(m)?;
    if rho >= 1.0 {
        return Err(Error::InfeasibleAllocation { spectral_radius: rho });
    }
    let lhs = DMatrix::identity(k, k) - m;
    let q = solve_linear(&lhs, &DVector::from_column_slice(d))?;
    if q.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InfeasibleAllocation { spectral_radius: rho });
    }
    Ok(q.iter().copied().collect())
}

/// Achieved level `q_k / (M q + d)_k` of each link.
pub fn levels(m: &RealMatrix, d: &[f64], q: &[f64]) -> Vec<f64> {
    let qv = DVector::from_column_slice(q);
    let interference = m * &qv;
    (0..d.len()).map(|k| q[k] / (interference[k] + d[k])).collect()
}
