//! Dense complex linear-algebra kernels.
//!
//! Thin wrappers over `nalgebra` with the conventions the relay schemes need:
//! singular values sorted descending, a closed-form solver for rank-one
//! generalized eigenproblems, and a Perron eigenpair by power iteration with
//! Collatz-Wielandt bounds as the stopping test.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::NumericsError;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;
pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;

/// Condition-number threshold above which a matrix is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Relative tolerance on the Perron value.
pub const PERRON_TOL: f64 = 1e-12;
/// Iteration cap for the Perron power iteration.
pub const PERRON_MAX_ITER: usize = 10_000;

/// An eigenvalue together with a unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigResult<T: nalgebra::Scalar> {
    pub value: f64,
    pub vector: DVector<T>,
}

/// Thin singular value decomposition `M = U diag(sigma) V^H`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

pub(crate) fn check_finite<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    what: &str,
) -> Result<(), NumericsError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(NumericsError::InvalidInput(format!("{what} is empty")));
    }
    if m.iter().any(|x| !x.clone().real().is_finite() || !x.clone().imaginary().is_finite()) {
        return Err(NumericsError::InvalidInput(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_square<T: nalgebra::Scalar>(m: &DMatrix<T>, what: &str) -> Result<(), NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("square {what}"),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Thin SVD with singular values in descending order.
///
/// `U` is `rows x r` and `V` is `cols x r` with `r = min(rows, cols)`; both have
/// orthonormal columns (unitary when `M` is square).
pub fn svd(m: &ComplexMatrix) -> Result<Svd, NumericsError> {
    check_finite(m, "matrix")?;
    let dec = m.clone().svd(true, true);
    let u = dec.u.ok_or_else(|| NumericsError::Failure("svd did not produce U".into()))?;
    let v_t = dec.v_t.ok_or_else(|| NumericsError::Failure("svd did not produce V".into()))?;
    let r = dec.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));

    let sigma = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = ComplexMatrix::from_fn(m.nrows(), r, |i, j| u[(i, order[j])]);
    let v = ComplexMatrix::from_fn(m.ncols(), r, |i, j| v_t[(order[j], i)].conj());
    Ok(Svd { u, sigma, v })
}

/// Condition number `sigma_max / sigma_min` of a square matrix.
pub fn condition_number<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Dominant generalized eigenpair of `(c h h^H, rn)` for Hermitian positive
/// definite `rn`.
///
/// The numerator has rank one, so the maximizer of the Rayleigh ratio is
/// `rn^{-1} h` and the eigenvalue is `c h^H rn^{-1} h`.
pub fn dominant_gen_eigvec(
    h: &ComplexVector,
    c: f64,
    rn: &ComplexMatrix,
) -> Result<EigResult<Complex64>, NumericsError> {
    check_square(rn, "noise covariance")?;
    check_finite(rn, "noise covariance")?;
    if rn.nrows() != h.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("vector of length {}", rn.nrows()),
            actual: format!("length {}", h.len()),
        });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(NumericsError::InvalidInput(format!("scale must be positive, got {c}")));
    }
    if h.norm() == 0.0 || !h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(NumericsError::InvalidInput("signal vector must be nonzero and finite".into()));
    }
    let cond = condition_number(rn);
    if cond > CONDITION_LIMIT {
        return Err(NumericsError::IllConditioned { condition: cond });
    }
    let chol = rn
        .clone()
        .cholesky()
        .ok_or_else(|| NumericsError::InvalidInput("noise covariance is not positive definite".into()))?;
    let x = chol.solve(h);
    let value = c * h.dotc(&x).re;
    let norm = x.norm();
    Ok(EigResult { value, vector: x / Complex64::new(norm, 0.0) })
}

/// Power steps before switching to shifted inverse iteration.
const POWER_STEPS: usize = 100;

/// Perron eigenpair of an entrywise nonnegative square matrix.
///
/// Power iteration from the all-ones vector, switching to inverse iteration
/// shifted to the upper Collatz-Wielandt bound when power steps are slow
/// (`(mu I - L)^{-1}` is nonnegative for `mu > rho`, so iterates stay
/// positive). Stops once `min_i (Lv)_i/v_i <= rho <= max_i (Lv)_i/v_i` agree
/// to `PERRON_TOL` relative, or (for vectors with zero entries) once the
/// residual is below the same tolerance.
pub fn perron(l: &RealMatrix) -> Result<EigResult<f64>, NumericsError> {
    check_square(l, "coupling matrix")?;
    check_finite(l, "coupling matrix")?;
    if l.iter().any(|&x| x < 0.0) {
        return Err(NumericsError::InvalidInput("matrix has negative entries".into()));
    }
    let n = l.nrows();
    let mut v = RealVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut prev = f64::NAN;
    let mut upper = f64::NAN;
    for iter in 0..PERRON_MAX_ITER {
        if iter >= POWER_STEPS && upper.is_finite() && upper > 0.0 {
            let shift = upper * (1.0 + 1e-9);
            let a = RealMatrix::identity(n, n) * shift - l;
            if let Some(x) = a.lu().solve(&v) {
                let norm = x.norm();
                if norm.is_finite() && norm > 0.0 && x.iter().all(|&e| e >= 0.0) {
                    v = x / norm;
                }
            }
        }
        let w = l * &v;
        let norm = w.norm();
        if norm == 0.0 {
            // nilpotent on the start vector: spectral radius is zero
            return Ok(EigResult { value: 0.0, vector: v });
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        let mut all_positive = true;
        for i in 0..n {
            if v[i] > 0.0 {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            } else {
                all_positive = false;
            }
        }
        let rayleigh = v.dot(&w);
        let converged = if all_positive {
            hi - lo <= PERRON_TOL * hi
        } else {
            (&w - &v * rayleigh).norm() <= PERRON_TOL * rayleigh.abs().max(f64::MIN_POSITIVE)
                && (rayleigh - prev).abs() <= PERRON_TOL * rayleigh.abs()
        };
        prev = rayleigh;
        upper = if all_positive { hi } else { f64::NAN };
        v = w / norm;
        if converged {
            let value = if all_positive { 0.5 * (lo + hi) } else { rayleigh };
            return Ok(EigResult { value, vector: v });
        }
    }
    Err(NumericsError::NoConvergence { iterations: PERRON_MAX_ITER })
}

/// Largest eigenvalue modulus, from the complex Schur form.
pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64, NumericsError> {
    check_square(m, "matrix")?;
    check_finite(m, "matrix")?;
    let eig = m
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| NumericsError::Failure("schur form is not triangular".into()))?;
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Convenience for real matrices.
pub fn spectral_radius_real(m: &RealMatrix) -> Result<f64, NumericsError> {
    spectral_radius(&to_complex(m))
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Solves `M x = b` by partial-pivot LU after a condition check.
pub fn solve_linear<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    b: &DVector<T>,
) -> Result<DVector<T>, NumericsError> {
    check_square(m, "system matrix")?;
    check_finite(m, "system matrix")?;
    if b.len() != m.nrows() {
        return Err(NumericsError::DimensionMismatch {
            expected: format!("rhs of length {}", m.nrows()),
            actual: format!("length {}", b.len()),
        });
    }
    let cond = condition_number(m);
    if cond > CONDITION_LIMIT {
        return Err(NumericsError::IllConditioned { condition: cond });
    }
    m.clone()
        .lu()
        .solve(b)
        .ok_or(NumericsError::IllConditioned { condition: f64::INFINITY })
}
