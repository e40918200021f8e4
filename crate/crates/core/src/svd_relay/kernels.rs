//! Per-stream relay beamforming and power control on noise-normalized
//! second-hop channels `g_k / sigma_k`.
//!
//! `alpha[k]` is the SINR the stream already carries into the relay; an
//! infinite value means a noiseless stream (no relay noise to forward).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{dominant_gen_eigvec, ComplexMatrix, ComplexVector, RealMatrix};
use crate::power;

/// Degenerate-link threshold on `|g_hat_kk|`.
pub const MIN_GAIN: f64 = 1e-12;

/// `alpha / (1 + alpha)`.
pub fn signal_share(alpha: f64) -> f64 {
    if alpha.is_infinite() {
        1.0
    } else {
        alpha / (1.0 + alpha)
    }
}

/// `1 / (1 + alpha)`: the forwarded-noise share of a unit-power stream.
pub fn noise_share(alpha: f64) -> f64 {
    if alpha.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + alpha)
    }
}

/// Columns `g_k / sigma_k`.
pub fn normalized_channels(g: &[ComplexVector], sigma_k_sq: &[f64]) -> ComplexMatrix {
    let cols: Vec<ComplexVector> =
        g.iter().zip(sigma_k_sq).map(|(g, s)| g / Complex64::new(s.sqrt(), 0.0)).collect();
    ComplexMatrix::from_columns(&cols)
}

/// Relay transmit beamformers from the virtual uplink with powers `q_r`.
pub fn svd_beamformers(gn: &ComplexMatrix, alpha: &[f64], q_r: &[f64]) -> Result<ComplexMatrix> {
    let (m, k) = gn.shape();
    let one = Complex64::new(1.0, 0.0);
    let mut a = ComplexMatrix::zeros(m, k);
    for user in 0..k {
        let g_k = gn.column(user).into_owned();
        let mut rn = ComplexMatrix::identity(m, m);
        for i in (0..k).filter(|&i| i != user) {
            let g_i = gn.column(i).into_owned();
            rn.gerc(Complex64::new(q_r[i], 0.0), &g_i, &g_i, one);
        }
        let own = noise_share(alpha[user]) * q_r[user];
        if own > 0.0 {
            rn.gerc(Complex64::new(own, 0.0), &g_k, &g_k, one);
        }
        let c = signal_share(alpha[user]) * q_r[user];
        let eig = dominant_gen_eigvec(&g_k, c, &rn)?;
        a.set_column(user, &eig.vector);
    }
    Ok(a)
}

/// `gains[(k, i)] = |g_k^H a_i|^2` on normalized channels.
pub fn gain_matrix(gn: &ComplexMatrix, a: &ComplexMatrix) -> RealMatrix {
    (gn.adjoint() * a).map(|z| z.norm_sqr())
}

/// Second-hop quantities for fixed relay beamformers.
#[derive(Debug, Clone)]
pub struct SvdEffectiveChannel {
    /// `g_hat[(k, i)] = g_k^H a_i / sigma_k`.
    pub g_hat: ComplexMatrix,
    pub gains: RealMatrix,
    pub alpha: Vec<f64>,
    pub chi: Vec<f64>,
}

impl SvdEffectiveChannel {
    pub fn new(gn: &ComplexMatrix, a: &ComplexMatrix, alpha: &[f64]) -> Self {
        let g_hat = gn.adjoint() * a;
        let gains = g_hat.map(|z| z.norm_sqr());
        let chi = chi(&gains);
        Self { g_hat, gains, alpha: alpha.to_vec(), chi }
    }
}

fn check_direct(gains: &RealMatrix) -> Result<()> {
    for k in 0..gains.nrows() {
        if gains[(k, k)].sqrt() < MIN_GAIN {
            return Err(Error::DegenerateChannel(format!("stream {k} is orthogonal to its beam")));
        }
    }
    Ok(())
}

/// `D`, `E` diagonals and the off-diagonal coupling `Psi`.
fn coupling(gains: &RealMatrix, alpha: &[f64], gamma: &[f64]) -> Result<(Vec<f64>, Vec<f64>, RealMatrix)> {
    check_direct(gains)?;
    let k = gains.nrows();
    let d = (0..k).map(|j| gamma[j] / (signal_share(alpha[j]) * gains[(j, j)])).collect();
    let e = (0..k).map(|j| gamma[j] * noise_share(alpha[j]) / signal_share(alpha[j])).collect();
    let psi = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { gains[(i, j)] });
    Ok((d, e, psi))
}

/// `D Psi' + E` for `Psi'` either `Psi^T` (uplink) or `Psi` (downlink).
fn system(d: &[f64], e: &[f64], psi: RealMatrix) -> RealMatrix {
    let mut m = psi;
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= d[i];
    }
    for i in 0..d.len() {
        m[(i, i)] += e[i];
    }
    m
}

pub fn svd_uplink_sinr(gains: &RealMatrix, alpha: &[f64], q: &[f64]) -> Vec<f64> {
    let k = q.len();
    (0..k)
        .map(|j| {
            let cross: f64 = (0..k).filter(|&i| i != j).map(|i| q[i] * gains[(i, j)]).sum();
            let own = q[j] * gains[(j, j)];
            signal_share(alpha[j]) * own / (cross + noise_share(alpha[j]) * own + 1.0)
        })
        .collect()
}

pub fn svd_downlink_sinr(gains: &RealMatrix, alpha: &[f64], p_r: &[f64]) -> Vec<f64> {
    let k = p_r.len();
    (0..k)
        .map(|j| {
            let cross: f64 = (0..k).filter(|&i| i != j).map(|i| p_r[i] * gains[(j, i)]).sum();
            let own = p_r[j] * gains[(j, j)];
            signal_share(alpha[j]) * own / (cross + noise_share(alpha[j]) * own + 1.0)
        })
        .collect()
}

/// Uplink SINR balancing at total power `p_r_max`. Returns `(C^U, q_r)`.
pub fn svd_uplink_balance(gains: &RealMatrix, alpha: &[f64], gamma: &[f64], p_r_max: f64) -> Result<(f64, Vec<f64>)> {
    let (d, e, psi) = coupling(gains, alpha, gamma)?;
    power::balance(&system(&d, &e, psi.transpose()), &d, p_r_max)
}

/// Uplink powers meeting every target with equality.
pub fn svd_uplink_minpower(gains: &RealMatrix, alpha: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
    let (d, e, psi) = coupling(gains, alpha, gamma)?;
    power::min_power(&system(&d, &e, psi.transpose()), &d)
}

/// Downlink relay powers meeting every target with equality.
pub fn svd_downlink_minpower(gains: &RealMatrix, alpha: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
    let (d, e, psi) = coupling(gains, alpha, gamma)?;
    power::min_power(&system(&d, &e, psi), &d)
}

/// Spectral radius of the uplink system `D Psi^T + E`.
pub fn uplink_radius(gains: &RealMatrix, alpha: &[f64], gamma: &[f64]) -> Result<f64> {
    let (d, e, psi) = coupling(gains, alpha, gamma)?;
    Ok(crate::numerics::spectral_radius_real(&system(&d, &e, psi.transpose()))?)
}

/// Spatial separability `|g_kk|^2 / sum_{i != k} |g_ik|^2`; infinite without
/// cross gains.
pub fn chi(gains: &RealMatrix) -> Vec<f64> {
    let k = gains.nrows();
    (0..k)
        .map(|j| {
            let cross: f64 = (0..k).filter(|&i| i != j).map(|i| gains[(i, j)]).sum();
            if cross == 0.0 {
                f64::INFINITY
            } else {
                gains[(j, j)] / cross
            }
        })
        .collect()
}

/// Per-stream test `gamma_k < alpha_k chi_k / (1 + alpha_k + chi_k)`, which
/// bounds every Gershgorin disc of the uplink system inside the unit circle.
pub fn sufficient_condition(gains: &RealMatrix, alpha: &[f64], gamma: &[f64]) -> Vec<bool> {
    chi(gains)
        .iter()
        .zip(alpha.iter().zip(gamma))
        .map(|(&c, (&a, &g))| {
            let bound = match (a.is_infinite(), c.is_infinite()) {
                (true, true) => f64::INFINITY,
                (true, false) => c,
                (false, true) => a,
                (false, false) => a * c / (1.0 + a + c),
            };
            g < bound
        })
        .collect()
}
