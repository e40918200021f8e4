//! Problem instances, seeded channel draws and the ground-truth SINR/power check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector};

/// One problem instance: antennas, geometry, noise, caps and SINR targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub m_b: usize,
    pub m_r: usize,
    pub k: usize,
    /// Linear SINR targets, one per user.
    pub gamma: Vec<f64>,
    pub sigma_r_sq: f64,
    pub sigma_k_sq: Vec<f64>,
    pub p_b_max: f64,
    pub p_r_max: f64,
    pub d_bs_rs: f64,
    pub d_rs_ms: Vec<f64>,
    pub eta: f64,
    pub d0: f64,
}

impl Scenario {
    /// `k` users on an `m`-antenna BS and RS with equal targets, noise and distances.
    pub fn symmetric(m: usize, k: usize, gamma: f64, noise: f64, p_max: f64, d_bs_rs: f64, d_rs_ms: f64) -> Self {
        Self {
            m_b: m,
            m_r: m,
            k,
            gamma: vec![gamma; k],
            sigma_r_sq: noise,
            sigma_k_sq: vec![noise; k],
            p_b_max: p_max,
            p_r_max: p_max,
            d_bs_rs,
            d_rs_ms: vec![d_rs_ms; k],
            eta: 4.0,
            d0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.to_string()));
        if self.k == 0 || self.m_b == 0 || self.m_r == 0 {
            return bad("antenna and user counts must be at least 1");
        }
        if self.gamma.len() != self.k || self.sigma_k_sq.len() != self.k || self.d_rs_ms.len() != self.k {
            return bad("per-user vectors must have length k");
        }
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let scalars = [self.sigma_r_sq, self.p_b_max, self.p_r_max, self.d_bs_rs, self.eta, self.d0];
        if !scalars.iter().all(|&v| pos(v))
            || !self.gamma.iter().chain(&self.sigma_k_sq).chain(&self.d_rs_ms).all(|&v| pos(v))
        {
            return bad("targets, variances, caps and distances must be positive and finite");
        }
        Ok(())
    }

    /// Rejects instances the eigen-channel scheme cannot serve.
    pub fn validate_svd(&self) -> Result<()> {
        self.validate()?;
        if self.k > self.m_b.min(self.m_r) {
            return Err(Error::Unsupported(format!(
                "{} users exceed min(M_b, M_r) = {}",
                self.k,
                self.m_b.min(self.m_r)
            )));
        }
        Ok(())
    }
}

/// One channel draw: `h` is BS to RS (`m_r x m_b`), `g[k]` is RS to user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub g: Vec<ComplexVector>,
    pub seed: u64,
}

impl ChannelRealization {
    /// `[g_1, ..., g_K]` as columns.
    pub fn g_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.g)
    }

    /// Multiplies user `k`'s second-hop vector by a unit-modulus phase.
    pub fn rotate_user(&self, k: usize, phase: f64) -> Self {
        let mut out = self.clone();
        out.g[k] *= Complex64::from_polar(1.0, phase);
        out
    }
}

pub fn path_loss(d: f64, d0: f64, eta: f64) -> f64 {
    (d / d0).powf(eta)
}

/// Per-trial seed substream.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, variance: f64) -> ComplexMatrix {
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite variance");
    // column-major fill keeps the draw order stable
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal.sample(rng), normal.sample(rng)))
}

/// Draws `H` then each `g_k` from circularly-symmetric Gaussians scaled by path loss.
pub fn generate(s: &Scenario, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = gaussian_matrix(&mut rng, s.m_r, s.m_b, 1.0 / path_loss(s.d_bs_rs, s.d0, s.eta));
    let g = (0..s.k)
        .map(|k| {
            let v = 1.0 / path_loss(s.d_rs_ms[k], s.d0, s.eta);
            gaussian_matrix(&mut rng, s.m_r, 1, v).column(0).into_owned()
        })
        .collect();
    ChannelRealization { h, g, seed }
}

/// Achieved SINRs and consumed powers of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub sinr: Vec<f64>,
    pub p_b: f64,
    pub p_r: f64,
}

impl Verification {
    /// Smallest `sinr_k / gamma_k`.
    pub fn min_ratio(&self, gamma: &[f64]) -> f64 {
        self.sinr.iter().zip(gamma).map(|(s, g)| s / g).fold(f64::INFINITY, f64::min)
    }

    pub fn meets(&self, s: &Scenario, rel_tol: f64, abs_tol: f64) -> bool {
        self.min_ratio(&s.gamma) >= 1.0 - rel_tol
            && self.p_b <= s.p_b_max + abs_tol
            && self.p_r <= s.p_r_max + abs_tol
    }
}

fn check_dims(what: &str, m: &ComplexMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Recomputes per-user SINRs, BS power and RS power for BS precoder `f`
/// (`m_b x K`) and RS processing matrix `q` (`m_r x m_r`).
pub fn verify_sinr(s: &Scenario, ch: &ChannelRealization, f: &ComplexMatrix, q: &ComplexMatrix) -> Result<Verification> {
    check_dims("F", f, s.m_b, s.k)?;
    check_dims("Q", q, s.m_r, s.m_r)?;
    check_dims("H", &ch.h, s.m_r, s.m_b)?;
    if ch.g.len() != s.k || ch.g.iter().any(|g| g.len() != s.m_r) {
        return Err(Error::DimensionMismatch("second-hop vectors".into()));
    }
    let end_to_end = q * &ch.h * f; // m_r x K
    let sinr = (0..s.k)
        .map(|k| {
            let gk = ch.g[k].adjoint();
            let row = &gk * &end_to_end;
            let signal = row[k].norm_sqr();
            let interference: f64 = (0..s.k).filter(|&i| i != k).map(|i| row[i].norm_sqr()).sum();
            let relay_noise = s.sigma_r_sq * (&gk * q).norm_squared();
            signal / (interference + relay_noise + s.sigma_k_sq[k])
        })
        .collect();
    let p_b = f.norm_squared();
    let p_r = (q * &ch.h * f).norm_squared() + s.sigma_r_sq * q.norm_squared();
    Ok(Verification { sinr, p_b, p_r })
}

/// A chain of `relays` relays between BS and users.
#[derive(Debug, Clone, PartialEq)]
pub struct MultihopScenario {
    pub base: Scenario,
    /// Relay count; `0` means direct BS to user broadcast.
    pub relays: usize,
    pub p_r_max_hops: Vec<f64>,
}

impl MultihopScenario {
    /// Relays placed uniformly on a line of length `total_distance`.
    pub fn uniform(base: Scenario, relays: usize, total_distance: f64) -> Self {
        let hop = total_distance / (relays + 1) as f64;
        let mut base = base;
        base.d_bs_rs = hop;
        base.d_rs_ms = vec![hop; base.k];
        let p_r_max_hops = vec![base.p_r_max; relays];
        Self { base, relays, p_r_max_hops }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.p_r_max_hops.len() != self.relays || self.p_r_max_hops.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidScenario("need one positive relay cap per relay".into()));
        }
        let m = if self.relays == 0 { self.base.m_b } else { self.base.m_b.min(self.base.m_r) };
        if self.base.k > m {
            return Err(Error::Unsupported(format!("{} users exceed {m} eigen-streams", self.base.k)));
        }
        Ok(())
    }

    /// Antenna count at the last transmitter.
    pub fn last_tx_antennas(&self) -> usize {
        if self.relays == 0 {
            self.base.m_b
        } else {
            self.base.m_r
        }
    }
}

/// Channels of a relay chain: `hops[0]` is BS to RS1, `hops[n]` is RS_n to RS_{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MultihopChannel {
    pub hops: Vec<ComplexMatrix>,
    pub g: Vec<ComplexVector>,
    pub seed: u64,
}

pub fn generate_multihop(ms: &MultihopScenario, seed: u64) -> MultihopChannel {
    let s = &ms.base;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hop_var = 1.0 / path_loss(s.d_bs_rs, s.d0, s.eta);
    let hops = (0..ms.relays)
        .map(|n| {
            let cols = if n == 0 { s.m_b } else { s.m_r };
            gaussian_matrix(&mut rng, s.m_r, cols, hop_var)
        })
        .collect();
    let rows = ms.last_tx_antennas();
    let g = (0..s.k)
        .map(|k| {
            let v = 1.0 / path_loss(s.d_rs_ms[k], s.d0, s.eta);
            gaussian_matrix(&mut rng, rows, 1, v).column(0).into_owned()
        })
        .collect();
    MultihopChannel { hops, g, seed }
}

/// Multi-relay counterpart of [`Verification`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultihopVerification {
    pub sinr: Vec<f64>,
    pub p_b: f64,
    pub p_r: Vec<f64>,
}

impl MultihopVerification {
    pub fn sum_power(&self) -> f64 {
        self.p_b + self.p_r.iter().sum::<f64>()
    }
}

/// Propagates signal and relay noise covariances through the chain.
pub fn verify_multihop(
    ms: &MultihopScenario,
    ch: &MultihopChannel,
    f: &ComplexMatrix,
    q: &[ComplexMatrix],
) -> Result<MultihopVerification> {
    let s = &ms.base;
    if q.len() != ms.relays || ch.hops.len() != ms.relays {
        return Err(Error::DimensionMismatch("one relay matrix per relay".into()));
    }
    check_dims("F", f, s.m_b, s.k)?;
    let sr = s.sigma_r_sq;
    // signal: current transmit-side signal map; noise: transmitted noise
    // covariance accumulated from earlier relays.
    let mut signal = f.clone();
    let mut noise_maps: Vec<ComplexMatrix> = Vec::new();
    let mut p_r = Vec::with_capacity(ms.relays);
    for (n, (hn, qn)) in ch.hops.iter().zip(q).enumerate() {
        check_dims(&format!("Q_{}", n + 1), qn, s.m_r, s.m_r)?;
        signal = qn * hn * &signal;
        for m in noise_maps.iter_mut() {
            *m = qn * hn * &*m;
        }
        noise_maps.push(qn.clone());
        let power = signal.norm_squared() + sr * noise_maps.iter().map(|m| m.norm_squared()).sum::<f64>();
        p_r.push(power);
    }
    let sinr = (0..s.k)
        .map(|k| {
            let gk = ch.g[k].adjoint();
            let row = &gk * &signal;
            let desired = row[k].norm_sqr();
            let interference: f64 = (0..s.k).filter(|&i| i != k).map(|i| row[i].norm_sqr()).sum();
            let relay_noise: f64 = noise_maps.iter().map(|m| sr * (&gk * m).norm_squared()).sum();
            desired / (interference + relay_noise + s.sigma_k_sq[k])
        })
        .collect();
    Ok(MultihopVerification { sinr, p_b: f.norm_squared(), p_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn scenario(k: usize) -> Scenario {
        Scenario::symmetric(k, k, 2.0, 0.1, 10.0, 0.5, 0.5)
    }

    #[test]
    fn path_loss_cases() {
        assert_eq!(path_loss(1.0, 1.0, 4.0), 1.0);
        assert_eq!(path_loss(0.5, 1.0, 4.0), 1.0 / 16.0);
        assert_eq!(path_loss(2.0, 1.0, 2.0), 4.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let s = scenario(3);
        assert_eq!(generate(&s, 42), generate(&s, 42));
        assert_ne!(generate(&s, 42).h, generate(&s, 43).h);
    }

    #[test]
    fn zero_precoder_gives_zero_sinr() {
        let s = scenario(2);
        let ch = generate(&s, 1);
        let q = ComplexMatrix::identity(2, 2) * C::new(0.5, 0.0);
        let v = verify_sinr(&s, &ch, &ComplexMatrix::zeros(2, 2), &q).unwrap();
        assert!(v.sinr.iter().all(|&x| x == 0.0));
        assert_eq!(v.p_b, 0.0);
        assert!((v.p_r - s.sigma_r_sq * 0.25 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_user_closed_form() {
        let mut s = scenario(1);
        s.m_b = 2;
        s.m_r = 2;
        let ch = generate(&s, 9);
        let p: f64 = 3.0;
        let f = ComplexMatrix::from_column_slice(2, 1, &[C::new(0.0, p.sqrt()), C::new(0.0, 0.0)]);
        let q = ComplexMatrix::identity(2, 2);
        let v = verify_sinr(&s, &ch, &f, &q).unwrap();
        let gh = ch.g[0].adjoint() * &ch.h;
        let expect = gh[0].norm_sqr() * p / (s.sigma_r_sq * ch.g[0].norm_squared() + s.sigma_k_sq[0]);
        assert!((v.sinr[0] - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = scenario(2);
        let ch = generate(&s, 1);
        let bad = ComplexMatrix::zeros(3, 2);
        assert!(verify_sinr(&s, &ch, &bad, &ComplexMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn multihop_single_relay_matches_two_hop_check() {
        let base = scenario(2);
        let ms = MultihopScenario { base: base.clone(), relays: 1, p_r_max_hops: vec![base.p_r_max] };
        let mch = generate_multihop(&ms, 5);
        let ch = ChannelRealization { h: mch.hops[0].clone(), g: mch.g.clone(), seed: 5 };
        let f = generate(&base, 11).h;
        let q = generate(&base, 12).h;
        let a = verify_sinr(&base, &ch, &f, &q).unwrap();
        let b = verify_multihop(&ms, &mch, &f, std::slice::from_ref(&q)).unwrap();
        for (x, y) in a.sinr.iter().zip(&b.sinr) {
            assert!((x - y).abs() < 1e-12 * x.max(1.0));
        }
        assert!((a.p_r - b.p_r[0]).abs() < 1e-12 * a.p_r);
    }

    #[test]
    fn uniform_placement_splits_distance() {
        let ms = MultihopScenario::uniform(scenario(2), 3, 2.0);
        assert_eq!(ms.base.d_bs_rs, 0.5);
        assert_eq!(ms.base.d_rs_ms, vec![0.5, 0.5]);
        assert_eq!(ms.p_r_max_hops.len(), 3);
    }
}
