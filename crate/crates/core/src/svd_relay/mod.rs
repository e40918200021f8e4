//! Eigen-channel relaying: the relay receives along the first hop's left
//! singular vectors, renormalizes each stream, and re-beamforms it to its user.

mod broadcast;
mod chain;
mod kernels;
mod multihop;
mod pairing;

pub use broadcast::{broadcast_balance, broadcast_balancing, broadcast_beamformers, BroadcastOutcome};
pub use chain::{svd_balance_loop, BalanceOutcome};
pub use kernels::{
    chi, gain_matrix, noise_share, normalized_channels, signal_share, sufficient_condition, svd_beamformers,
    svd_downlink_minpower, svd_downlink_sinr, svd_uplink_balance, svd_uplink_minpower, svd_uplink_sinr,
    uplink_radius, SvdEffectiveChannel, MIN_GAIN,
};
pub use multihop::{
    multihop_feasibility, multihop_feasibility_gp, multihop_minimize, multihop_minpower_gp, multihop_solve,
    multihop_solve_routed, MultihopDesign, MultihopSetup,
};
pub use pairing::{
    exhaustive_pairing, hop_cinr, multihop_pairing, multihop_sinr, pair_subchannels, pairing_power,
    second_hop_cinr, HopCinr,
};

use num_complex::Complex64;

use crate::channel::{verify_sinr, ChannelRealization, Scenario};
use crate::error::{Error, Result};
use crate::gp::{self, GpProblem, Monomial, Posynomial};
use crate::numerics::{svd, ComplexMatrix, RealMatrix};
use crate::report::{worst_ratio, SolveReport, SolveStatus};

use chain::{chain_feasibility, chain_minimize, Chain, ChainOutcome};

/// Smallest usable singular value.
pub const MIN_SINGULAR: f64 = 1e-12;

/// How first-hop eigen-streams are assigned to users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pairing {
    /// Stream `k` (k-th largest singular value) serves user `k`.
    Identity,
    /// Strong first-hop streams go to weak second-hop users.
    Heuristic,
    /// Lowest decoupled two-hop power over all assignments (K <= 4).
    Exhaustive,
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdDesign {
    /// Left singular vectors in user order (`m_r x K`).
    pub u: ComplexMatrix,
    /// Right singular vectors in user order (`m_b x K`).
    pub v: ComplexMatrix,
    /// Singular value of each user's stream.
    pub lambda: Vec<f64>,
    /// Unit-norm relay transmit beamformers.
    pub a: ComplexMatrix,
    pub p: Vec<f64>,
    pub p_r: Vec<f64>,
    pub q_r: Vec<f64>,
    pub eps: Vec<f64>,
    /// `pairing[k]` is the subchannel (singular value rank) serving user `k`.
    pub pairing: Vec<usize>,
}

impl SvdDesign {
    /// `V diag(p)^{1/2}`.
    pub fn precoder(&self) -> ComplexMatrix {
        scale_columns(&self.v, &self.p.iter().map(|p| p.sqrt()).collect::<Vec<_>>())
    }

    /// `A diag(p_r)^{1/2} diag(eps) U^H`.
    pub fn relay_matrix(&self) -> ComplexMatrix {
        let w: Vec<f64> = self.p_r.iter().zip(&self.eps).map(|(p, e)| p.sqrt() * e).collect();
        scale_columns(&self.a, &w) * self.u.adjoint()
    }
}

pub(crate) fn scale_columns(m: &ComplexMatrix, w: &[f64]) -> ComplexMatrix {
    let mut out = m.clone();
    for (k, mut col) in out.column_iter_mut().enumerate() {
        col *= Complex64::new(w[k], 0.0);
    }
    out
}

/// `(lambda_k^2 p_k + sigma_r^2)^{-1/2}`.
pub fn normalization(lambda: &[f64], p: &[f64], sigma_r_sq: f64) -> Vec<f64> {
    lambda.iter().zip(p).map(|(l, p)| 1.0 / (l * l * p + sigma_r_sq).sqrt()).collect()
}

/// First-hop SINRs `p_k lambda_k^2 / sigma_r^2`.
pub fn first_hop_sinr(lambda: &[f64], p: &[f64], sigma_r_sq: f64) -> Vec<f64> {
    lambda.iter().zip(p).map(|(l, p)| p * l * l / sigma_r_sq).collect()
}

/// Leading `k` singular triplets of a hop, rejecting rank-deficient channels.
pub(crate) fn leading_triplets(h: &ComplexMatrix, k: usize) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let d = svd(h)?;
    if d.sigma.len() < k || d.sigma[k - 1] <= MIN_SINGULAR {
        return Err(Error::Unsupported("first hop is rank deficient for the requested streams".into()));
    }
    Ok((d.u.columns(0, k).into_owned(), d.sigma[..k].to_vec(), d.v.columns(0, k).into_owned()))
}

/// Eigen-channels of the first hop with streams assigned to users.
#[derive(Debug, Clone)]
pub struct SvdSetup {
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub lambda: Vec<f64>,
    pub pairing: Vec<usize>,
    /// Noise-normalized second-hop channels as columns.
    pub gn: ComplexMatrix,
}

impl SvdSetup {
    pub fn new(s: &Scenario, ch: &ChannelRealization, pairing: &Pairing) -> Result<Self> {
        s.validate_svd()?;
        let (u, sigma, v) = leading_triplets(&ch.h, s.k)?;
        let gn = normalized_channels(&ch.g, &s.sigma_k_sq);
        let perm = match pairing {
            Pairing::Identity => (0..s.k).collect(),
            Pairing::Heuristic => pair_subchannels(&hop_cinr(&sigma, &gn, s.sigma_r_sq)?),
            Pairing::Exhaustive => {
                let c = hop_cinr(&sigma, &gn, s.sigma_r_sq)?;
                exhaustive_pairing(&c.first_hop, &c.second_hop, &s.gamma)?
            }
            Pairing::Fixed(p) => {
                let mut sorted = p.clone();
                sorted.sort_unstable();
                if sorted != (0..s.k).collect::<Vec<_>>() {
                    return Err(Error::InvalidScenario("pairing must be a permutation".into()));
                }
                p.clone()
            }
        };
        let u = ComplexMatrix::from_columns(&perm.iter().map(|&j| u.column(j).into_owned()).collect::<Vec<_>>());
        let v = ComplexMatrix::from_columns(&perm.iter().map(|&j| v.column(j).into_owned()).collect::<Vec<_>>());
        let lambda = perm.iter().map(|&j| sigma[j]).collect();
        Ok(Self { u, v, lambda, pairing: perm, gn })
    }
}

/// Inverse end-to-end SINR of user `k` over variables `p` (0..K) and `p_r`
/// (K..2K): `{(l^2 p + s_r)(sum_{i!=k} p_r_i G_ki + 1) + p_r_k G_kk s_r} / (G_kk l^2 p p_r_k)`.
fn two_hop_inverse_sinr(n: usize, k: usize, lambda: &[f64], sigma_r_sq: f64, gains: &RealMatrix) -> Posynomial {
    let kk = gains.nrows();
    let (g_kk, l2) = (gains[(k, k)], lambda[k] * lambda[k]);
    let (p, pr) = (k, kk + k);
    let mut terms = Vec::new();
    for i in (0..kk).filter(|&i| i != k && gains[(k, i)] > 0.0) {
        let ratio = gains[(k, i)] / g_kk;
        terms.push(Monomial::term(n, ratio, &[(kk + i, 1.0), (pr, -1.0)]));
        terms.push(Monomial::term(n, ratio * sigma_r_sq / l2, &[(kk + i, 1.0), (pr, -1.0), (p, -1.0)]));
    }
    terms.push(Monomial::term(n, 1.0 / g_kk, &[(pr, -1.0)]));
    terms.push(Monomial::term(n, sigma_r_sq / (g_kk * l2), &[(pr, -1.0), (p, -1.0)]));
    terms.push(Monomial::term(n, sigma_r_sq / l2, &[(p, -1.0)]));
    Posynomial::new(terms)
}

fn stage_sum(n: usize, range: std::ops::Range<usize>) -> Posynomial {
    Posynomial::new(range.map(|i| Monomial::var(n, i)).collect())
}

fn names_two_hop(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("p{i}")).chain((1..=k).map(|i| format!("pr{i}"))).collect()
}

fn check_gains(gains: &RealMatrix) -> Result<()> {
    for k in 0..gains.nrows() {
        if gains[(k, k)].sqrt() < MIN_GAIN {
            return Err(Error::DegenerateChannel(format!("stream {k} is orthogonal to its beam")));
        }
    }
    Ok(())
}

/// Min-max of `gamma_k / SINR_k` over BS and relay powers for fixed relay
/// beamformers. `gains` are on noise-normalized channels. Returns `(t, p, p_r)`.
pub fn svd_feasibility_gp(s: &Scenario, lambda: &[f64], gains: &RealMatrix) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_gains(gains)?;
    let k = s.k;
    let n = 2 * k + 1;
    let t = 2 * k;
    let mut names = names_two_hop(k);
    names.push("t".into());
    let mut prob = GpProblem::new(names, Monomial::var(n, t));
    for user in 0..k {
        let inv = two_hop_inverse_sinr(n, user, lambda, s.sigma_r_sq, gains).scale(s.gamma[user]);
        prob.push_le(&inv, &Monomial::var(n, t));
    }
    prob.push_le(&stage_sum(n, 0..k), &Monomial::constant(n, s.p_b_max));
    prob.push_le(&stage_sum(n, k..2 * k), &Monomial::constant(n, s.p_r_max));
    let sol = gp::solve(&prob)?.into_optimal()?;
    let x = &sol.variables;
    Ok((sol.objective_value, x[..k].to_vec(), x[k..2 * k].to_vec()))
}

/// Minimum `sum p + sum p_r` meeting every target for fixed relay beamformers.
/// Returns `(sum_power, p, p_r)`.
pub fn svd_minpower_gp(s: &Scenario, lambda: &[f64], gains: &RealMatrix) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_gains(gains)?;
    let k = s.k;
    let n = 2 * k;
    let mut prob = GpProblem::minimize_posynomial(names_two_hop(k), &stage_sum(n, 0..n));
    let wide = n + 1;
    for user in 0..k {
        prob.push(two_hop_inverse_sinr(wide, user, lambda, s.sigma_r_sq, gains).scale(s.gamma[user]));
    }
    prob.push_le(&stage_sum(wide, 0..k), &Monomial::constant(wide, s.p_b_max));
    prob.push_le(&stage_sum(wide, k..2 * k), &Monomial::constant(wide, s.p_r_max));
    let sol = gp::solve(&prob)?.into_optimal()?;
    let x = &sol.variables;
    Ok((sol.objective_value, x[..k].to_vec(), x[k..2 * k].to_vec()))
}

struct TwoHop<'a> {
    s: &'a Scenario,
    setup: &'a SvdSetup,
}

impl Chain for TwoHop<'_> {
    fn gamma(&self) -> &[f64] {
        &self.s.gamma
    }

    fn channels(&self) -> &ComplexMatrix {
        &self.setup.gn
    }

    fn broadcast_cap(&self) -> f64 {
        self.s.p_r_max
    }

    fn initial_powers(&self) -> Vec<Vec<f64>> {
        let k = self.s.k as f64;
        vec![vec![self.s.p_b_max / k; self.s.k], vec![self.s.p_r_max / k; self.s.k]]
    }

    fn alpha(&self, powers: &[Vec<f64>]) -> Vec<f64> {
        first_hop_sinr(&self.setup.lambda, &powers[0], self.s.sigma_r_sq)
    }

    fn feasibility_gp(&self, gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)> {
        let (t, p, p_r) = svd_feasibility_gp(self.s, &self.setup.lambda, gains)?;
        Ok((t, vec![p, p_r]))
    }

    fn minpower_gp(&self, gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)> {
        let (sum, p, p_r) = svd_minpower_gp(self.s, &self.setup.lambda, gains)?;
        Ok((sum, vec![p, p_r]))
    }
}

fn design_from(s: &Scenario, setup: &SvdSetup, out: &ChainOutcome) -> SvdDesign {
    let p = out.powers[0].clone();
    SvdDesign {
        u: setup.u.clone(),
        v: setup.v.clone(),
        lambda: setup.lambda.clone(),
        a: out.a.clone(),
        eps: normalization(&setup.lambda, &p, s.sigma_r_sq),
        p,
        p_r: out.powers[1].clone(),
        q_r: out.q_r.clone(),
        pairing: setup.pairing.clone(),
    }
}

fn finish(s: &Scenario, ch: &ChannelRealization, setup: &SvdSetup, out: ChainOutcome) -> Result<SolveReport<SvdDesign>> {
    let design = design_from(s, setup, &out);
    if out.history.is_empty() {
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            t: f64::INFINITY,
            balanced_level: 0.0,
            p_b: 0.0,
            p_r: 0.0,
            sum_power: 0.0,
            outer_iterations: out.outer,
            inner_iterations: out.inner,
            achieved_sinr: vec![0.0; s.k],
            t_history: out.history,
            design,
        });
    }
    let v = verify_sinr(s, ch, &design.precoder(), &design.relay_matrix())?;
    let t = worst_ratio(&s.gamma, &v.sinr);
    let balanced_level = if out.balanced_level.is_nan() { 1.0 / t } else { out.balanced_level };
    Ok(SolveReport {
        status: out.status,
        t,
        balanced_level,
        p_b: v.p_b,
        p_r: v.p_r,
        sum_power: v.p_b + v.p_r,
        outer_iterations: out.outer,
        inner_iterations: out.inner,
        achieved_sinr: v.sinr,
        t_history: out.history,
        design,
    })
}

/// Two-loop feasibility test of the eigen-channel scheme.
pub fn svd_feasibility(s: &Scenario, ch: &ChannelRealization, pairing: &Pairing) -> Result<SolveReport<SvdDesign>> {
    let setup = SvdSetup::new(s, ch, pairing)?;
    let out = chain_feasibility(&TwoHop { s, setup: &setup })?;
    finish(s, ch, &setup, out)
}

/// Alternating sum-power minimization warm-started from a feasibility design.
pub fn svd_minimize(s: &Scenario, ch: &ChannelRealization, warm: &SvdDesign) -> Result<SolveReport<SvdDesign>> {
    let setup = SvdSetup::new(s, ch, &Pairing::Fixed(warm.pairing.clone()))?;
    let start = ChainOutcome {
        status: SolveStatus::Feasible,
        powers: vec![warm.p.clone(), warm.p_r.clone()],
        a: warm.a.clone(),
        q_r: warm.q_r.clone(),
        balanced_level: f64::NAN,
        history: Vec::new(),
        outer: 0,
        inner: 0,
    };
    let out = chain_minimize(&TwoHop { s, setup: &setup }, &start)?;
    finish(s, ch, &setup, out)
}

/// Feasibility test followed, when it passes, by power minimization.
pub fn svd_solve(
    s: &Scenario,
    ch: &ChannelRealization,
    pairing: &Pairing,
) -> Result<(SolveReport<SvdDesign>, Option<SolveReport<SvdDesign>>)> {
    let feas = svd_feasibility(s, ch, pairing)?;
    if !feas.is_feasible() {
        return Ok((feas, None));
    }
    let min = svd_minimize(s, ch, &feas.design)?;
    Ok((feas, Some(min)))
}
