//! Amplify-and-forward relaying: the relay scales its input by `sqrt(g_r)`,
//! the BS beamforms through the cascaded channel.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{verify_sinr, ChannelRealization, Scenario};
use crate::error::{Error, Result};
use crate::gp::{self, GpProblem, Monomial, Posynomial};
use crate::numerics::{dominant_gen_eigvec, ComplexMatrix, ComplexVector, RealMatrix};
use crate::power;
use crate::report::{converged, worst_ratio, SolveReport, SolveStatus, INNER_CAP, MONOTONE_SLACK, OUTER_CAP};

/// Degenerate-link threshold on `|h_hat_kk|`.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AfDesign {
    /// Unit-norm BS beamformers, `m_b x K`.
    pub w: ComplexMatrix,
    pub p: Vec<f64>,
    pub g_r: f64,
    /// Virtual-uplink powers.
    pub q: Vec<f64>,
}

impl AfDesign {
    /// `W diag(p)^{1/2}`.
    pub fn precoder(&self) -> ComplexMatrix {
        let mut f = self.w.clone();
        for (k, mut col) in f.column_iter_mut().enumerate() {
            col *= Complex64::new(self.p[k].sqrt(), 0.0);
        }
        f
    }

    /// `sqrt(g_r) I`.
    pub fn relay_matrix(&self, m_r: usize) -> ComplexMatrix {
        ComplexMatrix::identity(m_r, m_r) * Complex64::new(self.g_r.sqrt(), 0.0)
    }
}

/// Scalar channels seen through fixed beamformers.
#[derive(Debug, Clone)]
pub struct AfEffectiveChannel {
    /// `h_hat[(x, y)] = g_x^H H w_y`.
    pub h_hat: ComplexMatrix,
    /// `H W`.
    pub h_r: ComplexMatrix,
    /// `||g_k||^2`.
    pub g_norm_sq: Vec<f64>,
    /// Effective noise `g_r sigma_r^2 ||g_k||^2 + sigma_k^2` at the `g_r` it was built for.
    pub sigma_hat_sq: Vec<f64>,
}

impl AfEffectiveChannel {
    pub fn new(s: &Scenario, ch: &ChannelRealization, w: &ComplexMatrix, g_r: f64) -> Self {
        let h_r = &ch.h * w;
        let h_hat = ch.g_matrix().adjoint() * &h_r;
        let g_norm_sq: Vec<f64> = ch.g.iter().map(|g| g.norm_squared()).collect();
        let sigma_hat_sq = effective_noise(s, &g_norm_sq, g_r);
        Self { h_hat, h_r, g_norm_sq, sigma_hat_sq }
    }

    pub fn k(&self) -> usize {
        self.h_hat.nrows()
    }

    fn gain(&self, x: usize, y: usize) -> f64 {
        self.h_hat[(x, y)].norm_sqr()
    }

    fn check_direct_gains(&self) -> Result<()> {
        for k in 0..self.k() {
            if self.h_hat[(k, k)].norm() < MIN_GAIN {
                return Err(Error::DegenerateChannel(format!("user {k} is orthogonal to its beam")));
            }
        }
        Ok(())
    }
}

pub fn effective_noise(s: &Scenario, g_norm_sq: &[f64], g_r: f64) -> Vec<f64> {
    g_norm_sq.iter().zip(&s.sigma_k_sq).map(|(g, n)| g_r * s.sigma_r_sq * g + n).collect()
}

fn cascaded_channels(ch: &ChannelRealization, g_r: f64) -> Vec<ComplexVector> {
    let scale = Complex64::new(g_r.sqrt(), 0.0);
    ch.g.iter().map(|g| ch.h.adjoint() * g * scale).collect()
}

/// Max-SINR virtual-uplink receivers for fixed uplink powers `q`.
pub fn af_beamformers(ch: &ChannelRealization, g_r: f64, q: &[f64], sigma_hat_sq: &[f64]) -> Result<ComplexMatrix> {
    let h = cascaded_channels(ch, g_r);
    let k = h.len();
    let m = h[0].len();
    let mut w = ComplexMatrix::zeros(m, k);
    for user in 0..k {
        let mut rn = ComplexMatrix::identity(m, m);
        for i in (0..k).filter(|&i| i != user) {
            rn.gerc(Complex64::new(q[i] / sigma_hat_sq[i], 0.0), &h[i], &h[i], Complex64::new(1.0, 0.0));
        }
        let eig = dominant_gen_eigvec(&h[user], q[user] / sigma_hat_sq[user], &rn)?;
        w.set_column(user, &eig.vector);
    }
    Ok(w)
}

/// Normalized virtual-uplink coupling: `D` and `Psi` with
/// `Psi[(i, k)] = g_r |h_hat_ik|^2 / sigma_hat_i^2`.
fn uplink_terms(eff: &AfEffectiveChannel, g_r: f64, gamma: &[f64]) -> Result<(Vec<f64>, RealMatrix)> {
    eff.check_direct_gains()?;
    let k = eff.k();
    let d: Vec<f64> = (0..k).map(|j| gamma[j] * eff.sigma_hat_sq[j] / (g_r * eff.gain(j, j))).collect();
    let psi = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { g_r * eff.gain(i, j) / eff.sigma_hat_sq[i] });
    Ok((d, psi))
}

fn scale_rows(d: &[f64], m: RealMatrix) -> RealMatrix {
    let mut m = m;
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= d[i];
    }
    m
}

/// Virtual-uplink SINRs of the normalized model for powers `q`.
pub fn af_uplink_sinr(eff: &AfEffectiveChannel, g_r: f64, q: &[f64]) -> Vec<f64> {
    let k = eff.k();
    (0..k)
        .map(|j| {
            let interference: f64 = (0..k)
                .filter(|&i| i != j)
                .map(|i| q[i] * g_r * eff.gain(i, j) / eff.sigma_hat_sq[i])
                .sum();
            q[j] * g_r * eff.gain(j, j) / eff.sigma_hat_sq[j] / (interference + 1.0)
        })
        .collect()
}

/// SINR balancing in the virtual uplink under `sum q = p_b_max`.
pub fn af_uplink_balance(eff: &AfEffectiveChannel, g_r: f64, gamma: &[f64], p_b_max: f64) -> Result<(f64, Vec<f64>)> {
    let (d, psi) = uplink_terms(eff, g_r, gamma)?;
    power::balance(&scale_rows(&d, psi.transpose()), &d, p_b_max)
}

/// Balanced level of the downlink with the same beamformers and BS budget.
pub fn af_downlink_balance(eff: &AfEffectiveChannel, g_r: f64, gamma: &[f64], p_b_max: f64) -> Result<(f64, Vec<f64>)> {
    let (d, psi) = uplink_terms(eff, g_r, gamma)?;
    power::balance(&scale_rows(&d, psi), &d, p_b_max)
}

/// Minimum virtual-uplink powers meeting all targets with equality.
pub fn af_uplink_minpower(eff: &AfEffectiveChannel, g_r: f64, gamma: &[f64]) -> Result<Vec<f64>> {
    let (d, psi) = uplink_terms(eff, g_r, gamma)?;
    power::min_power(&scale_rows(&d, psi.transpose()), &d)
}

/// Variables `p_1..p_K, g_r` (then `t` where used).
struct AfGp<'a> {
    s: &'a Scenario,
    eff: &'a AfEffectiveChannel,
    n: usize,
}

impl AfGp<'_> {
    fn k(&self) -> usize {
        self.s.k
    }

    fn g_r(&self) -> usize {
        self.k()
    }

    /// `(sum_{i != k} p_i g_r |h_ki|^2 + g_r sigma_r^2 ||g_k||^2 + sigma_k^2) / (p_k g_r |h_kk|^2)`.
    fn inverse_sinr(&self, k: usize) -> Posynomial {
        let (n, gr) = (self.n, self.g_r());
        let direct = self.eff.gain(k, k);
        let mut terms: Vec<Monomial> = (0..self.k())
            .filter(|&i| i != k && self.eff.gain(k, i) > 0.0)
            .map(|i| Monomial::term(n, self.eff.gain(k, i) / direct, &[(i, 1.0), (k, -1.0)]))
            .collect();
        terms.push(Monomial::term(n, self.s.sigma_r_sq * self.eff.g_norm_sq[k] / direct, &[(k, -1.0)]));
        terms.push(Monomial::term(n, self.s.sigma_k_sq[k] / direct, &[(k, -1.0), (gr, -1.0)]));
        Posynomial::new(terms)
    }

    fn bs_power(&self) -> Posynomial {
        Posynomial::new((0..self.k()).map(|i| Monomial::var(self.n, i)).collect())
    }

    /// `g_r (sum_k p_k ||H w_k||^2 + M_r sigma_r^2)`.
    fn rs_power(&self) -> Posynomial {
        let (n, gr) = (self.n, self.g_r());
        let mut terms: Vec<Monomial> = (0..self.k())
            .map(|i| Monomial::term(n, self.eff.h_r.column(i).norm_squared(), &[(i, 1.0), (gr, 1.0)]))
            .filter(|m| m.coefficient > 0.0)
            .collect();
        terms.push(Monomial::term(n, self.s.m_r as f64 * self.s.sigma_r_sq, &[(gr, 1.0)]));
        Posynomial::new(terms)
    }

    fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.k()).map(|i| format!("p{i}")).collect();
        names.push("g_r".into());
        names
    }
}

fn gp_failure(sol: &gp::GpSolution) -> Error {
    Error::Gp(sol.status.to_string())
}

/// Min-max of `gamma_k / SINR_k` over `(p, g_r)` for fixed beamformers.
/// Returns `(t, p, g_r)`.
pub fn af_downlink_feasibility_gp(s: &Scenario, eff: &AfEffectiveChannel) -> Result<(f64, Vec<f64>, f64)> {
    eff.check_direct_gains()?;
    let k = s.k;
    let n = k + 2;
    let t = k + 1;
    let model = AfGp { s, eff, n };
    let mut names = model.names();
    names.push("t".into());
    let mut prob = GpProblem::new(names, Monomial::var(n, t));
    for user in 0..k {
        prob.push_le(&model.inverse_sinr(user).scale(s.gamma[user]), &Monomial::var(n, t));
    }
    prob.push_le(&model.bs_power(), &Monomial::constant(n, s.p_b_max));
    prob.push_le(&model.rs_power(), &Monomial::constant(n, s.p_r_max));
    let sol = gp::solve(&prob)?;
    if !sol.is_optimal() {
        return Err(gp_failure(&sol));
    }
    let x = &sol.variables;
    Ok((sol.objective_value, x[..k].to_vec(), x[k]))
}

/// Minimum `P_b + P_r` over `(p, g_r)` meeting every target for fixed beamformers.
/// Returns `(sum_power, p, g_r)`.
pub fn af_downlink_minpower_gp(s: &Scenario, eff: &AfEffectiveChannel) -> Result<(f64, Vec<f64>, f64)> {
    eff.check_direct_gains()?;
    let k = s.k;
    let model = AfGp { s, eff, n: k + 1 };
    let objective = &model.bs_power() + &model.rs_power();
    let mut prob = GpProblem::minimize_posynomial(model.names(), &objective);
    let n = k + 2;
    let widen = |p: Posynomial| gp::widen(&p, n);
    for user in 0..k {
        prob.push(widen(model.inverse_sinr(user).scale(s.gamma[user])));
    }
    prob.push_le(&widen(model.bs_power()), &Monomial::constant(n, s.p_b_max));
    prob.push_le(&widen(model.rs_power()), &Monomial::constant(n, s.p_r_max));
    let sol = gp::solve(&prob)?;
    if !sol.is_optimal() {
        return Err(gp_failure(&sol));
    }
    let x = &sol.variables;
    Ok((sol.objective_value, x[..k].to_vec(), x[k]))
}

fn report(
    s: &Scenario,
    ch: &ChannelRealization,
    status: SolveStatus,
    design: AfDesign,
    balanced_level: f64,
    outer: usize,
    inner: usize,
    t_history: Vec<f64>,
) -> Result<SolveReport<AfDesign>> {
    let v = verify_sinr(s, ch, &design.precoder(), &design.relay_matrix(s.m_r))?;
    Ok(SolveReport {
        status,
        t: worst_ratio(&s.gamma, &v.sinr),
        balanced_level,
        p_b: v.p_b,
        p_r: v.p_r,
        sum_power: v.p_b + v.p_r,
        outer_iterations: outer,
        inner_iterations: inner,
        achieved_sinr: v.sinr,
        t_history,
        design,
    })
}

fn infeasible_report(s: &Scenario, design: AfDesign, outer: usize, inner: usize, t_history: Vec<f64>) -> SolveReport<AfDesign> {
    SolveReport {
        status: SolveStatus::Infeasible,
        t: f64::INFINITY,
        balanced_level: 0.0,
        p_b: 0.0,
        p_r: 0.0,
        sum_power: 0.0,
        outer_iterations: outer,
        inner_iterations: inner,
        achieved_sinr: vec![0.0; s.k],
        t_history,
        design,
    }
}

struct InnerResult {
    w: ComplexMatrix,
    eff: AfEffectiveChannel,
    c_u: f64,
    q: Vec<f64>,
    iterations: usize,
}

/// Alternates receive-beamformer updates with uplink balancing at fixed `g_r`.
fn balance_loop(s: &Scenario, ch: &ChannelRealization, g_r: f64, q0: Vec<f64>) -> Result<InnerResult> {
    let g_norm_sq: Vec<f64> = ch.g.iter().map(|g| g.norm_squared()).collect();
    let sigma_hat_sq = effective_noise(s, &g_norm_sq, g_r);
    let mut q = q0;
    let mut prev = f64::NAN;
    let mut iterations = 0;
    loop {
        let w = af_beamformers(ch, g_r, &q, &sigma_hat_sq)?;
        let eff = AfEffectiveChannel::new(s, ch, &w, g_r);
        let (c_u, q_new) = af_uplink_balance(&eff, g_r, &s.gamma, s.p_b_max)?;
        iterations += 1;
        q = q_new;
        if converged(prev, c_u) || iterations >= INNER_CAP {
            return Ok(InnerResult { w, eff, c_u, q, iterations });
        }
        prev = c_u;
    }
}

/// Two-loop feasibility test: alternating beamformer/uplink balancing inside,
/// downlink GP over powers and relay gain outside.
pub fn af_feasibility(s: &Scenario, ch: &ChannelRealization) -> Result<SolveReport<AfDesign>> {
    s.validate()?;
    let k = s.k;
    let mut q = vec![s.p_b_max / k as f64; k];
    let mut g_r = 1.0;
    let mut best: Option<(AfDesign, f64)> = None;
    let mut t_prev = f64::INFINITY;
    let mut history = Vec::new();
    let (mut outer, mut inner_total) = (0, 0);
    let mut capped = true;
    while outer < OUTER_CAP {
        let inner = match balance_loop(s, ch, g_r, q.clone()) {
            Ok(r) => r,
            Err(Error::DegenerateChannel(_)) if best.is_none() => {
                let design = AfDesign { w: ComplexMatrix::zeros(s.m_b, k), p: vec![0.0; k], g_r, q };
                return Ok(infeasible_report(s, design, outer, inner_total, history));
            }
            Err(Error::DegenerateChannel(_)) => {
                capped = false;
                break;
            }
            Err(e) => return Err(e),
        };
        inner_total += inner.iterations;
        outer += 1;
        let (t, p, g_r_new) = match af_downlink_feasibility_gp(s, &inner.eff) {
            Ok(r) => r,
            Err(Error::Gp(_) | Error::DegenerateChannel(_)) if best.is_some() => {
                capped = false;
                break;
            }
            Err(e) => return Err(e),
        };
        if t > t_prev + MONOTONE_SLACK {
            // keep the previous, better design
            capped = false;
            break;
        }
        history.push(t);
        best = Some((AfDesign { w: inner.w, p, g_r: g_r_new, q: inner.q.clone() }, inner.c_u));
        if t <= 1.0 || converged(t_prev, t) {
            capped = false;
            break;
        }
        t_prev = t;
        g_r = g_r_new;
        q = inner.q;
    }
    let (design, c_u) = best.expect("at least one outer iteration");
    let t_final = *history.last().expect("history tracks accepted iterates");
    let status = if t_final <= 1.0 {
        SolveStatus::Feasible
    } else if capped {
        SolveStatus::MaxIter
    } else {
        SolveStatus::Infeasible
    };
    report(s, ch, status, design, c_u, outer, inner_total, history)
}

/// Sum-power minimization warm-started from a passed feasibility test.
pub fn af_minimize(s: &Scenario, ch: &ChannelRealization, warm: &AfDesign) -> Result<SolveReport<AfDesign>> {
    s.validate()?;
    let g_r = warm.g_r;
    let g_norm_sq: Vec<f64> = ch.g.iter().map(|g| g.norm_squared()).collect();
    let sigma_hat_sq = effective_noise(s, &g_norm_sq, g_r);
    let mut q = warm.q.clone();
    let mut w = warm.w.clone();
    let mut prev = f64::NAN;
    let mut inner = 0;
    while inner < INNER_CAP {
        let w_new = af_beamformers(ch, g_r, &q, &sigma_hat_sq)?;
        let eff = AfEffectiveChannel::new(s, ch, &w_new, g_r);
        inner += 1;
        match af_uplink_minpower(&eff, g_r, &s.gamma) {
            Ok(q_new) => {
                w = w_new;
                q = q_new;
            }
            Err(Error::InfeasibleAllocation { .. } | Error::DegenerateChannel(_)) => break,
            Err(e) => return Err(e),
        }
        let total: f64 = q.iter().sum();
        if converged(prev, total) {
            break;
        }
        prev = total;
    }
    let solved = af_downlink_minpower_gp(s, &AfEffectiveChannel::new(s, ch, &w, g_r)).or_else(|e| match e {
        Error::Gp(_) | Error::DegenerateChannel(_) => {
            w = warm.w.clone();
            af_downlink_minpower_gp(s, &AfEffectiveChannel::new(s, ch, &w, g_r))
        }
        e => Err(e),
    });
    match solved {
        Ok((sum_power, p, g_r)) => {
            let design = AfDesign { w, p, g_r, q };
            let mut r = report(s, ch, SolveStatus::Feasible, design, f64::NAN, 1, inner, vec![sum_power])?;
            r.balanced_level = 1.0 / r.t;
            if !r.achieved_sinr.iter().all(|v| v.is_finite()) {
                r.status = SolveStatus::Infeasible;
            }
            Ok(r)
        }
        Err(Error::Gp(_) | Error::DegenerateChannel(_)) => {
            let design = AfDesign { w, p: vec![0.0; s.k], g_r, q };
            Ok(infeasible_report(s, design, 1, inner, vec![]))
        }
        Err(e) => Err(e),
    }
}

/// Feasibility test followed, when it passes, by power minimization.
pub fn af_solve(s: &Scenario, ch: &ChannelRealization) -> Result<(SolveReport<AfDesign>, Option<SolveReport<AfDesign>>)> {
    let feas = af_feasibility(s, ch)?;
    if !feas.is_feasible() {
        return Ok((feas, None));
    }
    let min = af_minimize(s, ch, &feas.design)?;
    Ok((feas, Some(min)))
}
