//! Chains of eigen-channel relays. Every relay receives along its incoming
//! hop's left singular vectors, renormalizes each stream, and forwards it on
//! the next hop's right singular vectors; the last station beamforms to users.

use crate::channel::{verify_multihop, MultihopChannel, MultihopScenario};
use crate::error::{Error, Result};
use crate::gp::{self, GpProblem, Monomial, Posynomial};
use crate::numerics::{ComplexMatrix, RealMatrix};
use crate::report::{worst_ratio, SolveReport, SolveStatus};

use super::chain::{chain_feasibility, chain_minimize, Chain, ChainOutcome};
use super::kernels::normalized_channels;
use super::pairing::{multihop_pairing, multihop_sinr, second_hop_cinr};
use super::{leading_triplets, scale_columns, Pairing, MIN_GAIN};

/// Routed eigen-channels of every relay hop.
#[derive(Debug, Clone)]
pub struct MultihopSetup {
    /// `u[n]`, `v[n]`: singular vectors of hop `n` in user order.
    pub u: Vec<ComplexMatrix>,
    pub v: Vec<ComplexMatrix>,
    /// `lambdas[n][k]`: singular value carrying user `k` on hop `n`.
    pub lambdas: Vec<Vec<f64>>,
    pub routes: Vec<Vec<usize>>,
    pub gn: ComplexMatrix,
}

impl MultihopSetup {
    pub fn new(ms: &MultihopScenario, ch: &MultihopChannel, pairing: &Pairing) -> Result<Self> {
        ms.validate()?;
        let k = ms.base.k;
        let triplets = ch.hops.iter().map(|h| leading_triplets(h, k)).collect::<Result<Vec<_>>>()?;
        let gn = normalized_channels(&ch.g, &ms.base.sigma_k_sq);
        let routes = match pairing {
            Pairing::Identity => vec![(0..k).collect(); ms.relays],
            Pairing::Heuristic => {
                let relay_cinr: Vec<Vec<f64>> = triplets
                    .iter()
                    .map(|(_, s, _)| s.iter().map(|l| l * l / ms.base.sigma_r_sq).collect())
                    .collect();
                multihop_pairing(&relay_cinr, &second_hop_cinr(&gn)?)
            }
            Pairing::Exhaustive | Pairing::Fixed(_) => {
                return Err(Error::Unsupported("relay chains take identity or heuristic routing".into()))
            }
        };
        Self::assemble(triplets, routes, gn)
    }

    /// Uses explicit `routes[n][k]` subchannel assignments.
    pub fn with_routes(ms: &MultihopScenario, ch: &MultihopChannel, routes: Vec<Vec<usize>>) -> Result<Self> {
        ms.validate()?;
        let k = ms.base.k;
        if routes.len() != ms.relays || routes.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("one route per relay hop and user".into()));
        }
        let triplets = ch.hops.iter().map(|h| leading_triplets(h, k)).collect::<Result<Vec<_>>>()?;
        Self::assemble(triplets, routes, normalized_channels(&ch.g, &ms.base.sigma_k_sq))
    }

    fn assemble(
        triplets: Vec<(ComplexMatrix, Vec<f64>, ComplexMatrix)>,
        routes: Vec<Vec<usize>>,
        gn: ComplexMatrix,
    ) -> Result<Self> {
        let pick = |m: &ComplexMatrix, r: &[usize]| {
            ComplexMatrix::from_columns(&r.iter().map(|&j| m.column(j).into_owned()).collect::<Vec<_>>())
        };
        let mut u = Vec::new();
        let mut v = Vec::new();
        let mut lambdas = Vec::new();
        for ((tu, ts, tv), r) in triplets.iter().zip(&routes) {
            u.push(pick(tu, r));
            v.push(pick(tv, r));
            lambdas.push(r.iter().map(|&j| ts[j]).collect());
        }
        Ok(Self { u, v, lambdas, routes, gn })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultihopDesign {
    pub u: Vec<ComplexMatrix>,
    pub v: Vec<ComplexMatrix>,
    pub lambdas: Vec<Vec<f64>>,
    pub routes: Vec<Vec<usize>>,
    /// Beamformers of the last transmitting station.
    pub a: ComplexMatrix,
    /// `powers[0]` at the BS, `powers[n]` at relay `n`.
    pub powers: Vec<Vec<f64>>,
    pub q_r: Vec<f64>,
}

impl MultihopDesign {
    pub fn relays(&self) -> usize {
        self.u.len()
    }

    pub fn precoder(&self) -> ComplexMatrix {
        let w: Vec<f64> = self.powers[0].iter().map(|p| p.sqrt()).collect();
        if self.relays() == 0 {
            scale_columns(&self.a, &w)
        } else {
            scale_columns(&self.v[0], &w)
        }
    }

    /// Relay processing matrices, first relay first.
    pub fn relay_matrices(&self, sigma_r_sq: f64) -> Vec<ComplexMatrix> {
        let n_relays = self.relays();
        (0..n_relays)
            .map(|n| {
                let tx = if n + 1 < n_relays { &self.v[n + 1] } else { &self.a };
                let w: Vec<f64> = (0..self.a.ncols())
                    .map(|k| {
                        let l = self.lambdas[n][k];
                        let eps = 1.0 / (l * l * self.powers[n][k] + sigma_r_sq).sqrt();
                        self.powers[n + 1][k].sqrt() * eps
                    })
                    .collect();
                scale_columns(tx, &w) * self.u[n].adjoint()
            })
            .collect()
    }
}

fn caps(ms: &MultihopScenario) -> Vec<f64> {
    std::iter::once(ms.base.p_b_max).chain(ms.p_r_max_hops.iter().copied()).collect()
}

fn var(k: usize, stage: usize, user: usize) -> usize {
    stage * k + user
}

/// Inverse end-to-end SINR of user `k` as a posynomial over all stage powers.
fn inverse_sinr(n_vars: usize, k: usize, users: usize, lambdas: &[Vec<f64>], sigma_r_sq: f64, gains: &RealMatrix) -> Posynomial {
    let stages = lambdas.len();
    let g_kk = gains[(k, k)];
    let last = |u: usize| var(users, stages, u);
    let mut b_terms: Vec<Monomial> = (0..users)
        .filter(|&i| i != k && gains[(k, i)] > 0.0)
        .map(|i| Monomial::term(n_vars, gains[(k, i)] / g_kk, &[(last(i), 1.0), (last(k), -1.0)]))
        .collect();
    b_terms.push(Monomial::term(n_vars, 1.0 / g_kk, &[(last(k), -1.0)]));
    let b = Posynomial::new(b_terms);
    let hop = |n: usize| {
        let l = lambdas[n][k];
        Posynomial::from(Monomial::term(n_vars, sigma_r_sq / (l * l), &[(var(users, n, k), -1.0)]))
    };
    let Some(mut acc) = (!lambdas.is_empty()).then(|| hop(0)) else {
        return b;
    };
    for n in 1..stages {
        let h = hop(n);
        acc = &(&(&acc * &h) + &acc) + &h;
    }
    &(&(&acc * &b) + &acc) + &b
}

fn check_gains(gains: &RealMatrix) -> Result<()> {
    for k in 0..gains.nrows() {
        if gains[(k, k)].sqrt() < MIN_GAIN {
            return Err(Error::DegenerateChannel(format!("stream {k} is orthogonal to its beam")));
        }
    }
    Ok(())
}

fn stage_names(k: usize, stages: usize) -> Vec<String> {
    (0..stages).flat_map(|s| (1..=k).map(move |i| if s == 0 { format!("p{i}") } else { format!("p{s}_{i}") })).collect()
}

fn split(x: &[f64], k: usize, stages: usize) -> Vec<Vec<f64>> {
    (0..stages).map(|s| x[s * k..(s + 1) * k].to_vec()).collect()
}

fn push_caps(prob: &mut GpProblem, n_vars: usize, k: usize, caps: &[f64]) {
    for (s, &cap) in caps.iter().enumerate() {
        let sum = Posynomial::new((0..k).map(|i| Monomial::var(n_vars, var(k, s, i))).collect());
        prob.push_le(&sum, &Monomial::constant(n_vars, cap));
    }
}

/// Min-max of `gamma_k / SINR_k` over every station's stream powers for
/// fixed final beamformers. Returns `(t, powers per stage)`.
pub fn multihop_feasibility_gp(ms: &MultihopScenario, lambdas: &[Vec<f64>], gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)> {
    check_gains(gains)?;
    let k = ms.base.k;
    let stages = ms.relays + 1;
    let n = stages * k + 1;
    let t = n - 1;
    let mut names = stage_names(k, stages);
    names.push("t".into());
    let mut prob = GpProblem::new(names, Monomial::var(n, t));
    for user in 0..k {
        let inv = inverse_sinr(n, user, k, lambdas, ms.base.sigma_r_sq, gains).scale(ms.base.gamma[user]);
        prob.push_le(&inv, &Monomial::var(n, t));
    }
    push_caps(&mut prob, n, k, &caps(ms));
    let sol = gp::solve(&prob)?.into_optimal()?;
    Ok((sol.objective_value, split(&sol.variables, k, stages)))
}

/// Minimum total power over all stations meeting every target for fixed
/// final beamformers. Returns `(sum_power, powers per stage)`.
pub fn multihop_minpower_gp(ms: &MultihopScenario, lambdas: &[Vec<f64>], gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)> {
    check_gains(gains)?;
    let k = ms.base.k;
    let stages = ms.relays + 1;
    let n = stages * k;
    let objective = Posynomial::new((0..n).map(|i| Monomial::var(n, i)).collect());
    let mut prob = GpProblem::minimize_posynomial(stage_names(k, stages), &objective);
    let wide = n + 1;
    for user in 0..k {
        prob.push(inverse_sinr(wide, user, k, lambdas, ms.base.sigma_r_sq, gains).scale(ms.base.gamma[user]));
    }
    push_caps(&mut prob, wide, k, &caps(ms));
    let sol = gp::solve(&prob)?.into_optimal()?;
    Ok((sol.objective_value, split(&sol.variables, k, stages)))
}

struct Relays<'a> {
    ms: &'a MultihopScenario,
    setup: &'a MultihopSetup,
}

impl Chain for Relays<'_> {
    fn gamma(&self) -> &[f64] {
        &self.ms.base.gamma
    }

    fn channels(&self) -> &ComplexMatrix {
        &self.setup.gn
    }

    fn broadcast_cap(&self) -> f64 {
        *caps(self.ms).last().expect("at least the BS cap")
    }

    fn initial_powers(&self) -> Vec<Vec<f64>> {
        let k = self.ms.base.k;
        caps(self.ms).iter().map(|c| vec![c / k as f64; k]).collect()
    }

    fn alpha(&self, powers: &[Vec<f64>]) -> Vec<f64> {
        let sr = self.ms.base.sigma_r_sq;
        (0..self.ms.base.k)
            .map(|k| {
                let hops: Vec<f64> =
                    self.setup.lambdas.iter().enumerate().map(|(n, l)| powers[n][k] * l[k] * l[k] / sr).collect();
                multihop_sinr(&hops)
            })
            .collect()
    }

    fn feasibility_gp(&self, gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)> {
        multihop_feasibility_gp(self.ms, &self.setup.lambdas, gains)
    }

    fn minpower_gp(&self, gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)> {
        multihop_minpower_gp(self.ms, &self.setup.lambdas, gains)
    }
}

fn finish(ms: &MultihopScenario, ch: &MultihopChannel, setup: &MultihopSetup, out: ChainOutcome) -> Result<SolveReport<MultihopDesign>> {
    let design = MultihopDesign {
        u: setup.u.clone(),
        v: setup.v.clone(),
        lambdas: setup.lambdas.clone(),
        routes: setup.routes.clone(),
        a: out.a,
        powers: out.powers,
        q_r: out.q_r,
    };
    let k = ms.base.k;
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
            achieved_sinr: vec![0.0; k],
            t_history: out.history,
            design,
        });
    }
    let v = verify_multihop(ms, ch, &design.precoder(), &design.relay_matrices(ms.base.sigma_r_sq))?;
    let t = worst_ratio(&ms.base.gamma, &v.sinr);
    let balanced_level = if out.balanced_level.is_nan() { 1.0 / t } else { out.balanced_level };
    let p_r: f64 = v.p_r.iter().sum();
    Ok(SolveReport {
        status: out.status,
        t,
        balanced_level,
        p_b: v.p_b,
        p_r,
        sum_power: v.p_b + p_r,
        outer_iterations: out.outer,
        inner_iterations: out.inner,
        achieved_sinr: v.sinr,
        t_history: out.history,
        design,
    })
}

pub fn multihop_feasibility(ms: &MultihopScenario, ch: &MultihopChannel, pairing: &Pairing) -> Result<SolveReport<MultihopDesign>> {
    let setup = MultihopSetup::new(ms, ch, pairing)?;
    let out = chain_feasibility(&Relays { ms, setup: &setup })?;
    finish(ms, ch, &setup, out)
}

pub fn multihop_minimize(ms: &MultihopScenario, ch: &MultihopChannel, warm: &MultihopDesign) -> Result<SolveReport<MultihopDesign>> {
    let setup = MultihopSetup::with_routes(ms, ch, warm.routes.clone())?;
    let start = ChainOutcome {
        status: SolveStatus::Feasible,
        powers: warm.powers.clone(),
        a: warm.a.clone(),
        q_r: warm.q_r.clone(),
        balanced_level: f64::NAN,
        history: Vec::new(),
        outer: 0,
        inner: 0,
    };
    let out = chain_minimize(&Relays { ms, setup: &setup }, &start)?;
    finish(ms, ch, &setup, out)
}

/// Minimization over a fixed routing, run after a feasibility test on it.
pub fn multihop_solve_routed(
    ms: &MultihopScenario,
    ch: &MultihopChannel,
    routes: Vec<Vec<usize>>,
) -> Result<(SolveReport<MultihopDesign>, Option<SolveReport<MultihopDesign>>)> {
    let setup = MultihopSetup::with_routes(ms, ch, routes)?;
    let out = chain_feasibility(&Relays { ms, setup: &setup })?;
    let feas = finish(ms, ch, &setup, out)?;
    if !feas.is_feasible() {
        return Ok((feas, None));
    }
    let min = multihop_minimize(ms, ch, &feas.design)?;
    Ok((feas, Some(min)))
}

pub fn multihop_solve(
    ms: &MultihopScenario,
    ch: &MultihopChannel,
    pairing: &Pairing,
) -> Result<(SolveReport<MultihopDesign>, Option<SolveReport<MultihopDesign>>)> {
    let feas = multihop_feasibility(ms, ch, pairing)?;
    if !feas.is_feasible() {
        return Ok((feas, None));
    }
    let min = multihop_minimize(ms, ch, &feas.design)?;
    Ok((feas, Some(min)))
}
