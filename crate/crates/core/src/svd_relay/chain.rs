//! Alternating design loop shared by the two-hop and multi-relay schemes.
//!
//! Power is carried as one vector per transmitting stage (BS first, the
//! broadcasting station last). The broadcasting station's beamformers come
//! from the virtual uplink; all stage powers come from a GP.

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RealMatrix};
use crate::report::{converged, SolveStatus, INNER_CAP, MONOTONE_SLACK, OUTER_CAP};

use super::kernels::{gain_matrix, svd_beamformers, svd_uplink_balance, svd_uplink_minpower};

pub(crate) trait Chain {
    fn gamma(&self) -> &[f64];
    /// Noise-normalized channels of the broadcasting station.
    fn channels(&self) -> &ComplexMatrix;
    /// Sum-power cap of the broadcasting station.
    fn broadcast_cap(&self) -> f64;
    fn initial_powers(&self) -> Vec<Vec<f64>>;
    /// SINR each stream carries into the broadcasting station.
    fn alpha(&self, powers: &[Vec<f64>]) -> Vec<f64>;
    fn feasibility_gp(&self, gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)>;
    fn minpower_gp(&self, gains: &RealMatrix) -> Result<(f64, Vec<Vec<f64>>)>;
}

#[derive(Debug, Clone)]
pub(crate) struct ChainOutcome {
    pub status: SolveStatus,
    pub powers: Vec<Vec<f64>>,
    pub a: ComplexMatrix,
    pub q_r: Vec<f64>,
    pub balanced_level: f64,
    pub history: Vec<f64>,
    pub outer: usize,
    pub inner: usize,
}

/// Beamformer / balancing alternation at fixed `alpha`.
#[derive(Debug, Clone)]
pub struct BalanceOutcome {
    pub a: ComplexMatrix,
    pub q: Vec<f64>,
    pub balanced_level: f64,
    pub iterations: usize,
}

/// Alternates relay beamformer updates with uplink balancing until the
/// balanced level settles.
pub fn svd_balance_loop(gn: &ComplexMatrix, alpha: &[f64], gamma: &[f64], p_max: f64, q0: &[f64]) -> Result<BalanceOutcome> {
    let mut q = q0.to_vec();
    let mut prev = f64::NAN;
    let mut iterations = 0;
    loop {
        let a = svd_beamformers(gn, alpha, &q)?;
        let (c, q_new) = svd_uplink_balance(&gain_matrix(gn, &a), alpha, gamma, p_max)?;
        iterations += 1;
        q = q_new;
        if converged(prev, c) || iterations >= INNER_CAP {
            return Ok(BalanceOutcome { a, q, balanced_level: c, iterations });
        }
        prev = c;
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::Gp(_) | Error::DegenerateChannel(_) | Error::InfeasibleAllocation { .. })
}

pub(crate) fn chain_feasibility(chain: &impl Chain) -> Result<ChainOutcome> {
    let gn = chain.channels();
    let k = gn.ncols();
    let mut powers = chain.initial_powers();
    let mut q = vec![chain.broadcast_cap() / k as f64; k];
    let mut best: Option<ChainOutcome> = None;
    let mut t_prev = f64::INFINITY;
    let mut history = Vec::new();
    let (mut outer, mut inner) = (0, 0);
    let mut capped = true;
    while outer < OUTER_CAP {
        let alpha = chain.alpha(&powers);
        let bal = match svd_balance_loop(gn, &alpha, chain.gamma(), chain.broadcast_cap(), &q) {
            Ok(b) => b,
            Err(e) if recoverable(&e) => {
                capped = false;
                break;
            }
            Err(e) => return Err(e),
        };
        inner += bal.iterations;
        outer += 1;
        let (t, new_powers) = match chain.feasibility_gp(&gain_matrix(gn, &bal.a)) {
            Ok(r) => r,
            Err(e) if recoverable(&e) => {
                capped = false;
                break;
            }
            Err(e) => return Err(e),
        };
        if t > t_prev + MONOTONE_SLACK {
            capped = false;
            break;
        }
        history.push(t);
        best = Some(ChainOutcome {
            status: SolveStatus::Infeasible,
            powers: new_powers.clone(),
            a: bal.a,
            q_r: bal.q.clone(),
            balanced_level: bal.balanced_level,
            history: Vec::new(),
            outer: 0,
            inner: 0,
        });
        if t <= 1.0 || converged(t_prev, t) {
            capped = false;
            break;
        }
        t_prev = t;
        powers = new_powers;
        q = bal.q;
    }
    let Some(mut out) = best else {
        return Ok(ChainOutcome {
            status: SolveStatus::Infeasible,
            powers,
            a: ComplexMatrix::zeros(gn.nrows(), k),
            q_r: q,
            balanced_level: 0.0,
            history,
            outer,
            inner,
        });
    };
    let t = *history.last().expect("accepted iterate");
    out.status = if t <= 1.0 {
        SolveStatus::Feasible
    } else if capped {
        SolveStatus::MaxIter
    } else {
        SolveStatus::Infeasible
    };
    out.history = history;
    out.outer = outer;
    out.inner = inner;
    Ok(out)
}

/// Alternating power minimization warm-started from a passed feasibility test.
pub(crate) fn chain_minimize(chain: &impl Chain, warm: &ChainOutcome) -> Result<ChainOutcome> {
    let gn = chain.channels();
    let mut powers = warm.powers.clone();
    let mut q = warm.q_r.clone();
    let mut a = warm.a.clone();
    let mut best: Option<ChainOutcome> = None;
    let mut prev_sum = f64::INFINITY;
    let mut history = Vec::new();
    let (mut outer, mut inner) = (0, 0);
    let mut capped = true;
    while outer < OUTER_CAP {
        let alpha = chain.alpha(&powers);
        let mut prev_q = f64::NAN;
        for _ in 0..INNER_CAP {
            let a_new = svd_beamformers(gn, &alpha, &q)?;
            inner += 1;
            match svd_uplink_minpower(&gain_matrix(gn, &a_new), &alpha, chain.gamma()) {
                Ok(q_new) => {
                    a = a_new;
                    q = q_new;
                }
                Err(e) if recoverable(&e) => break,
                Err(e) => return Err(e),
            }
            let total: f64 = q.iter().sum();
            if converged(prev_q, total) {
                break;
            }
            prev_q = total;
        }
        outer += 1;
        let mut solved = chain.minpower_gp(&gain_matrix(gn, &a));
        if best.is_none() {
            if let Err(e) = &solved {
                if recoverable(e) {
                    a = warm.a.clone();
                    solved = chain.minpower_gp(&gain_matrix(gn, &a));
                }
            }
        }
        let (sum, new_powers) = match solved {
            Ok(r) => r,
            Err(e) if recoverable(&e) => {
                capped = false;
                break;
            }
            Err(e) => return Err(e),
        };
        if sum > prev_sum * (1.0 + MONOTONE_SLACK) {
            capped = false;
            break;
        }
        history.push(sum);
        best = Some(ChainOutcome {
            status: SolveStatus::Feasible,
            powers: new_powers.clone(),
            a: a.clone(),
            q_r: q.clone(),
            balanced_level: f64::NAN,
            history: Vec::new(),
            outer: 0,
            inner: 0,
        });
        if converged(prev_sum, sum) {
            capped = false;
            break;
        }
        prev_sum = sum;
        powers = new_powers;
    }
    match best {
        Some(mut out) => {
            if capped {
                out.status = SolveStatus::MaxIter;
            }
            out.history = history;
            out.outer = outer;
            out.inner = inner;
            Ok(out)
        }
        None => Ok(ChainOutcome {
            status: SolveStatus::Infeasible,
            powers,
            a,
            q_r: q,
            balanced_level: 0.0,
            history,
            outer,
            inner,
        }),
    }
}
