//! Driver output shared by both relaying schemes.

/// Convergence threshold for balanced levels, uplink power sums and `t`.
pub const EPSILON: f64 = 1e-3;
pub const OUTER_CAP: usize = 50;
pub const INNER_CAP: usize = 200;
/// Allowed growth of `t` between accepted outer iterations.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    MaxIter,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIter => "max-iter",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<D> {
    pub status: SolveStatus,
    /// `max_k gamma_k / SINR_k`; targets are met iff `t <= 1`.
    pub t: f64,
    pub balanced_level: f64,
    pub p_b: f64,
    /// Total relay power (summed over relays in a chain).
    pub p_r: f64,
    pub sum_power: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub achieved_sinr: Vec<f64>,
    /// Accepted `t` (feasibility) or sum power (minimization) per outer iteration.
    pub t_history: Vec<f64>,
    pub design: D,
}

impl<D> SolveReport<D> {
    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }

    pub fn map_design<E>(self, f: impl FnOnce(D) -> E) -> SolveReport<E> {
        SolveReport {
            status: self.status,
            t: self.t,
            balanced_level: self.balanced_level,
            p_b: self.p_b,
            p_r: self.p_r,
            sum_power: self.sum_power,
            outer_iterations: self.outer_iterations,
            inner_iterations: self.inner_iterations,
            achieved_sinr: self.achieved_sinr,
            t_history: self.t_history,
            design: f(self.design),
        }
    }
}

/// Relative convergence test, absolute below unit magnitude.
pub(crate) fn converged(prev: f64, cur: f64) -> bool {
    prev.is_finite() && (cur - prev).abs() < EPSILON * cur.abs().max(1.0)
}

/// `max_k gamma_k / sinr_k`.
pub(crate) fn worst_ratio(gamma: &[f64], sinr: &[f64]) -> f64 {
    gamma.iter().zip(sinr).map(|(g, s)| g / s).fold(0.0, f64::max)
}
