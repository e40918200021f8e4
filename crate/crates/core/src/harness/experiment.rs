//! Monte Carlo drivers: one channel draw per (axis point, trial), shared by
//! every scheme run on that point.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::af::{af_feasibility, af_solve};
use crate::channel::{generate, generate_multihop, trial_seed, MultihopScenario};
use crate::error::{Error, Result};
use crate::report::{SolveReport, SolveStatus};
use crate::svd_relay::{multihop_feasibility, multihop_solve, svd_feasibility, svd_solve, Pairing};

use super::config::{db_to_linear, ScenarioConfig};
use super::csv::emit_csv;

pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Af,
    Svd,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Af => "af",
            Scheme::Svd => "svd",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "af" => Ok(Scheme::Af),
            "svd" => Ok(Scheme::Svd),
            _ => Err(Error::Config(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    Af,
    Svd,
    Both,
}

impl SchemeSelection {
    pub fn schemes(&self) -> &'static [Scheme] {
        match self {
            SchemeSelection::Af => &[Scheme::Af],
            SchemeSelection::Svd => &[Scheme::Svd],
            SchemeSelection::Both => &[Scheme::Af, Scheme::Svd],
        }
    }
}

impl FromStr for SchemeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "af" => Ok(SchemeSelection::Af),
            "svd" => Ok(SchemeSelection::Svd),
            "both" => Ok(SchemeSelection::Both),
            _ => Err(Error::Config(format!("unknown scheme {s:?}, expected af, svd or both"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Common SINR target in dB.
    SinrTarget,
    /// `d_bs_rs / d_rs_ms` with the two-hop length kept fixed.
    DistanceRatio,
    Users,
    /// Equal BS and relay caps.
    PowerCap,
    /// Hop count with relays spread evenly over the configured length.
    Hops,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::SinrTarget => "sinr_target",
            Axis::DistanceRatio => "distance_ratio",
            Axis::Users => "users",
            Axis::PowerCap => "power_cap",
            Axis::Hops => "hops",
        }
    }

    /// Scenario at one axis point.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        let s = &mut c.scenario;
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{} needs positive integers, got {v}", self.as_str())))
            }
        };
        let length = s.d_bs_rs + s.d_rs_ms.iter().sum::<f64>() / s.k as f64;
        match self {
            Axis::SinrTarget => s.gamma = vec![db_to_linear(value); s.k],
            Axis::DistanceRatio => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::Config(format!("distance ratio must be positive, got {value}")));
                }
                s.d_bs_rs = length * value / (1.0 + value);
                s.d_rs_ms = vec![length / (1.0 + value); s.k];
            }
            Axis::Users => {
                let k = count(value)?;
                let cycle = |v: &[f64]| (0..k).map(|i| v[i % v.len()]).collect::<Vec<_>>();
                s.gamma = cycle(&s.gamma);
                s.sigma_k_sq = cycle(&s.sigma_k_sq);
                s.d_rs_ms = cycle(&s.d_rs_ms);
                s.k = k;
            }
            Axis::PowerCap => {
                s.p_b_max = value;
                s.p_r_max = value;
                c.p_r_max_hops.iter_mut().for_each(|p| *p = value);
            }
            Axis::Hops => {
                let hops = count(value)?;
                let ms = MultihopScenario::uniform(s.clone(), hops - 1, length);
                *s = ms.base;
                c.hops = hops;
                c.p_r_max_hops = ms.p_r_max_hops;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinr_target" => Ok(Axis::SinrTarget),
            "distance_ratio" => Ok(Axis::DistanceRatio),
            "users" => Ok(Axis::Users),
            "power_cap" => Ok(Axis::PowerCap),
            "hops" => Ok(Axis::Hops),
            _ => Err(Error::Config(format!("unknown axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scheme: SchemeSelection,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub pairing: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("axis values must not be empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("axis values must be strictly increasing".into()));
        }
        for &v in &self.values {
            let point = self.axis.apply(&self.config, v)?;
            if point.hops != 2 && self.scheme != SchemeSelection::Svd {
                return Err(Error::Config("the af scheme needs hops = 2".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrialStatus {
    Feasible,
    Infeasible,
    MaxIter,
    Error,
}

impl TrialStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialStatus::Feasible => "feasible",
            TrialStatus::Infeasible => "infeasible",
            TrialStatus::MaxIter => "max-iter",
            TrialStatus::Error => "error",
        }
    }
}

impl From<SolveStatus> for TrialStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Feasible => TrialStatus::Feasible,
            SolveStatus::Infeasible => TrialStatus::Infeasible,
            SolveStatus::MaxIter => TrialStatus::MaxIter,
        }
    }
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feasible" => Ok(TrialStatus::Feasible),
            "infeasible" => Ok(TrialStatus::Infeasible),
            "max-iter" => Ok(TrialStatus::MaxIter),
            "error" => Ok(TrialStatus::Error),
            _ => Err(Error::Config(format!("unknown status {s:?}"))),
        }
    }
}

/// Outcome of one scheme on one channel draw.
///
/// Values come from the minimization when the feasibility test passed, and
/// from the feasibility test otherwise; `balanced_level` always comes from
/// the feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub axis: f64,
    pub trial: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub status: TrialStatus,
    /// The feasibility test reached `t <= 1` and minimization ran.
    pub passed: bool,
    pub t: f64,
    pub balanced_level: f64,
    pub p_b: f64,
    pub p_r: f64,
    pub sum_power: f64,
    pub feas_outer: usize,
    pub min_outer: usize,
    pub inner_iters: usize,
    pub sinr: Vec<f64>,
}

impl TrialRecord {
    pub fn outer_iters(&self) -> usize {
        self.feas_outer + self.min_outer
    }

    fn failed(axis: f64, trial: usize, seed: u64, scheme: Scheme, k: usize) -> Self {
        Self {
            axis,
            trial,
            seed,
            scheme,
            status: TrialStatus::Error,
            passed: false,
            t: f64::NAN,
            balanced_level: f64::NAN,
            p_b: f64::NAN,
            p_r: f64::NAN,
            sum_power: f64::NAN,
            feas_outer: 0,
            min_outer: 0,
            inner_iters: 0,
            sinr: vec![f64::NAN; k],
        }
    }

    fn from_reports<D>(
        axis: f64,
        trial: usize,
        seed: u64,
        scheme: Scheme,
        feas: &SolveReport<D>,
        min: Option<&SolveReport<D>>,
    ) -> Self {
        let last = min.unwrap_or(feas);
        Self {
            axis,
            trial,
            seed,
            scheme,
            status: last.status.into(),
            passed: min.is_some(),
            t: last.t,
            balanced_level: feas.balanced_level,
            p_b: last.p_b,
            p_r: last.p_r,
            sum_power: last.sum_power,
            feas_outer: feas.outer_iterations,
            min_outer: min.map_or(0, |m| m.outer_iterations),
            inner_iters: feas.inner_iterations + min.map_or(0, |m| m.inner_iterations),
            sinr: last.achieved_sinr.clone(),
        }
    }
}

type Solved<D> = Result<(SolveReport<D>, Option<SolveReport<D>>)>;

fn record<D>(axis: f64, trial: usize, seed: u64, scheme: Scheme, k: usize, r: Solved<D>) -> TrialRecord {
    match r {
        Ok((feas, min)) => TrialRecord::from_reports(axis, trial, seed, scheme, &feas, min.as_ref()),
        Err(_) => TrialRecord::failed(axis, trial, seed, scheme, k),
    }
}

/// Runs every requested scheme on one channel draw.
pub fn run_trial(point: &ScenarioConfig, schemes: &[Scheme], pairing: bool, axis: f64, trial: usize, seed: u64) -> Vec<TrialRecord> {
    let s = &point.scenario;
    let pairing = if pairing { Pairing::Heuristic } else { Pairing::Identity };
    if point.hops == 2 {
        let ch = generate(s, seed);
        schemes
            .iter()
            .map(|&scheme| match scheme {
                Scheme::Af => record(axis, trial, seed, scheme, s.k, af_solve(s, &ch)),
                Scheme::Svd => record(axis, trial, seed, scheme, s.k, svd_solve(s, &ch, &pairing)),
            })
            .collect()
    } else {
        let ms = point.multihop();
        let ch = generate_multihop(&ms, seed);
        schemes
            .iter()
            .map(|&scheme| match scheme {
                Scheme::Af => TrialRecord::failed(axis, trial, seed, scheme, s.k),
                Scheme::Svd => record(axis, trial, seed, scheme, s.k, multihop_solve(&ms, &ch, &pairing)),
            })
            .collect()
    }
}

fn only<D>(r: Result<SolveReport<D>>) -> Solved<D> {
    r.map(|f| (f, None))
}

/// Feasibility test only, one record per scheme; `passed` stays false.
pub fn run_feasibility(point: &ScenarioConfig, schemes: &[Scheme], pairing: bool, axis: f64, trial: usize, seed: u64) -> Vec<TrialRecord> {
    let s = &point.scenario;
    let pairing = if pairing { Pairing::Heuristic } else { Pairing::Identity };
    if point.hops == 2 {
        let ch = generate(s, seed);
        schemes
            .iter()
            .map(|&scheme| match scheme {
                Scheme::Af => record(axis, trial, seed, scheme, s.k, only(af_feasibility(s, &ch))),
                Scheme::Svd => record(axis, trial, seed, scheme, s.k, only(svd_feasibility(s, &ch, &pairing))),
            })
            .collect()
    } else {
        let ms = point.multihop();
        let ch = generate_multihop(&ms, seed);
        schemes
            .iter()
            .map(|&scheme| match scheme {
                Scheme::Af => TrialRecord::failed(axis, trial, seed, scheme, s.k),
                Scheme::Svd => record(axis, trial, seed, scheme, s.k, only(multihop_feasibility(&ms, &ch, &pairing))),
            })
            .collect()
    }
}

/// All records of an experiment, sorted by axis point, trial and scheme.
/// Writes the CSV when `spec.out` is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let points = spec.values.iter().map(|&v| Ok((v, spec.axis.apply(&spec.config, v)?))).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let mut records: Vec<(usize, TrialRecord)> = jobs
        .par_iter()
        .flat_map_iter(|&(p, trial)| {
            let (value, point) = &points[p];
            let seed = trial_seed(spec.seed, trial as u64);
            run_trial(point, spec.scheme.schemes(), spec.pairing, *value, trial, seed).into_iter().map(move |r| (p, r))
        })
        .collect();
    records.sort_by_key(|(p, r)| (*p, r.trial, r.scheme));
    let records: Vec<TrialRecord> = records.into_iter().map(|(_, r)| r).collect();
    if let Some(out) = &spec.out {
        emit_csv(&records, out)?;
    }
    Ok(records)
}

/// Mean outer iterations per draw:
/// `f (I_test + I_power) + (1 - f) I_fail` where `f` is the fraction of draws
/// passing the feasibility test, `I_test` and `I_power` are mean feasibility
/// and minimization iterations over those draws, and `I_fail` is the mean
/// feasibility iterations over the rest.
pub fn avg_iterations(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Config("no records to average".into()));
    }
    let mean = |v: Vec<usize>| if v.is_empty() { 0.0 } else { v.iter().sum::<usize>() as f64 / v.len() as f64 };
    let (ok, fail): (Vec<&TrialRecord>, Vec<&TrialRecord>) = records.iter().partition(|r| r.passed);
    let frac = ok.len() as f64 / records.len() as f64;
    let test = mean(ok.iter().map(|r| r.feas_outer).collect());
    let power = mean(ok.iter().map(|r| r.min_outer).collect());
    let fail = mean(fail.iter().map(|r| r.feas_outer).collect());
    Ok(frac * (test + power) + (1.0 - frac) * fail)
}
