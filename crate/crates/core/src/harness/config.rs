//! Flat `key = value` scenario files.
//!
//! ```toml
//! m_b = 4
//! m_r = 4
//! k = 2
//! gamma = [3.0]          # dB; a single entry applies to every user
//! sigma_r_sq = 0.1
//! sigma_k_sq = [0.1]
//! p_b_max = 10.0
//! p_r_max = 10.0
//! d_bs_rs = 0.5
//! d_rs_ms = [0.5]
//! eta = 4.0
//! d0 = 1.0
//! hops = 2
//! p_r_max_hops = []
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::channel::{MultihopScenario, Scenario};
use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    m_b: usize,
    m_r: usize,
    k: usize,
    gamma: Vec<f64>,
    sigma_r_sq: f64,
    sigma_k_sq: Vec<f64>,
    p_b_max: f64,
    p_r_max: f64,
    d_bs_rs: f64,
    d_rs_ms: Vec<f64>,
    #[serde(default = "default_eta")]
    eta: f64,
    #[serde(default = "default_d0")]
    d0: f64,
    #[serde(default = "default_hops")]
    hops: usize,
    #[serde(default)]
    p_r_max_hops: Vec<f64>,
}

fn default_eta() -> f64 {
    4.0
}

fn default_d0() -> f64 {
    1.0
}

fn default_hops() -> usize {
    2
}

/// A scenario plus the hop count (`hops = 1` is relay-free broadcast,
/// `hops = 2` the single-relay channel).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub hops: usize,
    /// One cap per relay; empty means `p_r_max` at every relay.
    pub p_r_max_hops: Vec<f64>,
}

fn per_user(name: &str, v: Vec<f64>, k: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; k]),
        n if n == k => Ok(v),
        n => Err(Error::Config(format!("{name} has {n} entries, expected 1 or {k}"))),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let k = raw.k;
        let gamma_db = per_user("gamma", raw.gamma, k)?;
        let scenario = Scenario {
            m_b: raw.m_b,
            m_r: raw.m_r,
            k,
            gamma: gamma_db.into_iter().map(db_to_linear).collect(),
            sigma_r_sq: raw.sigma_r_sq,
            sigma_k_sq: per_user("sigma_k_sq", raw.sigma_k_sq, k)?,
            p_b_max: raw.p_b_max,
            p_r_max: raw.p_r_max,
            d_bs_rs: raw.d_bs_rs,
            d_rs_ms: per_user("d_rs_ms", raw.d_rs_ms, k)?,
            eta: raw.eta,
            d0: raw.d0,
        };
        let cfg = Self { scenario, hops: raw.hops, p_r_max_hops: raw.p_r_max_hops };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.hops == 0 {
            return Err(Error::Config("hops must be at least 1".into()));
        }
        let relays = self.hops - 1;
        if !self.p_r_max_hops.is_empty() && self.p_r_max_hops.len() != relays {
            return Err(Error::Config(format!("p_r_max_hops needs {relays} entries for {} hops", self.hops)));
        }
        Ok(())
    }

    pub fn relays(&self) -> usize {
        self.hops.saturating_sub(1)
    }

    /// The relay chain of this config. Each hop keeps the configured
    /// geometry: the first hop spans `d_bs_rs`, later relay hops too, and
    /// the broadcast hop spans `d_rs_ms`.
    pub fn multihop(&self) -> MultihopScenario {
        let relays = self.relays();
        let p_r_max_hops =
            if self.p_r_max_hops.is_empty() { vec![self.scenario.p_r_max; relays] } else { self.p_r_max_hops.clone() };
        MultihopScenario { base: self.scenario.clone(), relays, p_r_max_hops }
    }
}
