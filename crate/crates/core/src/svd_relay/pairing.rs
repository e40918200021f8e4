//! Matching first-hop eigen-streams to second-hop users.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::gp::{self, GpProblem, Monomial, Posynomial};
use crate::numerics::ComplexMatrix;

use super::kernels::{gain_matrix, svd_beamformers};

/// Channel-to-interference-and-noise ratios used for pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct HopCinr {
    /// Per first-hop subchannel, in singular-value order.
    pub first_hop: Vec<f64>,
    /// Per user.
    pub second_hop: Vec<f64>,
    /// Running end-to-end CINR per stream along a relay chain.
    pub accumulated: Vec<f64>,
}

/// Second-hop CINR at unit power through relay-free broadcast beamformers:
/// `|g_kk|^2 / (sum_{i != k} |g_ki|^2 + 1)` on noise-normalized channels.
pub fn second_hop_cinr(gn: &ComplexMatrix) -> Result<Vec<f64>> {
    let k = gn.ncols();
    let a = svd_beamformers(gn, &vec![f64::INFINITY; k], &vec![1.0; k])?;
    let gains = gain_matrix(gn, &a);
    Ok((0..k)
        .map(|j| {
            let cross: f64 = (0..k).filter(|&i| i != j).map(|i| gains[(j, i)]).sum();
            gains[(j, j)] / (cross + 1.0)
        })
        .collect())
}

/// First-hop `lambda_j^2 / sigma_r^2` and second-hop CINRs.
pub fn hop_cinr(sigma: &[f64], gn: &ComplexMatrix, sigma_r_sq: f64) -> Result<HopCinr> {
    let first_hop: Vec<f64> = sigma.iter().take(gn.ncols()).map(|l| l * l / sigma_r_sq).collect();
    Ok(HopCinr { accumulated: first_hop.clone(), first_hop, second_hop: second_hop_cinr(gn)? })
}

/// Indices sorted by value, descending; ties keep the lower index first.
fn descending(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx
}

/// Indices sorted by value, ascending; ties keep the lower index first.
fn ascending(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// Pairs the r-th strongest first-hop subchannel with the r-th weakest user.
/// Returns `perm` with `perm[user] = subchannel`.
pub fn pair_subchannels(cinr: &HopCinr) -> Vec<usize> {
    let subs = descending(&cinr.first_hop);
    let users = ascending(&cinr.second_hop);
    let mut perm = vec![0; users.len()];
    for (&u, &s) in users.iter().zip(&subs) {
        perm[u] = s;
    }
    perm
}

/// Minimum `sum (p_k + q_k)` with stream `k` using first-hop CINR
/// `first[k]` and second-hop CINR `second[k]`, ignoring inter-stream coupling.
pub fn pairing_power(first: &[f64], second: &[f64], gamma: &[f64]) -> Result<f64> {
    let k = first.len();
    if second.len() != k || gamma.len() != k {
        return Err(Error::DimensionMismatch("pairing inputs differ in length".into()));
    }
    if !first.iter().chain(second).chain(gamma).all(|&v| v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidScenario("CINRs and targets must be positive".into()));
    }
    let n = 2 * k;
    let names = (1..=k).map(|i| format!("p{i}")).chain((1..=k).map(|i| format!("q{i}"))).collect();
    let objective = Posynomial::new((0..n).map(|i| Monomial::var(n, i)).collect());
    let mut prob = GpProblem::minimize_posynomial(names, &objective);
    let wide = n + 1;
    for s in 0..k {
        let (c1, c2, g) = (first[s], second[s], gamma[s]);
        let (p, q) = (s, k + s);
        prob.push(Posynomial::new(vec![
            Monomial::term(wide, g / (c1 * c2), &[(p, -1.0), (q, -1.0)]),
            Monomial::term(wide, g / c2, &[(q, -1.0)]),
            Monomial::term(wide, g / c1, &[(p, -1.0)]),
        ]));
    }
    Ok(gp::solve(&prob)?.into_optimal()?.objective_value)
}

/// Assignment minimizing [`pairing_power`] over all `K!` permutations.
pub fn exhaustive_pairing(first: &[f64], second: &[f64], gamma: &[f64]) -> Result<Vec<usize>> {
    let k = second.len();
    if k > 4 {
        return Err(Error::Unsupported("exhaustive pairing is limited to 4 users".into()));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..k).permutations(k) {
        let f: Vec<f64> = perm.iter().map(|&j| first[j]).collect();
        let power = pairing_power(&f, second, gamma)?;
        if best.as_ref().is_none_or(|(b, _)| power < *b) {
            best = Some((power, perm));
        }
    }
    Ok(best.expect("at least one permutation").1)
}

/// End-to-end SINR of a stream forwarded over hops with the given SINRs.
pub fn multihop_sinr(per_hop: &[f64]) -> f64 {
    per_hop.iter().copied().reduce(combine).unwrap_or(f64::INFINITY)
}

fn combine(a: f64, b: f64) -> f64 {
    match (a.is_infinite(), b.is_infinite()) {
        (true, _) => b,
        (_, true) => a,
        _ => a * b / (1.0 + a + b),
    }
}

/// Routes streams through a relay chain hop by hop, pairing the strongest
/// accumulated CINR with the weakest next-hop subchannel.
///
/// `relay_hops[n][j]` is the CINR of subchannel `j` on the hop into relay
/// `n + 1`; `final_hop[k]` is user `k`'s broadcast CINR. Returns
/// `routes[n][k]`: the subchannel carrying user `k`'s stream on hop `n`.
pub fn multihop_pairing(relay_hops: &[Vec<f64>], final_hop: &[f64]) -> Vec<Vec<usize>> {
    let k = final_hop.len();
    if relay_hops.is_empty() {
        return Vec::new();
    }
    // streams are labelled by their first-hop subchannel
    let mut paths: Vec<Vec<usize>> = (0..k).map(|j| vec![j]).collect();
    let mut acc: Vec<f64> = relay_hops[0][..k].to_vec();
    for hop in &relay_hops[1..] {
        let streams = descending(&acc);
        let subs = ascending(&hop[..k]);
        for (&st, &sub) in streams.iter().zip(&subs) {
            paths[st].push(sub);
            acc[st] = combine(acc[st], hop[sub]);
        }
    }
    let streams = descending(&acc);
    let users = ascending(final_hop);
    let mut routes = vec![vec![0; k]; relay_hops.len()];
    for (&st, &user) in streams.iter().zip(&users) {
        for (n, &sub) in paths[st].iter().enumerate() {
            routes[n][user] = sub;
        }
    }
    routes
}
