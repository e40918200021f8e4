//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use relaybf::af::{af_downlink_balance, af_downlink_minpower_gp, af_solve, af_uplink_balance, AfEffectiveChannel};
use relaybf::channel::{generate, generate_multihop, verify_sinr, MultihopScenario, Scenario};
use relaybf::gp::{self, GpProblem, Monomial, Posynomial};
use relaybf::numerics::ComplexMatrix;
use relaybf::svd_relay::{
    broadcast_balancing, gain_matrix, multihop_solve, normalized_channels, pair_subchannels, pairing_power,
    sufficient_condition, svd_balance_loop, svd_beamformers, svd_downlink_minpower, svd_minpower_gp, svd_solve,
    svd_uplink_balance, svd_uplink_minpower, uplink_radius, HopCinr, Pairing, SvdSetup,
};

use common::{angle, barrier_min, bisect, db, grid_min, log_uniform, random_matrix, random_scenario, rel, unit_columns};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// 1 ------------------------------------------------------------------------

fn ground_truth_verification() -> Outcome {
    struct Row {
        checked: usize,
        worst_ratio: f64,
        worst_cap: f64,
        seconds: f64,
        errors: usize,
    }
    let rows: Vec<Row> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
            let k = 2 + (i % 3) as usize;
            let s = random_scenario(&mut rng, k);
            let ch = generate(&s, i);
            let start = Instant::now();
            let af = af_solve(&s, &ch);
            let svd = svd_solve(&s, &ch, &Pairing::Heuristic);
            let seconds = start.elapsed().as_secs_f64();
            let mut row = Row { checked: 0, worst_ratio: f64::INFINITY, worst_cap: f64::NEG_INFINITY, seconds, errors: 0 };
            let mut check = |f: &ComplexMatrix, q: &ComplexMatrix| {
                let v = verify_sinr(&s, &ch, f, q).expect("dimensions");
                row.checked += 1;
                row.worst_ratio = row.worst_ratio.min(v.min_ratio(&s.gamma));
                row.worst_cap = row.worst_cap.max(v.p_b - s.p_b_max).max(v.p_r - s.p_r_max);
            };
            match af {
                Ok((_, Some(m))) if m.is_feasible() => check(&m.design.precoder(), &m.design.relay_matrix(s.m_r)),
                Ok(_) => {}
                Err(_) => row.errors += 1,
            }
            match svd {
                Ok((_, Some(m))) if m.is_feasible() => check(&m.design.precoder(), &m.design.relay_matrix()),
                Ok(_) => {}
                Err(_) => row.errors += 1,
            }
            row
        })
        .collect();
    let checked: usize = rows.iter().map(|r| r.checked).sum();
    let errors: usize = rows.iter().map(|r| r.errors).sum();
    let worst_ratio = rows.iter().map(|r| r.worst_ratio).fold(f64::INFINITY, f64::min);
    let worst_cap = rows.iter().map(|r| r.worst_cap).fold(f64::NEG_INFINITY, f64::max);
    let slowest = rows.iter().map(|r| r.seconds).fold(0.0, f64::max);
    outcome(
        checked > 0 && errors == 0 && worst_ratio >= 1.0 - 1e-4 && worst_cap <= 1e-8 && slowest < 1.0,
        format!(
            "{checked} feasible designs, min SINR/target {worst_ratio:.8}, max cap excess {worst_cap:.2e}, \
             slowest instance {slowest:.3}s, {errors} solver errors"
        ),
    )
}

// 2 ------------------------------------------------------------------------

struct RandomGp {
    n: usize,
    objective: Vec<(f64, Vec<f64>)>,
    constraints: Vec<Vec<(f64, Vec<f64>)>>,
}

fn eval(p: &[(f64, Vec<f64>)], x: &[f64]) -> f64 {
    p.iter().map(|(c, e)| c * x.iter().zip(e).map(|(x, e)| x.powf(*e)).product::<f64>()).sum()
}

fn random_gp(rng: &mut ChaCha8Rng) -> RandomGp {
    let n = rng.random_range(2..=3);
    let term = |rng: &mut ChaCha8Rng, spread: f64| -> (f64, Vec<f64>) {
        (rng.random_range(0.5..2.0), (0..n).map(|_| rng.random_range(-spread..spread)).collect())
    };
    let objective: Vec<_> = (0..rng.random_range(2..=3)).map(|_| term(rng, 2.0)).collect();
    let x0: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.3, 3.0)).collect();
    let mut constraints = Vec::new();
    for i in 0..n {
        let mut up = vec![0.0; n];
        up[i] = 1.0;
        constraints.push(vec![(0.1, up.clone())]);
        constraints.push(vec![(0.1, up.iter().map(|e| -e).collect())]);
    }
    for _ in 0..rng.random_range(1..=2) {
        let mut c: Vec<_> = (0..2).map(|_| term(rng, 1.5)).collect();
        let scale = 0.7 / eval(&c, &x0);
        c.iter_mut().for_each(|t| t.0 *= scale);
        constraints.push(c);
    }
    RandomGp { n, objective, constraints }
}

fn posynomial(n: usize, p: &[(f64, Vec<f64>)]) -> Posynomial {
    Posynomial::new(p.iter().map(|(c, e)| Monomial::new(*c, e.iter().copied().chain(std::iter::repeat(0.0)).take(n).collect())).collect())
}

fn gp_oracle_case(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_gp(&mut rng);
    let names = (0..g.n).map(|i| format!("x{i}")).collect();
    let mut prob = GpProblem::minimize_posynomial(names, &posynomial(g.n, &g.objective));
    for c in &g.constraints {
        prob.push(posynomial(g.n + 1, c));
    }
    let sol = gp::solve(&prob).expect("well-formed").into_optimal().expect("optimal");
    let (_, start) = grid_min(g.n, 0.1, 10.0, 41, 3, |x| {
        g.constraints.iter().all(|c| eval(c, x) < 1.0).then(|| eval(&g.objective, x))
    })
    .expect("feasible grid point");
    let oracle = barrier_min(&start, |x| eval(&g.objective, x), |x| g.constraints.iter().map(|c| eval(c, x)).collect());
    (sol.objective_value, oracle)
}

fn af_single_user_case(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_scenario(&mut rng, 1);
    s.gamma = vec![db(rng.random_range(0.0..10.0))];
    let ch = generate(&s, seed);
    let w = unit_columns(&random_matrix(&mut rng, s.m_b, 1));
    let eff = AfEffectiveChannel::new(&s, &ch, &w, 1.0);
    let (sum, _, _) = af_downlink_minpower_gp(&s, &eff).expect("feasible single user");
    let total = |p: f64, g_r: f64| {
        let f = &w * Complex64::new(p.sqrt(), 0.0);
        let q = ComplexMatrix::identity(s.m_r, s.m_r) * Complex64::new(g_r.sqrt(), 0.0);
        verify_sinr(&s, &ch, &f, &q).expect("dimensions")
    };
    let (oracle, _) = grid_min(1, 1e-6, 1e6, 101, 20, |x| {
        let g_r = x[0];
        let p = bisect(1e-12, s.p_b_max, |p| total(p, g_r).sinr[0] >= s.gamma[0])?;
        let v = total(p, g_r);
        (v.p_r <= s.p_r_max).then_some(v.p_b + v.p_r)
    })
    .expect("feasible grid point");
    (sum, oracle)
}

fn svd_single_user_case(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_scenario(&mut rng, 1);
    s.gamma = vec![db(rng.random_range(0.0..10.0))];
    let ch = generate(&s, seed);
    let setup = SvdSetup::new(&s, &ch, &Pairing::Identity).expect("full rank");
    let a = unit_columns(&ch.g_matrix());
    let gains = gain_matrix(&setup.gn, &a);
    let (sum, _, _) = svd_minpower_gp(&s, &setup.lambda, &gains).expect("feasible single user");
    let lambda = setup.lambda[0];
    let design = |p: f64, p_r: f64| {
        let f = &setup.v * Complex64::new(p.sqrt(), 0.0);
        let eps = 1.0 / (lambda * lambda * p + s.sigma_r_sq).sqrt();
        let q = &a * Complex64::new(p_r.sqrt() * eps, 0.0) * setup.u.adjoint();
        verify_sinr(&s, &ch, &f, &q).expect("dimensions")
    };
    let (oracle, _) = grid_min(1, 1e-6, s.p_b_max, 101, 20, |x| {
        let p = x[0];
        let p_r = bisect(1e-12, s.p_r_max, |p_r| design(p, p_r).sinr[0] >= s.gamma[0])?;
        let v = design(p, p_r);
        Some(v.p_b + v.p_r)
    })
    .expect("feasible grid point");
    (sum, oracle)
}

fn gp_oracle_equivalence() -> Outcome {
    let random: Vec<(f64, f64)> = (0..50u64).into_par_iter().map(|i| gp_oracle_case(2000 + i)).collect();
    let af: Vec<(f64, f64)> = (0..10u64).into_par_iter().map(|i| af_single_user_case(3000 + i)).collect();
    let svd: Vec<(f64, f64)> = (0..10u64).into_par_iter().map(|i| svd_single_user_case(4000 + i)).collect();
    let worst = |v: &[(f64, f64)]| v.iter().map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let (w1, w2, w3) = (worst(&random), worst(&af), worst(&svd));
    outcome(
        w1 < 1e-3 && w2 < 1e-3 && w3 < 1e-3,
        format!("max relative gap: random GPs {w1:.2e}, single-user AF {w2:.2e}, single-user SVD {w3:.2e}"),
    )
}

// 3 ------------------------------------------------------------------------

fn duality_identities() -> Outcome {
    let af: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
            let k = 2 + (i % 3) as usize;
            let s = random_scenario(&mut rng, k);
            let ch = generate(&s, i);
            let w = unit_columns(&random_matrix(&mut rng, s.m_b, k));
            let g_r = log_uniform(&mut rng, 0.1, 10.0);
            let eff = AfEffectiveChannel::new(&s, &ch, &w, g_r);
            let (up, _) = af_uplink_balance(&eff, g_r, &s.gamma, s.p_b_max).expect("balance");
            let (down, p) = af_downlink_balance(&eff, g_r, &s.gamma, s.p_b_max).expect("balance");
            // downlink levels recomputed from the scalar channels
            let levels: Vec<f64> = (0..k)
                .map(|j| {
                    let cross: f64 = (0..k).filter(|&i| i != j).map(|i| p[i] * g_r * eff.h_hat[(j, i)].norm_sqr()).sum();
                    p[j] * g_r * eff.h_hat[(j, j)].norm_sqr() / (cross + eff.sigma_hat_sq[j]) / s.gamma[j]
                })
                .collect();
            let spread = levels.iter().map(|l| rel(*l, down)).fold(0.0, f64::max);
            rel(up, down).max(spread)
        })
        .collect();
    let mut svd = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let mut tries = 0;
    while svd.len() < 100 && tries < 5000 {
        tries += 1;
        let k = rng.random_range(2..=4);
        let mut s = random_scenario(&mut rng, k);
        s.sigma_k_sq = vec![s.sigma_k_sq[0]; k];
        let ch = generate(&s, tries);
        let gn = normalized_channels(&ch.g, &s.sigma_k_sq);
        let alpha: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 2.0, 100.0)).collect();
        let q: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let a = svd_beamformers(&gn, &alpha, &q).expect("beamformers");
        let gains = gain_matrix(&gn, &a);
        if let (Ok(up), Ok(down)) = (svd_uplink_minpower(&gains, &alpha, &s.gamma), svd_downlink_minpower(&gains, &alpha, &s.gamma)) {
            svd.push(rel(down.iter().sum(), up.iter().sum()));
        }
    }
    let wa = af.iter().copied().fold(0.0, f64::max);
    let ws = svd.iter().copied().fold(0.0, f64::max);
    outcome(
        wa < 1e-6 && svd.len() == 100 && ws < 1e-6,
        format!("AF level gap {wa:.2e} over {} instances; SVD power-sum gap {ws:.2e} over {} instances", af.len(), svd.len()),
    )
}

// 4 ------------------------------------------------------------------------

fn eigensystem_balance() -> Outcome {
    let rows: Vec<(f64, f64, f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + i);
            let k = 2 + (i % 3) as usize;
            let s = random_scenario(&mut rng, k);
            let ch = generate(&s, i);
            let w = unit_columns(&random_matrix(&mut rng, s.m_b, k));
            let g_r = log_uniform(&mut rng, 0.1, 10.0);
            let eff = AfEffectiveChannel::new(&s, &ch, &w, g_r);
            let (c, q) = af_uplink_balance(&eff, g_r, &s.gamma, s.p_b_max).expect("balance");
            let af_spread = (0..k)
                .map(|j| {
                    let x = |i: usize| q[i] * g_r * eff.h_hat[(i, j)].norm_sqr() / eff.sigma_hat_sq[i];
                    let cross: f64 = (0..k).filter(|&i| i != j).map(x).sum();
                    rel(x(j) / (cross + 1.0) / s.gamma[j], c)
                })
                .fold(0.0, f64::max);
            let af_sum = rel(q.iter().sum(), s.p_b_max);

            let gn = normalized_channels(&ch.g, &s.sigma_k_sq);
            let alpha: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1.0, 100.0)).collect();
            let a = svd_beamformers(&gn, &alpha, &vec![1.0; k]).expect("beamformers");
            let gains = gain_matrix(&gn, &a);
            let (c, q) = svd_uplink_balance(&gains, &alpha, &s.gamma, s.p_r_max).expect("balance");
            let svd_spread = (0..k)
                .map(|j| {
                    let cross: f64 = (0..k).filter(|&i| i != j).map(|i| q[i] * gains[(i, j)]).sum();
                    let own = q[j] * gains[(j, j)];
                    let sinr = (alpha[j] / (1.0 + alpha[j])) * own / (cross + own / (1.0 + alpha[j]) + 1.0);
                    rel(sinr / s.gamma[j], c)
                })
                .fold(0.0, f64::max);
            let svd_sum = rel(q.iter().sum(), s.p_r_max);
            (af_spread, af_sum, svd_spread, svd_sum)
        })
        .collect();
    let m = |f: fn(&(f64, f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (a1, a2, s1, s2) = (m(|r| r.0), m(|r| r.1), m(|r| r.2), m(|r| r.3));
    outcome(
        a1 < 1e-8 && a2 < 1e-8 && s1 < 1e-8 && s2 < 1e-8,
        format!("AF level spread {a1:.2e}, sum gap {a2:.2e}; SVD level spread {s1:.2e}, sum gap {s2:.2e}"),
    )
}

// 5 ------------------------------------------------------------------------

fn sufficient_condition_soundness() -> Outcome {
    let rows: Vec<(bool, bool, f64)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(8000 + i);
            let k = rng.random_range(2..=4);
            let gn = random_matrix(&mut rng, k, k) * Complex64::new(log_uniform(&mut rng, 0.5, 5.0), 0.0);
            let alpha: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 0.5, 200.0)).collect();
            let q: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
            let a = svd_beamformers(&gn, &alpha, &q).expect("beamformers");
            let gains = gain_matrix(&gn, &a);
            // per-stream bound from the coupling each stream's beam leaks to others
            let gamma: Vec<f64> = (0..k)
                .map(|j| {
                    let leak: f64 = (0..k).filter(|&i| i != j).map(|i| gains[(i, j)]).sum();
                    let chi = gains[(j, j)] / leak;
                    rng.random_range(0.05..0.999) * alpha[j] * chi / (1.0 + alpha[j] + chi)
                })
                .collect();
            let flags = sufficient_condition(&gains, &alpha, &gamma).iter().all(|&f| f);
            let ok = matches!(svd_uplink_minpower(&gains, &alpha, &gamma), Ok(q) if q.iter().all(|&x| x > 0.0));
            let rho = uplink_radius(&gains, &alpha, &gamma).unwrap_or(f64::INFINITY);
            (flags, ok, rho)
        })
        .collect();
    let flagged = rows.iter().filter(|r| r.0).count();
    let solved = rows.iter().filter(|r| r.0 && r.1).count();
    let rho = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    outcome(
        flagged == 500 && solved == flagged && rho < 1.0,
        format!("{flagged}/500 instances flagged, {solved} solved with positive powers, max spectral radius {rho:.4}"),
    )
}

// 6 ------------------------------------------------------------------------

fn scheme_ordering() -> Outcome {
    let s = Scenario::symmetric(4, 4, db(3.0), 0.1, 10.0, 0.5, 0.5);
    let draws: Vec<Option<(f64, f64)>> = (0..260u64)
        .into_par_iter()
        .map(|seed| {
            let ch = generate(&s, seed);
            let af = af_solve(&s, &ch).ok()?.1.filter(|m| m.is_feasible())?;
            let svd = svd_solve(&s, &ch, &Pairing::Identity).ok()?.1.filter(|m| m.is_feasible())?;
            Some((af.sum_power, svd.sum_power))
        })
        .collect();
    let paired: Vec<(f64, f64)> = draws.into_iter().flatten().take(200).collect();
    let n = paired.len() as f64;
    let af = paired.iter().map(|p| p.0).sum::<f64>() / n;
    let svd = paired.iter().map(|p| p.1).sum::<f64>() / n;
    outcome(paired.len() >= 200 && svd <= af, format!("{} paired draws: mean sum power SVD {svd:.4} W, AF {af:.4} W", paired.len()))
}

// 7 ------------------------------------------------------------------------

struct Iters {
    passed: bool,
    feas: usize,
    min: usize,
    monotone: bool,
}

fn non_increasing(h: &[f64]) -> bool {
    h.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
}

/// Average outer iterations per draw with the feasibility-weighted split
/// between passing and failing draws.
fn weighted_iterations(rows: &[Iters]) -> f64 {
    let total = rows.len() as f64;
    let ok: Vec<&Iters> = rows.iter().filter(|r| r.passed).collect();
    let bad: Vec<&Iters> = rows.iter().filter(|r| !r.passed).collect();
    let mean = |v: &[&Iters], f: fn(&Iters) -> usize| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().map(|r| f(r) as f64).sum::<f64>() / v.len() as f64
        }
    };
    let frac = ok.len() as f64 / total;
    frac * (mean(&ok, |r| r.feas) + mean(&ok, |r| r.min)) + (1.0 - frac) * mean(&bad, |r| r.feas)
}

fn convergence_speed() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut monotone = true;
    let mut parts = Vec::new();
    for target in [0.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
        let s = Scenario::symmetric(2, 2, db(target), 0.1, 10.0, 0.5, 0.5);
        let rows: Vec<(Iters, Iters)> = (0..200u64)
            .into_par_iter()
            .map(|seed| {
                let ch = generate(&s, seed);
                let (f, m) = af_solve(&s, &ch).expect("af");
                let af = Iters {
                    passed: m.is_some(),
                    feas: f.outer_iterations,
                    min: m.as_ref().map_or(0, |m| m.outer_iterations),
                    monotone: non_increasing(&f.t_history) && m.as_ref().is_none_or(|m| non_increasing(&m.t_history)),
                };
                let (f, m) = svd_solve(&s, &ch, &Pairing::Identity).expect("svd");
                let svd = Iters {
                    passed: m.is_some(),
                    feas: f.outer_iterations,
                    min: m.as_ref().map_or(0, |m| m.outer_iterations),
                    monotone: non_increasing(&f.t_history) && m.as_ref().is_none_or(|m| non_increasing(&m.t_history)),
                };
                (af, svd)
            })
            .collect();
        let (af, svd): (Vec<Iters>, Vec<Iters>) = rows.into_iter().unzip();
        monotone &= af.iter().chain(&svd).all(|r| r.monotone);
        let (ia, is) = (weighted_iterations(&af), weighted_iterations(&svd));
        worst = (worst.0.max(ia), worst.1.max(is));
        parts.push(format!("{target:.0}dB af {ia:.2} svd {is:.2}"));
    }
    outcome(
        worst.0 <= 8.0 && worst.1 <= 8.0 && monotone,
        format!("average outer iterations [{}], histories non-increasing: {monotone}", parts.join(", ")),
    )
}

// 8 ------------------------------------------------------------------------

fn pairing_benefit() -> Outcome {
    let mut s = Scenario::symmetric(2, 2, db(3.0), 0.1, 10.0, 0.5, 0.5);
    s.d_rs_ms = vec![0.25, 0.75];
    let draws: Vec<Option<(f64, f64)>> = (0..260u64)
        .into_par_iter()
        .map(|seed| {
            let ch = generate(&s, seed);
            let off = svd_solve(&s, &ch, &Pairing::Identity).ok()?.1.filter(|m| m.is_feasible())?;
            let on = svd_solve(&s, &ch, &Pairing::Heuristic).ok()?.1.filter(|m| m.is_feasible())?;
            Some((on.sum_power, off.sum_power))
        })
        .collect();
    let paired: Vec<(f64, f64)> = draws.into_iter().flatten().take(200).collect();
    let n = paired.len() as f64;
    let on = paired.iter().map(|p| p.0).sum::<f64>() / n;
    let off = paired.iter().map(|p| p.1).sum::<f64>() / n;

    // two-stream analysis: second hop strong/weak user, all first-hop CINR pairs
    let grid = [0.0, 5.0, 10.0, 15.0, 20.0];
    let mut ordered = true;
    let mut picks = true;
    for second in [[20.0, 0.0], [10.0, 5.0]] {
        let c2 = [db(second[0]), db(second[1])];
        for &lo in &grid {
            for &hi in grid.iter().filter(|&&h| h > lo) {
                let weak_first = pairing_power(&[db(lo), db(hi)], &c2, &[1.0, 1.0]).expect("gp");
                let strong_first = pairing_power(&[db(hi), db(lo)], &c2, &[1.0, 1.0]).expect("gp");
                ordered &= weak_first <= strong_first;
                let c = HopCinr { first_hop: vec![db(hi), db(lo)], second_hop: c2.to_vec(), accumulated: vec![] };
                picks &= pair_subchannels(&c) == vec![1, 0];
            }
        }
    }
    outcome(
        paired.len() >= 200 && on <= off && ordered && picks,
        format!(
            "{} paired draws: mean sum power paired {on:.4} W, unpaired {off:.4} W; \
             strong-with-weak cheaper on every grid pair: {ordered}; heuristic picks it: {picks}",
            paired.len()
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn multihop_trend() -> Outcome {
    let base = Scenario::symmetric(2, 2, db(3.0), 0.01, 10.0, 1.0, 1.0);
    let draws: Vec<Option<Vec<f64>>> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            (1..=4)
                .map(|hops| {
                    let ms = MultihopScenario::uniform(base.clone(), hops - 1, 2.0);
                    let ch = generate_multihop(&ms, seed);
                    multihop_solve(&ms, &ch, &Pairing::Heuristic).ok()?.1.filter(|m| m.is_feasible()).map(|m| m.sum_power)
                })
                .collect()
        })
        .collect();
    let ok: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let n = ok.len() as f64;
    let mean: Vec<f64> = (0..4).map(|h| ok.iter().map(|d| d[h]).sum::<f64>() / n).collect();
    let gains: Vec<f64> = mean.windows(2).map(|w| w[0] - w[1]).collect();
    outcome(
        ok.len() >= 100 && gains[0] > 0.0 && gains[1] > 0.0 && gains[2] < gains[1],
        format!(
            "{} draws feasible at every hop count; mean sum power by hops {:.4} / {:.4} / {:.4} / {:.4} W",
            ok.len(),
            mean[0],
            mean[1],
            mean[2],
            mean[3]
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn limit_consistency() -> Outcome {
    let rows: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + i);
            let k = rng.random_range(2..=4);
            let s = random_scenario(&mut rng, k);
            let ch = generate(&s, i);
            let gn = normalized_channels(&ch.g, &s.sigma_k_sq);
            let q0 = vec![s.p_r_max / k as f64; k];
            let relay = svd_balance_loop(&gn, &vec![1e12; k], &s.gamma, s.p_r_max, &q0).expect("balance");
            let direct = broadcast_balancing(&gn, &s.gamma, s.p_r_max, &q0).expect("balance");
            let ang = (0..k)
                .map(|j| angle(&relay.a.column(j).into_owned(), &direct.a.column(j).into_owned()))
                .fold(0.0, f64::max);
            (ang, rel(relay.balanced_level, direct.balanced_level))
        })
        .collect();
    let ang = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let lvl = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(ang < 1e-4 && lvl < 1e-4, format!("max beamformer angle {ang:.2e} rad, max level gap {lvl:.2e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("ground-truth verification", ground_truth_verification),
        ("GP solver oracle equivalence", gp_oracle_equivalence),
        ("duality identities", duality_identities),
        ("eigensystem balance", eigensystem_balance),
        ("sufficient-condition soundness", sufficient_condition_soundness),
        ("scheme ordering", scheme_ordering),
        ("convergence speed", convergence_speed),
        ("pairing benefit", pairing_benefit),
        ("multi-hop trend", multihop_trend),
        ("limit consistency", limit_consistency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
