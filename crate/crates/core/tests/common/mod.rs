#![allow(dead_code)]

use bmo_core::geometry::Bounds;
use bmo_core::kernel::{advance, kernel_rng, uv_distribution, BmoRng};
use bmo_core::{BmoParams, SelectionMode, SwarmState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random swarm plus everything needed to advance it one step.
#[derive(Debug, Clone)]
pub struct Case {
    pub state: SwarmState,
    pub measured: Vec<f64>,
    pub params: BmoParams,
    pub bounds: Bounds,
}

/// Builds a random case from `seed`. Fitness values are quantized half the
/// time so ties show up, and some UV levels are zero.
pub fn random_case(seed: u64, max_agents: usize, mode: SelectionMode) -> Case {
    let mut g = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let dim = if g.random_bool(0.5) { 2 } else { 3 };
    let bounds = Bounds::cube(dim, -5.0, 5.0);
    let n = g.random_range(1..=max_agents);
    let positions: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| g.random_range(-5.0..5.0)).collect())
        .collect();
    let mut state = SwarmState::new(positions);
    let quantize = g.random_bool(0.5);
    for a in &mut state.agents {
        a.uv = if g.random_bool(0.2) { 0.0 } else { g.random_range(0.0..3.0) };
        a.fitness = g.random_range(0.0..2.0);
    }
    let measured = (0..n)
        .map(|_| {
            let j: f64 = g.random_range(0.0..2.0);
            if quantize {
                (j * 4.0).round() / 4.0
            } else {
                j
            }
        })
        .collect();
    let params = BmoParams {
        rho: g.random_range(0.0..=1.0),
        gamma: g.random_range(0.0..2.0),
        lambda_d: g.random_range(0.1..5.0),
        step_size: g.random_range(0.01..2.0),
        n_agents: n,
        max_iters: 1,
        seed,
        selection_mode: mode,
        fitness_eps: if g.random_bool(0.5) { 0.0 } else { 0.05 },
    };
    Case {
        state,
        measured,
        params,
        bounds,
    }
}

pub struct OracleStep {
    pub positions: Vec<Vec<f64>>,
    pub uv: Vec<f64>,
    pub lmates: Vec<Option<usize>>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// Straight double-loop transcription of one synchronous step.
pub fn oracle_step(case: &Case, rng: &mut BmoRng) -> OracleStep {
    let p = &case.params;
    let n = case.state.agents.len();
    let x: Vec<Vec<f64>> = case.state.agents.iter().map(|a| a.position.clone()).collect();
    let j = &case.measured;

    let mut uv = vec![0.0; n];
    for i in 0..n {
        let v = (1.0 - p.rho) * case.state.agents[i].uv + p.gamma * j[i];
        uv[i] = if v < 0.0 { 0.0 } else { v };
    }

    let mut r = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            r[i][k] = if i == k {
                uv[k]
            } else {
                uv[k] * (-dist(&x[i], &x[k]) / p.lambda_d).exp()
            };
        }
    }

    let mut lmates = vec![None; n];
    for i in 0..n {
        let mut cand = Vec::new();
        for k in 0..n {
            if k != i && j[k] > j[i] + p.fitness_eps {
                cand.push(k);
            }
        }
        lmates[i] = match p.selection_mode {
            SelectionMode::Deterministic => {
                let mut best: Option<usize> = None;
                for &k in &cand {
                    match best {
                        None => best = Some(k),
                        Some(b) if r[i][k] > r[i][b] => best = Some(k),
                        _ => {}
                    }
                }
                best
            }
            SelectionMode::Stochastic => {
                let u: f64 = rng.random();
                if cand.is_empty() {
                    None
                } else {
                    let mut total = 0.0;
                    for &k in &cand {
                        total += r[i][k];
                    }
                    if total <= 0.0 {
                        let idx = ((u * cand.len() as f64) as usize).min(cand.len() - 1);
                        Some(cand[idx])
                    } else {
                        let target = u * total;
                        let mut acc = 0.0;
                        let mut pick = None;
                        for &k in &cand {
                            acc += r[i][k];
                            if target < acc {
                                pick = Some(k);
                                break;
                            }
                        }
                        pick.or_else(|| cand.iter().rev().copied().find(|&k| r[i][k] > 0.0))
                    }
                }
            }
        };
    }

    let mut positions = x.clone();
    for i in 0..n {
        if let Some(l) = lmates[i] {
            let d = dist(&x[i], &x[l]);
            if d <= p.step_size {
                positions[i] = x[l].clone();
            } else {
                for k in 0..x[i].len() {
                    positions[i][k] = x[i][k] + p.step_size * (x[l][k] - x[i][k]) / d;
                }
            }
            for k in 0..positions[i].len() {
                positions[i][k] = positions[i][k].clamp(case.bounds.lower[k], case.bounds.upper[k]);
            }
        }
    }
    OracleStep {
        positions,
        uv,
        lmates,
    }
}

/// Compares the kernel against the oracle on one case, sharing the draw sequence.
pub fn oracle_agrees(case: &Case) -> Result<(), String> {
    let next = advance(
        &case.state,
        &case.measured,
        &mut kernel_rng(case.params.seed),
        &case.params,
        &case.bounds,
    )
    .map_err(|e| e.to_string())?;
    let want = oracle_step(case, &mut kernel_rng(case.params.seed));
    if next.positions() != want.positions {
        return Err(format!("positions differ: {:?} vs {:?}", next.positions(), want.positions));
    }
    if next.uv() != want.uv {
        return Err(format!("uv differs: {:?} vs {:?}", next.uv(), want.uv));
    }
    if next.lmates() != want.lmates {
        return Err(format!("lmates differ: {:?} vs {:?}", next.lmates(), want.lmates));
    }
    Ok(())
}

/// Step-level invariants: non-negative UV, bounded moves that never pass the
/// mate, stationary top agents, positions in bounds, distribution shape and
/// reproducibility.
pub fn invariants_hold(case: &Case) -> Result<(), String> {
    let p = &case.params;
    let advance_once = || {
        advance(
            &case.state,
            &case.measured,
            &mut kernel_rng(p.seed),
            p,
            &case.bounds,
        )
        .map_err(|e| e.to_string())
    };
    let next = advance_once()?;
    if next != advance_once()? {
        return Err("same seed gave different steps".into());
    }

    let old = case.state.positions();
    let top = case.measured.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (i, a) in next.agents.iter().enumerate() {
        if !(a.uv >= 0.0 && a.uv.is_finite()) {
            return Err(format!("agent {i} uv {}", a.uv));
        }
        if !case.bounds.contains(&a.position) {
            return Err(format!("agent {i} left bounds"));
        }
        let moved = bmo_core::geometry::distance(&old[i], &a.position);
        if moved > p.step_size * (1.0 + 1e-12) {
            return Err(format!("agent {i} moved {moved} > step {}", p.step_size));
        }
        match a.lmate {
            Some(l) => {
                let before = bmo_core::geometry::distance(&old[i], &old[l]);
                let after = bmo_core::geometry::distance(&a.position, &old[l]);
                if after > before + 1e-12 {
                    return Err(format!("agent {i} moved away from its mate"));
                }
                if before <= p.step_size && a.position != old[l] {
                    return Err(format!("agent {i} should have landed on its mate"));
                }
                if case.measured[l] <= case.measured[i] + p.fitness_eps {
                    return Err(format!("agent {i} picked a non-superior mate {l}"));
                }
            }
            None => {
                if a.position != old[i] {
                    return Err(format!("agent {i} moved without a mate"));
                }
            }
        }
        if case.measured[i] == top && a.lmate.is_some() {
            return Err(format!("top agent {i} picked a mate"));
        }
    }

    let received = uv_distribution(&next, p);
    for i in 0..next.len() {
        if received.get(i, i) != next.agents[i].uv {
            return Err(format!("self-received uv of agent {i}"));
        }
        for k in 0..next.len() {
            let v = received.get(i, k);
            if !(0.0..=next.agents[k].uv).contains(&v) {
                return Err(format!("received uv {v} out of range at ({i}, {k})"));
            }
        }
    }
    Ok(())
}
