//! The four BMO phases and their composition into a synchronous step.
//!
//! A step reads one snapshot of the swarm and produces the next:
//!
//! 1. UV update: `uv' = (1 - rho) * uv + gamma * J`
//! 2. UV distribution: agent `i` receives `uv'_j * exp(-d_ij / lambda_d)` from `j`
//! 3. l-mate selection among agents with strictly better fitness, weighted by received UV
//! 4. Movement of `step_size` toward the l-mate, snapping onto it when closer than that
//!
//! Phases 2-4 use start-of-step positions, so the agent order never matters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::field::{Field, FieldSpec};
use crate::geometry::{distance, Bounds};
use crate::params::{BmoParams, SelectionMode};
use crate::trace::{IterationRecord, Trace, TraceMeta};

/// Portable generator behind every random draw.
pub type BmoRng = ChaCha8Rng;

/// Stream used for initialization and l-mate draws.
pub const KERNEL_STREAM: u64 = 0;
/// Stream used for sensor noise, kept apart so noise never shifts kernel draws.
pub const NOISE_STREAM: u64 = 1;

pub fn kernel_rng(seed: u64) -> BmoRng {
    let mut rng = BmoRng::seed_from_u64(seed);
    rng.set_stream(KERNEL_STREAM);
    rng
}

pub fn noise_rng(seed: u64) -> BmoRng {
    let mut rng = BmoRng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bfly {
    pub id: usize,
    pub position: Vec<f64>,
    pub uv: f64,
    /// Last fitness the agent acted on.
    pub fitness: f64,
    pub lmate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub iter: u64,
    pub agents: Vec<Bfly>,
}

impl SwarmState {
    /// Fresh swarm with zero UV and zero fitness at the given positions.
    pub fn new(positions: Vec<Vec<f64>>) -> Self {
        let agents = positions
            .into_iter()
            .enumerate()
            .map(|(id, position)| Bfly {
                id,
                position,
                uv: 0.0,
                fitness: 0.0,
                lmate: None,
            })
            .collect();
        SwarmState { iter: 0, agents }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.agents.iter().map(|a| a.position.clone()).collect()
    }

    pub fn uv(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.uv).collect()
    }

    pub fn fitness(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.fitness).collect()
    }

    pub fn lmates(&self) -> Vec<Option<usize>> {
        self.agents.iter().map(|a| a.lmate).collect()
    }
}

/// `r[i][j]`: UV of agent `j` as seen from agent `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedUv {
    n: usize,
    values: Vec<f64>,
}

impl ReceivedUv {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(BmoError::Contract("received UV matrix must be square".into()));
        }
        Ok(ReceivedUv {
            n,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Where the agents start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Uniform in the bounds, drawn from the kernel stream.
    #[default]
    Uniform,
    Explicit { positions: Vec<Vec<f64>> },
}

/// New UV levels: decay the old level by `rho` and add `gamma` times the fitness.
pub fn uv_update(state: &SwarmState, fitness: &[f64], params: &BmoParams) -> Result<Vec<f64>> {
    if fitness.len() != state.len() {
        return Err(BmoError::Contract(format!(
            "uv_update: {} fitness values for {} agents",
            fitness.len(),
            state.len()
        )));
    }
    Ok(state
        .agents
        .iter()
        .zip(fitness)
        .map(|(a, j)| ((1.0 - params.rho) * a.uv + params.gamma * j).max(0.0))
        .collect())
}

/// UV each agent receives from every other agent, decaying with distance.
pub fn uv_distribution(state: &SwarmState, params: &BmoParams) -> ReceivedUv {
    let n = state.len();
    let mut values = vec![0.0; n * n];
    for (i, a) in state.agents.iter().enumerate() {
        for (j, b) in state.agents.iter().enumerate() {
            values[i * n + j] = if i == j {
                b.uv
            } else {
                b.uv * (-distance(&a.position, &b.position) / params.lambda_d).exp()
            };
        }
    }
    ReceivedUv { n, values }
}

/// Picks the l-mate of one agent among the agents with higher fitness.
///
/// In stochastic mode exactly one uniform draw is consumed per call, even
/// when the agent has no candidates, so the draw sequence depends only on
/// the agent count.
pub fn lmate_select<R: Rng + ?Sized>(
    agent: usize,
    state: &SwarmState,
    received: &ReceivedUv,
    rng: &mut R,
    params: &BmoParams,
) -> Result<Option<usize>> {
    let n = state.len();
    if agent >= n {
        return Err(BmoError::Contract(format!(
            "lmate_select: agent {agent} out of range for {n} agents"
        )));
    }
    if received.n_agents() != n {
        return Err(BmoError::Contract(format!(
            "lmate_select: received UV is {0}x{0} for {n} agents",
            received.n_agents()
        )));
    }
    let threshold = state.agents[agent].fitness + params.fitness_eps;
    let candidates = state
        .agents
        .iter()
        .filter(|b| b.id != agent && b.fitness > threshold)
        .map(|b| b.id);
    let row = received.row(agent);

    match params.selection_mode {
        SelectionMode::Deterministic => {
            let mut best: Option<usize> = None;
            for j in candidates {
                if best.is_none_or(|b| row[j] > row[b]) {
                    best = Some(j);
                }
            }
            Ok(best)
        }
        SelectionMode::Stochastic => {
            let u: f64 = rng.random();
            let candidates: Vec<usize> = candidates.collect();
            if candidates.is_empty() {
                return Ok(None);
            }
            let total: f64 = candidates.iter().map(|&j| row[j]).sum();
            if total <= 0.0 {
                let k = ((u * candidates.len() as f64) as usize).min(candidates.len() - 1);
                return Ok(Some(candidates[k]));
            }
            let target = u * total;
            let mut acc = 0.0;
            for &j in &candidates {
                acc += row[j];
                if target < acc {
                    return Ok(Some(j));
                }
            }
            // rounding left target at the very top of the wheel
            Ok(candidates.iter().rev().copied().find(|&j| row[j] > 0.0))
        }
    }
}

/// Moves every agent one step toward its l-mate, landing on it when closer than a step.
pub fn movement(
    state: &SwarmState,
    lmates: &[Option<usize>],
    bounds: &Bounds,
    params: &BmoParams,
) -> Result<Vec<Vec<f64>>> {
    if lmates.len() != state.len() {
        return Err(BmoError::Contract(format!(
            "movement: {} l-mates for {} agents",
            lmates.len(),
            state.len()
        )));
    }
    let step = params.step_size;
    let mut out = Vec::with_capacity(state.len());
    for (i, (agent, mate)) in state.agents.iter().zip(lmates).enumerate() {
        let Some(l) = *mate else {
            out.push(agent.position.clone());
            continue;
        };
        if l == i || l >= state.len() {
            return Err(BmoError::Contract(format!("movement: agent {i} has l-mate {l}")));
        }
        let from = &agent.position;
        let to = &state.agents[l].position;
        let d = distance(from, to);
        let mut next = if d <= step {
            to.clone()
        } else {
            from.iter()
                .zip(to)
                .map(|(x, y)| x + step * (y - x) / d)
                .collect()
        };
        bounds.clamp_in_place(&mut next);
        out.push(next);
    }
    Ok(out)
}

/// True fitness of every agent at time `state.iter`, clamped at zero.
pub fn evaluate<F: Field + ?Sized>(state: &SwarmState, field: &F) -> Result<Vec<f64>> {
    state
        .agents
        .iter()
        .map(|a| {
            let v = field.eval(&a.position, state.iter);
            if v.is_finite() {
                Ok(v.max(0.0))
            } else {
                Err(BmoError::NonFinite {
                    agent: a.id,
                    position: a.position.clone(),
                    t: state.iter,
                    value: v,
                })
            }
        })
        .collect()
}

/// Applies all four phases using `measured` as the fitness each agent acts on.
pub fn advance<R: Rng + ?Sized>(
    state: &SwarmState,
    measured: &[f64],
    rng: &mut R,
    params: &BmoParams,
    bounds: &Bounds,
) -> Result<SwarmState> {
    let uv = uv_update(state, measured, params)?;

    let mut charged = state.clone();
    for ((agent, uv), j) in charged.agents.iter_mut().zip(uv).zip(measured) {
        agent.uv = uv;
        agent.fitness = *j;
    }

    let received = uv_distribution(&charged, params);
    let lmates = (0..charged.len())
        .map(|i| lmate_select(i, &charged, &received, rng, params))
        .collect::<Result<Vec<_>>>()?;
    let positions = movement(&charged, &lmates, bounds, params)?;

    let mut next = charged;
    next.iter += 1;
    for ((agent, position), lmate) in next.agents.iter_mut().zip(positions).zip(lmates) {
        agent.position = position;
        agent.lmate = lmate;
    }
    Ok(next)
}

/// One noise-free iteration against `field`.
pub fn bmo_step<F: Field + ?Sized, R: Rng + ?Sized>(
    state: &SwarmState,
    field: &F,
    rng: &mut R,
    params: &BmoParams,
) -> Result<(SwarmState, IterationRecord)> {
    let fitness = evaluate(state, field)?;
    let next = advance(state, &fitness, rng, params, field.bounds())?;
    let record = IterationRecord::from_state(&next, fitness.clone(), fitness);
    Ok((next, record))
}

/// Places the agents and evaluates their fitness at `t = 0`.
pub fn initial_state<F: Field + ?Sized, R: Rng + ?Sized>(
    field: &F,
    params: &BmoParams,
    init: &InitSpec,
    rng: &mut R,
) -> Result<SwarmState> {
    params.validate()?;
    let bounds = field.bounds();
    let positions = match init {
        InitSpec::Uniform => (0..params.n_agents)
            .map(|_| {
                bounds
                    .lower
                    .iter()
                    .zip(&bounds.upper)
                    .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect(),
        InitSpec::Explicit { positions } => {
            if positions.len() != params.n_agents {
                return Err(BmoError::InvalidInit(format!(
                    "{} explicit positions for n_agents = {}",
                    positions.len(),
                    params.n_agents
                )));
            }
            if let Some((i, p)) = positions.iter().enumerate().find(|(_, p)| !bounds.contains(p)) {
                return Err(BmoError::InvalidInit(format!(
                    "agent {i} starts at {p:?}, outside the bounds"
                )));
            }
            positions.clone()
        }
    };
    let mut state = SwarmState::new(positions);
    let fitness = evaluate(&state, field)?;
    for (a, j) in state.agents.iter_mut().zip(fitness) {
        a.fitness = j;
    }
    Ok(state)
}

/// Full noise-free run: the initial record plus `max_iters` step records.
pub fn run(field: &FieldSpec, params: &BmoParams, init: &InitSpec) -> Result<Trace> {
    field.validate()?;
    let mut rng = kernel_rng(params.seed);
    let mut state = initial_state(field, params, init, &mut rng)?;
    let mut records = Vec::with_capacity(params.max_iters + 1);
    records.push(IterationRecord::from_state(&state, state.fitness(), state.fitness()));
    for _ in 0..params.max_iters {
        let (next, record) = bmo_step(&state, field, &mut rng, params)?;
        records.push(record);
        state = next;
    }
    Ok(Trace {
        meta: TraceMeta {
            name: "run".into(),
            field: field.clone(),
            params: params.clone(),
            init: init.clone(),
            sensor_sigma: 0.0,
            capture_radius: None,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SourceSpec;

    fn params() -> BmoParams {
        BmoParams {
            rho: 0.4,
            gamma: 0.6,
            lambda_d: 1.0,
            step_size: 1.0,
            n_agents: 3,
            max_iters: 10,
            seed: 7,
            selection_mode: SelectionMode::Deterministic,
            fitness_eps: 0.0,
        }
    }

    fn with_fitness(positions: Vec<Vec<f64>>, fitness: &[f64]) -> SwarmState {
        let mut s = SwarmState::new(positions);
        for (a, j) in s.agents.iter_mut().zip(fitness) {
            a.fitness = *j;
        }
        s
    }

    #[test]
    fn uv_update_examples() {
        let mut s = SwarmState::new(vec![vec![0.0, 0.0]]);
        s.agents[0].uv = 1.0;
        assert!((uv_update(&s, &[2.0], &params()).unwrap()[0] - 1.8).abs() < 1e-15);

        let full = BmoParams { rho: 1.0, ..params() };
        assert_eq!(uv_update(&s, &[0.0], &full).unwrap(), vec![0.0]);

        s.agents[0].uv = 0.0;
        assert_eq!(uv_update(&s, &[0.0], &params()).unwrap(), vec![0.0]);
    }

    #[test]
    fn uv_update_length_mismatch() {
        let s = SwarmState::new(vec![vec![0.0, 0.0]; 2]);
        assert!(matches!(
            uv_update(&s, &[1.0], &params()),
            Err(BmoError::Contract(_))
        ));
    }

    #[test]
    fn distribution_examples() {
        let mut s = SwarmState::new(vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![2f64.ln(), 0.0]]);
        s.agents[0].uv = 0.0;
        s.agents[1].uv = 2.0;
        s.agents[2].uv = 1.0;
        let r = uv_distribution(&s, &params());
        assert_eq!(r.get(0, 1), 2.0);
        assert!((r.get(0, 2) - 0.5).abs() < 1e-15);
        assert_eq!(r.get(2, 0), 0.0);
        assert_eq!(r.get(1, 1), 2.0);
    }

    #[test]
    fn deterministic_selection_picks_largest_received() {
        let s = with_fitness(vec![vec![0.0, 0.0]; 3], &[1.0, 2.0, 3.0]);
        let r = ReceivedUv::from_rows(vec![
            vec![0.0, 0.5, 1.5],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let mut rng = kernel_rng(0);
        assert_eq!(lmate_select(0, &s, &r, &mut rng, &params()).unwrap(), Some(2));
        assert_eq!(lmate_select(2, &s, &r, &mut rng, &params()).unwrap(), None);
    }

    #[test]
    fn deterministic_ties_go_to_lowest_id() {
        let s = with_fitness(vec![vec![0.0, 0.0]; 3], &[0.0, 2.0, 2.0]);
        let r = ReceivedUv::from_rows(vec![vec![1.0; 3]; 3]).unwrap();
        let mut rng = kernel_rng(0);
        assert_eq!(lmate_select(0, &s, &r, &mut rng, &params()).unwrap(), Some(1));
    }

    #[test]
    fn fitness_eps_shrinks_candidates() {
        let s = with_fitness(vec![vec![0.0, 0.0]; 2], &[1.0, 1.05]);
        let r = ReceivedUv::from_rows(vec![vec![1.0; 2]; 2]).unwrap();
        let mut rng = kernel_rng(0);
        let p = BmoParams { fitness_eps: 0.1, ..params() };
        assert_eq!(lmate_select(0, &s, &r, &mut rng, &p).unwrap(), None);
        assert_eq!(lmate_select(0, &s, &r, &mut rng, &params()).unwrap(), Some(1));
    }

    #[test]
    fn selection_index_out_of_range() {
        let s = with_fitness(vec![vec![0.0, 0.0]; 2], &[1.0, 2.0]);
        let r = ReceivedUv::from_rows(vec![vec![1.0; 2]; 2]).unwrap();
        let mut rng = kernel_rng(0);
        assert!(matches!(
            lmate_select(5, &s, &r, &mut rng, &params()),
            Err(BmoError::Contract(_))
        ));
    }

    #[test]
    fn stochastic_selection_is_fair_for_equal_weights() {
        let s = with_fitness(vec![vec![0.0, 0.0]; 3], &[1.0, 2.0, 3.0]);
        let r = ReceivedUv::from_rows(vec![vec![0.0, 1.0, 1.0]; 3]).unwrap();
        let p = BmoParams {
            selection_mode: SelectionMode::Stochastic,
            ..params()
        };
        let mut rng = kernel_rng(42);
        let draws = 10_000;
        let ones = (0..draws)
            .filter(|_| lmate_select(0, &s, &r, &mut rng, &p).unwrap() == Some(1))
            .count();
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn stochastic_zero_weights_fall_back_to_uniform() {
        let s = with_fitness(vec![vec![0.0, 0.0]; 3], &[1.0, 2.0, 3.0]);
        let r = ReceivedUv::from_rows(vec![vec![0.0; 3]; 3]).unwrap();
        let p = BmoParams {
            selection_mode: SelectionMode::Stochastic,
            ..params()
        };
        let mut rng = kernel_rng(3);
        let mut seen = [0usize; 3];
        for _ in 0..2000 {
            seen[lmate_select(0, &s, &r, &mut rng, &p).unwrap().unwrap()] += 1;
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1] > 900 && seen[2] > 900, "{seen:?}");
    }

    #[test]
    fn movement_examples() {
        let b = Bounds::cube(2, -10.0, 10.0);
        let s = SwarmState::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]);
        let out = movement(&s, &[Some(1), None], &b, &params()).unwrap();
        assert!((out[0][0] - 0.6).abs() < 1e-15 && (out[0][1] - 0.8).abs() < 1e-15);
        assert_eq!(out[1], vec![3.0, 4.0]);

        let s = SwarmState::new(vec![vec![0.0, 0.0], vec![0.3, 0.4]]);
        let out = movement(&s, &[Some(1), None], &b, &params()).unwrap();
        assert_eq!(out[0], vec![0.3, 0.4]);

        let still = BmoParams { step_size: 0.0, ..params() };
        let s = SwarmState::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]);
        let out = movement(&s, &[Some(1), None], &b, &still).unwrap();
        assert_eq!(out[0], vec![0.0, 0.0]);
    }

    #[test]
    fn movement_rejects_self_mate() {
        let b = Bounds::cube(2, -10.0, 10.0);
        let s = SwarmState::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]);
        assert!(movement(&s, &[Some(0), None], &b, &params()).is_err());
        assert!(movement(&s, &[None], &b, &params()).is_err());
    }

    #[test]
    fn single_agent_never_moves_and_uv_hits_fixed_point() {
        let b = Bounds::cube(2, 0.0, 10.0);
        let field = FieldSpec::point_sources(vec![SourceSpec::fixed(1.0, vec![5.0, 5.0], 1.0)], b)
            .unwrap();
        let p = BmoParams {
            n_agents: 1,
            max_iters: 200,
            ..params()
        };
        let init = InitSpec::Explicit {
            positions: vec![vec![6.0, 5.0]],
        };
        let trace = run(&field, &p, &init).unwrap();
        let j = 0.5;
        for r in &trace.records {
            assert_eq!(r.positions[0], vec![6.0, 5.0]);
        }
        let last = trace.records.last().unwrap().uv[0];
        assert!((last - p.gamma * j / p.rho).abs() < 1e-12);
    }

    #[test]
    fn two_agent_chain_closes_in() {
        let b = Bounds::cube(2, 0.0, 10.0);
        let field = FieldSpec::point_sources(vec![SourceSpec::fixed(1.0, vec![8.0, 5.0], 1.0)], b)
            .unwrap();
        let p = BmoParams {
            n_agents: 2,
            max_iters: 30,
            step_size: 0.4,
            ..params()
        };
        let init = InitSpec::Explicit {
            positions: vec![vec![2.0, 5.0], vec![8.0, 5.0]],
        };
        let trace = run(&field, &p, &init).unwrap();
        let mut prev = 6.0;
        for r in &trace.records[1..] {
            assert_eq!(r.positions[1], vec![8.0, 5.0]);
            let d = distance(&r.positions[0], &r.positions[1]);
            assert!(d < prev || (d == 0.0 && prev == 0.0));
            prev = d;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn run_rejects_out_of_bounds_init() {
        let field = FieldSpec::three_peaks();
        let p = BmoParams { n_agents: 1, ..params() };
        let init = InitSpec::Explicit {
            positions: vec![vec![5.0, 0.0]],
        };
        assert!(matches!(run(&field, &p, &init), Err(BmoError::InvalidInit(_))));
        let init = InitSpec::Explicit {
            positions: vec![vec![0.0, 0.0]; 2],
        };
        assert!(matches!(run(&field, &p, &init), Err(BmoError::InvalidInit(_))));
    }

    #[test]
    fn zero_iterations_keeps_only_initial_state() {
        let p = BmoParams { max_iters: 0, ..params() };
        let trace = run(&FieldSpec::three_peaks(), &p, &InitSpec::Uniform).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].iter, 0);
    }

    struct Broken(Bounds);

    impl Field for Broken {
        fn bounds(&self) -> &Bounds {
            &self.0
        }
        fn eval(&self, x: &[f64], _t: u64) -> f64 {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                1.0
            }
        }
        fn known_peaks(&self, _t: u64) -> Option<Vec<Vec<f64>>> {
            None
        }
        fn max_value(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn non_finite_fitness_names_agent() {
        let field = Broken(Bounds::cube(2, 0.0, 1.0));
        let s = SwarmState::new(vec![vec![0.1, 0.1], vec![0.9, 0.2]]);
        let err = bmo_step(&s, &field, &mut kernel_rng(0), &params()).unwrap_err();
        match err {
            BmoError::NonFinite { agent, position, .. } => {
                assert_eq!(agent, 1);
                assert_eq!(position, vec![0.9, 0.2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
