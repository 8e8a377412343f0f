//! BflyBot swarm simulation: the kernel driving point robots that sense a
//! light field through additive Gaussian noise.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::field::{Field, FieldSpec, SourceSpec};
use crate::geometry::{centroid, distance, Bounds};
use crate::kernel::{advance, evaluate, initial_state, kernel_rng, noise_rng, InitSpec};
use crate::params::BmoParams;
use crate::trace::{IterationRecord, Trace, TraceMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub field: FieldSpec,
    pub params: BmoParams,
    /// Standard deviation of the additive sensor noise, signal units.
    pub sensor_sigma: f64,
    pub init: InitSpec,
    pub capture_radius: f64,
}

impl Scenario {
    /// Four bots in the corners of a 10 x 10 arena around one centered source.
    pub fn four_bots() -> Self {
        let bounds = Bounds::cube(2, 0.0, 10.0);
        let field = FieldSpec::PointSources {
            sources: vec![SourceSpec::fixed(1.0, vec![5.0, 5.0], 1.0)],
            bounds: bounds.clone(),
        };
        let params = BmoParams {
            n_agents: 4,
            max_iters: 500,
            step_size: 0.1,
            ..BmoParams::for_bounds(&bounds)
        };
        Scenario {
            name: "four-bots".into(),
            field,
            params,
            sensor_sigma: 0.02,
            init: InitSpec::Explicit {
                positions: vec![
                    vec![0.5, 0.5],
                    vec![9.5, 0.5],
                    vec![9.5, 9.5],
                    vec![0.5, 9.5],
                ],
            },
            capture_radius: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.params.validate()?;
        if !(self.sensor_sigma >= 0.0 && self.sensor_sigma.is_finite()) {
            return Err(BmoError::InvalidParams(format!(
                "sensor_sigma must be >= 0, got {}",
                self.sensor_sigma
            )));
        }
        if !(self.capture_radius > 0.0 && self.capture_radius.is_finite()) {
            return Err(BmoError::InvalidParams(format!(
                "capture_radius must be > 0, got {}",
                self.capture_radius
            )));
        }
        if let InitSpec::Explicit { positions } = &self.init {
            let bounds = self.field.bounds();
            if let Some(i) = positions.iter().position(|p| !bounds.contains(p)) {
                return Err(BmoError::InvalidInit(format!(
                    "agent {i} starts outside the arena"
                )));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.params.seed = seed;
        s
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            name: self.name.clone(),
            field: self.field.clone(),
            params: self.params.clone(),
            init: self.init.clone(),
            sensor_sigma: self.sensor_sigma,
            capture_radius: Some(self.capture_radius),
        }
    }
}

/// Runs `scenario`, feeding the kernel `max(0, J + noise)`.
///
/// Noise comes from its own stream of the run seed and is not drawn at all
/// when `sensor_sigma` is zero.
pub fn simulate(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let field = &scenario.field;
    let params = &scenario.params;
    let mut rng = kernel_rng(params.seed);
    let mut noise = noise_rng(params.seed);
    let normal = (scenario.sensor_sigma > 0.0)
        .then(|| Normal::new(0.0, scenario.sensor_sigma).expect("sigma validated"));

    let mut state = initial_state(field, params, &scenario.init, &mut rng)?;
    let mut records = Vec::with_capacity(params.max_iters + 1);
    records.push(IterationRecord::from_state(&state, state.fitness(), state.fitness()));

    for _ in 0..params.max_iters {
        let truth = evaluate(&state, field)?;
        let measured: Vec<f64> = match &normal {
            Some(n) => truth
                .iter()
                .map(|j| (j + n.sample(&mut noise)).max(0.0))
                .collect(),
            None => truth.clone(),
        };
        state = advance(&state, &measured, &mut rng, params, field.bounds())?;
        records.push(IterationRecord::from_state(&state, truth, measured));
    }
    Ok(Trace {
        meta: scenario.meta(),
        records,
    })
}

/// What co-location is measured against.
#[derive(Debug, Clone, PartialEq)]
pub enum CoLocationTarget {
    Point(Vec<f64>),
    /// The swarm centroid of the same record.
    Mutual,
}

/// First recorded iteration at which every agent is within `radius` of the target.
pub fn co_location_time(trace: &Trace, radius: f64, target: &CoLocationTarget) -> Option<u64> {
    trace
        .records
        .iter()
        .find(|r| {
            let center = match target {
                CoLocationTarget::Point(p) => p.clone(),
                CoLocationTarget::Mutual => centroid(&r.positions),
            };
            r.positions.iter().all(|p| distance(p, &center) <= radius)
        })
        .map(|r| r.iter)
}

/// First iteration at or after `from` where the swarm centroid is within `radius` of `target`.
pub fn centroid_arrival(trace: &Trace, target: &[f64], radius: f64, from: u64) -> Option<u64> {
    trace
        .records
        .iter()
        .filter(|r| r.iter >= from)
        .find(|r| distance(&centroid(&r.positions), target) <= radius)
        .map(|r| r.iter)
}
