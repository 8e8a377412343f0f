use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::geometry::Bounds;

/// How an agent picks its l-mate among superior candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Highest received UV wins, ties go to the lowest id.
    #[default]
    Deterministic,
    /// Roulette over received UV.
    Stochastic,
}

/// Algorithm constants plus run controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmoParams {
    /// UV decay factor in `[0, 1]`.
    pub rho: f64,
    /// UV gain applied to the measured fitness.
    pub gamma: f64,
    /// Length scale of the exponential UV distribution kernel.
    pub lambda_d: f64,
    /// Distance moved toward the l-mate per iteration.
    pub step_size: f64,
    pub n_agents: usize,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(default)]
    pub selection_mode: SelectionMode,
    /// Minimal fitness margin a candidate must exceed.
    #[serde(default)]
    pub fitness_eps: f64,
}

pub const DEFAULT_RHO: f64 = 0.4;
pub const DEFAULT_GAMMA: f64 = 0.6;
/// Default `lambda_d` as a fraction of the bounds diagonal.
pub const DEFAULT_LAMBDA_FRACTION: f64 = 0.1;

impl BmoParams {
    /// Defaults scaled to `bounds`; `step_size` defaults to 1% of the diagonal.
    pub fn for_bounds(bounds: &Bounds) -> Self {
        let diag = bounds.diagonal();
        BmoParams {
            rho: DEFAULT_RHO,
            gamma: DEFAULT_GAMMA,
            lambda_d: DEFAULT_LAMBDA_FRACTION * diag,
            step_size: 0.01 * diag,
            n_agents: 10,
            max_iters: 100,
            seed: 0,
            selection_mode: SelectionMode::Deterministic,
            fitness_eps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BmoError::InvalidParams(msg));
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.lambda_d > 0.0 && self.lambda_d.is_finite()) {
            return bad(format!("lambda_d must be > 0, got {}", self.lambda_d));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be >= 0, got {}", self.step_size));
        }
        if self.n_agents == 0 {
            return bad("n_agents must be >= 1".into());
        }
        if !(self.fitness_eps >= 0.0 && self.fitness_eps.is_finite()) {
            return bad(format!("fitness_eps must be >= 0, got {}", self.fitness_eps));
        }
        Ok(())
    }
}
