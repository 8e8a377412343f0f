//! Scalar fitness fields the swarm climbs.
//!
//! Every field is non-negative, finite inside its bounds, and may depend on
//! the integer time step (moving light sources). Fields that know where
//! their maxima are expose them through [`Field::known_peaks`].

use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::geometry::{distance, Bounds};

pub trait Field: Send + Sync {
    fn bounds(&self) -> &Bounds;

    /// Value at `x` and time step `t`, already clamped to `>= 0`.
    fn eval(&self, x: &[f64], t: u64) -> f64;

    /// Peak locations at time `t`, when they are known.
    fn known_peaks(&self, t: u64) -> Option<Vec<Vec<f64>>>;

    /// Upper bound on `eval` over the bounds and all times.
    fn max_value(&self) -> f64;

    fn dimension(&self) -> usize {
        self.bounds().dimension()
    }
}

/// Offset added to the negated Himmelblau polynomial.
pub const HIMMELBLAU_OFFSET: f64 = 200.0;

/// The four zeros of the Himmelblau polynomial.
pub const HIMMELBLAU_ROOTS: [[f64; 2]; 4] = [
    [3.0, 2.0],
    [-2.805118086952745, 3.131312518250573],
    [-3.779310253377747, -3.28318599128617],
    [3.584428340330492, -1.848126526964404],
];

/// How a light source moves over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Motion {
    Static,
    /// Jumps to `position` at time step `t` and stays there.
    RelocateAt { t: u64, position: Vec<f64> },
    /// Drifts by `velocity` per step, clamped to the bounds.
    Linear { velocity: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub intensity: f64,
    pub position: Vec<f64>,
    /// Falloff constant, 1 / length².
    pub kappa: f64,
    #[serde(default = "static_motion")]
    pub motion: Motion,
}

fn static_motion() -> Motion {
    Motion::Static
}

impl SourceSpec {
    pub fn fixed(intensity: f64, position: Vec<f64>, kappa: f64) -> Self {
        SourceSpec {
            intensity,
            position,
            kappa,
            motion: Motion::Static,
        }
    }

    pub fn position_at(&self, t: u64, bounds: &Bounds) -> Vec<f64> {
        match &self.motion {
            Motion::Static => self.position.clone(),
            Motion::RelocateAt { t: at, position } => {
                if t < *at {
                    self.position.clone()
                } else {
                    position.clone()
                }
            }
            Motion::Linear { velocity } => {
                let mut p: Vec<f64> = self
                    .position
                    .iter()
                    .zip(velocity)
                    .map(|(p, v)| p + v * t as f64)
                    .collect();
                bounds.clamp_in_place(&mut p);
                p
            }
        }
    }
}

/// Serializable field description; the form fields take in config and trace files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `J(x) = Σ a_k exp(-‖x - c_k‖² / σ²)`
    GaussianPeaks {
        centers: Vec<Vec<f64>>,
        amplitudes: Vec<f64>,
        sigma: f64,
        bounds: Bounds,
    },
    /// `J(x, y) = max(0, M - H(x, y))` with the Himmelblau polynomial `H`.
    Himmelblau { bounds: Bounds },
    /// `J(x, t) = Σ I_k / (1 + κ_k ‖x - p_k(t)‖²)`
    PointSources {
        sources: Vec<SourceSpec>,
        bounds: Bounds,
    },
}

impl FieldSpec {
    pub fn gaussian_peaks(
        centers: Vec<Vec<f64>>,
        amplitudes: Vec<f64>,
        sigma: f64,
        bounds: Bounds,
    ) -> Result<Self> {
        let f = FieldSpec::GaussianPeaks {
            centers,
            amplitudes,
            sigma,
            bounds,
        };
        f.validate()?;
        Ok(f)
    }

    /// Three unit peaks at (-2,-2), (2,-2), (0,2) with σ = 0.8 on `[-4, 4]²`.
    pub fn three_peaks() -> Self {
        FieldSpec::GaussianPeaks {
            centers: vec![vec![-2.0, -2.0], vec![2.0, -2.0], vec![0.0, 2.0]],
            amplitudes: vec![1.0; 3],
            sigma: 0.8,
            bounds: Bounds::cube(2, -4.0, 4.0),
        }
    }

    pub fn himmelblau(bounds: Bounds) -> Result<Self> {
        let f = FieldSpec::Himmelblau { bounds };
        f.validate()?;
        Ok(f)
    }

    pub fn point_sources(sources: Vec<SourceSpec>, bounds: Bounds) -> Result<Self> {
        let f = FieldSpec::PointSources { sources, bounds };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BmoError::InvalidField(m));
        self.bounds().validate()?;
        let dim = self.bounds().dimension();
        match self {
            FieldSpec::GaussianPeaks {
                centers,
                amplitudes,
                sigma,
                bounds,
            } => {
                if centers.is_empty() {
                    return bad("gaussian_peaks needs at least one center".into());
                }
                if centers.len() != amplitudes.len() {
                    return bad(format!(
                        "{} centers but {} amplitudes",
                        centers.len(),
                        amplitudes.len()
                    ));
                }
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma must be > 0, got {sigma}"));
                }
                for (k, c) in centers.iter().enumerate() {
                    if !bounds.contains(c) {
                        return bad(format!("center {k} {c:?} lies outside the bounds"));
                    }
                }
                if let Some(a) = amplitudes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                    return bad(format!("amplitudes must be > 0, got {a}"));
                }
            }
            FieldSpec::Himmelblau { .. } => {
                if dim != 2 {
                    return bad("himmelblau is two-dimensional".into());
                }
            }
            FieldSpec::PointSources { sources, bounds } => {
                if sources.is_empty() {
                    return bad("point_sources needs at least one source".into());
                }
                for (k, s) in sources.iter().enumerate() {
                    if !(s.intensity > 0.0 && s.intensity.is_finite()) {
                        return bad(format!("source {k}: intensity must be > 0"));
                    }
                    if !(s.kappa > 0.0 && s.kappa.is_finite()) {
                        return bad(format!("source {k}: kappa must be > 0"));
                    }
                    if !bounds.contains(&s.position) {
                        return bad(format!("source {k}: position outside the bounds"));
                    }
                    match &s.motion {
                        Motion::Static => {}
                        Motion::RelocateAt { position, .. } => {
                            if !bounds.contains(position) {
                                return bad(format!(
                                    "source {k}: relocation target {position:?} outside the bounds"
                                ));
                            }
                        }
                        Motion::Linear { velocity } => {
                            if velocity.len() != dim || velocity.iter().any(|v| !v.is_finite()) {
                                return bad(format!("source {k}: bad velocity {velocity:?}"));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        match self {
            FieldSpec::PointSources { sources, .. } => {
                sources.iter().all(|s| s.motion == Motion::Static)
            }
            _ => true,
        }
    }

    /// Short identifier used in file names and summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            FieldSpec::GaussianPeaks { .. } => "gaussian_peaks",
            FieldSpec::Himmelblau { .. } => "himmelblau",
            FieldSpec::PointSources { .. } => "point_sources",
        }
    }
}

fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(distance(a, b));
        }
    }
    best
}

pub fn himmelblau(x: f64, y: f64) -> f64 {
    let a = x * x + y - 11.0;
    let b = x + y * y - 7.0;
    a * a + b * b
}

impl Field for FieldSpec {
    fn bounds(&self) -> &Bounds {
        match self {
            FieldSpec::GaussianPeaks { bounds, .. }
            | FieldSpec::Himmelblau { bounds }
            | FieldSpec::PointSources { bounds, .. } => bounds,
        }
    }

    fn eval(&self, x: &[f64], t: u64) -> f64 {
        match self {
            FieldSpec::GaussianPeaks {
                centers,
                amplitudes,
                sigma,
                ..
            } => {
                let s2 = sigma * sigma;
                centers
                    .iter()
                    .zip(amplitudes)
                    .map(|(c, a)| {
                        let d = distance(x, c);
                        a * (-(d * d) / s2).exp()
                    })
                    .sum()
            }
            FieldSpec::Himmelblau { .. } => (HIMMELBLAU_OFFSET - himmelblau(x[0], x[1])).max(0.0),
            FieldSpec::PointSources { sources, bounds } => sources
                .iter()
                .map(|s| {
                    let d = distance(x, &s.position_at(t, bounds));
                    s.intensity / (1.0 + s.kappa * d * d)
                })
                .sum(),
        }
    }

    fn known_peaks(&self, t: u64) -> Option<Vec<Vec<f64>>> {
        match self {
            FieldSpec::GaussianPeaks { centers, sigma, .. } => {
                (min_pairwise_distance(centers) > 3.0 * sigma).then(|| centers.clone())
            }
            FieldSpec::Himmelblau { .. } => {
                Some(HIMMELBLAU_ROOTS.iter().map(|r| r.to_vec()).collect())
            }
            FieldSpec::PointSources { sources, bounds } => {
                let positions: Vec<Vec<f64>> =
                    sources.iter().map(|s| s.position_at(t, bounds)).collect();
                let kappa_min = sources.iter().map(|s| s.kappa).fold(f64::INFINITY, f64::min);
                (min_pairwise_distance(&positions) > 3.0 / kappa_min.sqrt()).then_some(positions)
            }
        }
    }

    fn max_value(&self) -> f64 {
        match self {
            FieldSpec::GaussianPeaks { amplitudes, .. } => amplitudes.iter().sum(),
            FieldSpec::Himmelblau { .. } => HIMMELBLAU_OFFSET,
            FieldSpec::PointSources { sources, .. } => sources.iter().map(|s| s.intensity).sum(),
        }
    }
}
