//! Butterfly mating optimization (BMO).
//!
//! A swarm of sexless "Bflies" climbs a scalar field: each agent charges a
//! UV level from the fitness it senses, broadcasts it with distance decay,
//! picks a better-placed local mate (l-mate) weighted by the UV it receives,
//! and steps toward it. Clusters form on every local optimum at once.
//!
//! The crate holds the kernel, the fitness fields, a point-robot swarm
//! simulator with noisy sensing, trace I/O, analysis metrics, experiment
//! configs and an SVG path renderer.

pub mod analysis;
pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod params;
pub mod render;
pub mod report;
pub mod sim;
pub mod trace;

pub use analysis::{
    cluster_detect, lmate_variation, path_smoothness, peak_capture, uv_convergence, CaptureReport,
    ConvergenceSeries, Smoothness, Stats,
};
pub use config::{ConfigError, ExperimentConfig, RunSpec};
pub use error::{BmoError, Result};
pub use field::{Field, FieldSpec, Motion, SourceSpec};
pub use geometry::Bounds;
pub use kernel::{bmo_step, run, Bfly, BmoRng, InitSpec, ReceivedUv, SwarmState};
pub use params::{BmoParams, SelectionMode};
pub use render::render_svg;
pub use report::{summarize, RunSummary, SweepPoint};
pub use sim::{co_location_time, simulate, CoLocationTarget, Scenario};
pub use trace::{IterationRecord, Trace, TraceMeta};
