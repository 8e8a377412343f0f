//! One-record-per-run summaries assembled from the analysis metrics.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    cluster_detect, lmate_variation, path_smoothness, peak_capture, uv_convergence, CaptureReport,
    Stats,
};
use crate::field::Field;
use crate::sim::{co_location_time, CoLocationTarget};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub sweep: Option<SweepPoint>,
    pub n_agents: usize,
    pub iterations: u64,
    pub capture_radius: f64,
    pub peaks: Option<Vec<Vec<f64>>>,
    pub capture: Option<CaptureReport>,
    pub clusters: usize,
    pub final_uv: Stats,
    pub final_fitness: Stats,
    pub mean_turning_angle: f64,
    /// Mean over agents whose ratio is defined.
    pub mean_path_ratio: Option<f64>,
    pub mean_lmate_switch_rate: f64,
    /// `"peak"` when the field has exactly one known peak at the end, else `"mutual"`.
    pub co_location_target: String,
    pub co_location_time: Option<u64>,
}

/// Summarizes `trace`. `radius` falls back to the trace's own capture radius,
/// then to 5% of the bounds diagonal.
pub fn summarize(
    trace: &Trace,
    peaks: Option<Vec<Vec<f64>>>,
    radius: Option<f64>,
    min_count: usize,
    sweep: Option<SweepPoint>,
) -> RunSummary {
    let meta = &trace.meta;
    let last_iter = trace.final_record().map_or(0, |r| r.iter);
    let radius = radius
        .or(meta.capture_radius)
        .unwrap_or_else(|| 0.05 * meta.field.bounds().diagonal());
    let peaks = peaks.or_else(|| meta.field.known_peaks(last_iter));

    let capture = peaks
        .as_ref()
        .filter(|p| !p.is_empty())
        .map(|p| peak_capture(trace, p, radius, min_count));
    let convergence = uv_convergence(trace);
    let smooth = path_smoothness(trace);
    let ratios: Vec<f64> = smooth.iter().filter_map(|s| s.path_ratio).collect();
    let switches = lmate_variation(trace);
    let n = trace.n_agents().max(1) as f64;

    let (target_name, target) = match peaks.as_deref() {
        Some([single]) => ("peak", CoLocationTarget::Point(single.clone())),
        _ => ("mutual", CoLocationTarget::Mutual),
    };

    RunSummary {
        name: meta.name.clone(),
        seed: meta.params.seed,
        sweep,
        n_agents: trace.n_agents(),
        iterations: last_iter,
        capture_radius: radius,
        capture,
        clusters: trace
            .final_record()
            .map_or(0, |r| cluster_detect(&r.positions, radius).len()),
        final_uv: convergence.uv.last().copied().unwrap_or_default(),
        final_fitness: convergence.fitness_meas.last().copied().unwrap_or_default(),
        mean_turning_angle: smooth.iter().map(|s| s.mean_turning_angle).sum::<f64>() / n,
        mean_path_ratio: (!ratios.is_empty())
            .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        mean_lmate_switch_rate: switches.iter().sum::<f64>() / n,
        co_location_target: target_name.into(),
        co_location_time: co_location_time(trace, radius, &target),
        peaks,
    }
}
