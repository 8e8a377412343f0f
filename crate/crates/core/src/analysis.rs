//! Figures of merit computed from traces.

use serde::{Deserialize, Serialize};

use crate::geometry::distance;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureReport {
    /// Agents within the capture radius of each peak at the final record.
    pub counts: Vec<usize>,
    pub captured: Vec<bool>,
    pub all_captured: bool,
}

/// Capture counts on the final record. An agent close to several peaks counts for each.
pub fn peak_capture(
    trace: &Trace,
    peaks: &[Vec<f64>],
    radius: f64,
    min_count: usize,
) -> CaptureReport {
    let positions = trace
        .final_record()
        .map(|r| r.positions.as_slice())
        .unwrap_or_default();
    let counts: Vec<usize> = peaks
        .iter()
        .map(|p| positions.iter().filter(|x| distance(x, p) <= radius).count())
        .collect();
    let captured: Vec<bool> = counts.iter().map(|c| *c >= min_count).collect();
    let all_captured = !captured.is_empty() && captured.iter().all(|c| *c);
    CaptureReport {
        counts,
        captured,
        all_captured,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        if values.is_empty() {
            return Stats::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stats {
            mean,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub uv: Vec<Stats>,
    pub fitness_meas: Vec<Stats>,
}

pub fn uv_convergence(trace: &Trace) -> ConvergenceSeries {
    ConvergenceSeries {
        uv: trace.records.iter().map(|r| Stats::of(&r.uv)).collect(),
        fitness_meas: trace
            .records
            .iter()
            .map(|r| Stats::of(&r.fitness_meas))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    /// Mean absolute turning angle in radians; 0 when the path has no turns.
    pub mean_turning_angle: f64,
    /// Path length over net displacement; `None` when the agent ends where it started.
    pub path_ratio: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Angle between two non-zero vectors, accurate near 0 and π.
fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

fn smoothness_of(path: &[&[f64]]) -> Smoothness {
    let segments: Vec<Vec<f64>> = path
        .windows(2)
        .map(|w| w[1].iter().zip(w[0]).map(|(b, a)| b - a).collect::<Vec<f64>>())
        .filter(|s| s.iter().any(|v| *v != 0.0))
        .collect();

    let angles: Vec<f64> = segments
        .windows(2)
        .map(|w| angle_between(&w[0], &w[1]))
        .collect();
    let mean_turning_angle = if angles.is_empty() {
        0.0
    } else {
        angles.iter().sum::<f64>() / angles.len() as f64
    };

    let length: f64 = segments.iter().map(|s| norm(s)).sum();
    let displacement = match (path.first(), path.last()) {
        (Some(a), Some(b)) => distance(a, b),
        _ => 0.0,
    };
    Smoothness {
        mean_turning_angle,
        path_ratio: (displacement > 0.0).then(|| length / displacement),
    }
}

/// Per-agent smoothness of the emergence paths. Zero-length moves are skipped.
pub fn path_smoothness(trace: &Trace) -> Vec<Smoothness> {
    (0..trace.n_agents())
        .map(|i| smoothness_of(&trace.path(i)))
        .collect()
}

/// Per-agent fraction of consecutive steps where the l-mate changed.
///
/// Only step records take part; the initial placement has no l-mates.
/// Transitions between none and some agent count as switches.
pub fn lmate_variation(trace: &Trace) -> Vec<f64> {
    let steps = trace.records.get(1..).unwrap_or_default();
    (0..trace.n_agents())
        .map(|i| {
            if steps.len() < 2 {
                return 0.0;
            }
            let switches = steps
                .windows(2)
                .filter(|w| w[0].lmates[i] != w[1].lmates[i])
                .count();
            switches as f64 / (steps.len() - 1) as f64
        })
        .collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Single-linkage clusters at threshold `radius`.
///
/// Clusters are listed by smallest member, members ascending.
pub fn cluster_detect(positions: &[Vec<f64>], radius: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if distance(&positions[i], &positions[j]) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(i);
    }
    clusters
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[k]] {
            end += 1;
        }
        let avg = (k + end) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=end] {
            ranks[idx] = avg;
        }
        k = end + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
///
/// `None` for fewer than two points or when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    })
}
