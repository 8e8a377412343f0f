use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};

/// Axis-aligned box `lower[k] <= x[k] <= upper[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Bounds { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// Square (or cube) box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Bounds {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(BmoError::InvalidField(format!(
                "bounds have {} lower and {} upper coordinates",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if !(2..=3).contains(&self.lower.len()) {
            return Err(BmoError::InvalidField(format!(
                "dimension must be 2 or 3, got {}",
                self.lower.len()
            )));
        }
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(BmoError::InvalidField(format!(
                    "bounds axis {k}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn clamp_in_place(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn diagonal(&self) -> f64 {
        distance(&self.lower, &self.upper)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }
}

/// Euclidean distance. Summation runs over coordinates in index order.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = y - x;
        acc += d * d;
    }
    acc.sqrt()
}

pub fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points.first().map_or(0, Vec::len);
    let mut c = vec![0.0; dim];
    for p in points {
        for (ck, pk) in c.iter_mut().zip(p) {
            *ck += pk;
        }
    }
    let n = points.len().max(1) as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_345() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![0.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![0.0, 2.0], vec![1.0, 1.0]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn clamp_and_contains() {
        let b = Bounds::cube(2, -1.0, 1.0);
        let mut x = vec![2.0, -3.0];
        assert!(!b.contains(&x));
        b.clamp_in_place(&mut x);
        assert_eq!(x, vec![1.0, -1.0]);
        assert!(b.contains(&x));
    }
}
