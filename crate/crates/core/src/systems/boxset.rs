use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact axis-aligned box, used for the control set and the disturbance set.
///
/// `samples_per_dim` controls the lattice used whenever an optimisation over
/// the box is discretised. The lattice always contains every vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    samples_per_dim: usize,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, samples_per_dim: usize) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("box upper bound", lower.len(), upper.len()));
        }
        if samples_per_dim < 2 {
            return Err(Error::Domain(format!(
                "samples_per_dim must be at least 2, got {samples_per_dim}"
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!("box bound {i} is not finite")));
            }
            if lo > hi {
                return Err(Error::Domain(format!(
                    "box is empty in dimension {i}: lower {lo} > upper {hi}"
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            samples_per_dim,
        })
    }

    /// Box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64, samples_per_dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], samples_per_dim)
    }

    /// Single point; its lattice has exactly one element.
    pub fn point(x: Vec<f64>) -> Result<Self> {
        Self::new(x.clone(), x, 2)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn samples_per_dim(&self) -> usize {
        self.samples_per_dim
    }

    pub fn with_samples(&self, samples_per_dim: usize) -> Result<Self> {
        Self::new(self.lower.clone(), self.upper.clone(), samples_per_dim)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
    }

    /// Sample values along one axis. Degenerate axes collapse to one value.
    pub fn axis_samples(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        if lo == hi {
            return vec![lo];
        }
        let n = self.samples_per_dim;
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                lo * (1.0 - s) + hi * s
            })
            .collect()
    }

    /// Full sample lattice in row-major order (first axis slowest).
    pub fn lattice(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|i| self.axis_samples(i)).collect();
        let mut points = vec![Vec::with_capacity(self.dim())];
        for axis in &axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                let s: f64 = rng.random();
                lo + (hi - lo) * s
            })
            .collect()
    }

    /// Nearest point of the box (componentwise clamp).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_unbounded_boxes() {
        assert!(BoxSet::new(vec![1.0], vec![0.0], 2).is_err());
        assert!(BoxSet::new(vec![0.0], vec![f64::INFINITY], 2).is_err());
        assert!(BoxSet::new(vec![0.0], vec![1.0], 1).is_err());
        assert!(BoxSet::new(vec![0.0, 1.0], vec![1.0], 2).is_err());
    }

    #[test]
    fn lattice_contains_vertices_exactly() {
        let b = BoxSet::new(vec![0.1, 0.5], vec![1.0, 2.0], 4).unwrap();
        let lat = b.lattice();
        assert_eq!(lat.len(), 16);
        assert_eq!(lat[0], vec![0.1, 0.5]);
        assert_eq!(lat[15], vec![1.0, 2.0]);
        assert!(lat.contains(&vec![0.1, 2.0]));
        assert!(lat.contains(&vec![1.0, 0.5]));
    }

    #[test]
    fn degenerate_axis_collapses() {
        let b = BoxSet::point(vec![0.0]).unwrap();
        assert_eq!(b.lattice(), vec![vec![0.0]]);
        let b = BoxSet::new(vec![0.0, 2.0], vec![1.0, 2.0], 3).unwrap();
        assert_eq!(b.lattice().len(), 3);
    }
}
