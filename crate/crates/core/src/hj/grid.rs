use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One grid axis: `nodes` equispaced points on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: usize,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn new(min: f64, max: f64, nodes: usize) -> Self {
        Self { nodes, min, max }
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.nodes - 1) as f64
    }

    /// Node coordinate; both endpoints are reproduced exactly.
    pub fn coord(&self, i: usize) -> f64 {
        let s = i as f64 / (self.nodes - 1) as f64;
        self.min * (1.0 - s) + self.max * s
    }
}

/// Rectangular grid with row-major node ordering (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    labels: Vec<String>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Domain("grid needs at least one axis".into()));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.nodes < 3 {
                return Err(Error::Domain(format!(
                    "axis {k} needs at least 3 nodes, got {}",
                    a.nodes
                )));
            }
            if !(a.min < a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::Domain(format!(
                    "axis {k} has invalid bounds [{}, {}]",
                    a.min, a.max
                )));
            }
        }
        let mut strides = vec![1usize; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1]
                .checked_mul(axes[k + 1].nodes)
                .ok_or_else(|| Error::Domain("grid too large".into()))?;
        }
        let len = strides[0]
            .checked_mul(axes[0].nodes)
            .ok_or_else(|| Error::Domain("grid too large".into()))?;
        let labels = (0..axes.len()).map(|k| format!("x{k}")).collect();
        Ok(Self {
            axes,
            labels,
            strides,
            len,
        })
    }

    /// Grid with the same `nodes` on every axis of the box `[lower, upper]`.
    pub fn uniform(lower: &[f64], upper: &[f64], nodes: usize) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("grid upper", lower.len(), upper.len()));
        }
        Self::new(
            lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| Axis::new(lo, hi, nodes))
                .collect(),
        )
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        assert_eq!(labels.len(), self.axes.len(), "one label per axis");
        self.labels = labels;
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn n_dims(&self) -> usize {
        self.axes.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn spacing(&self, k: usize) -> f64 {
        self.axes[k].spacing()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (k, &s) in self.strides.iter().enumerate() {
            out[k] = idx / s;
            idx %= s;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Index along axis `k` of linear node `idx`.
    #[inline]
    pub fn axis_index(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % self.axes[k].nodes
    }

    pub fn node_coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.axes.len()];
        self.node_coords_into(idx, &mut x);
        x
    }

    pub fn node_coords_into(&self, idx: usize, out: &mut [f64]) {
        for (k, a) in self.axes.iter().enumerate() {
            out[k] = a.coord(self.axis_index(idx, k));
        }
    }

    /// Whether the leading axes of `self` coincide with `other`'s axes.
    pub fn leading_axes_match(&self, other: &Grid) -> bool {
        other.n_dims() <= self.n_dims() && self.axes[..other.n_dims()] == other.axes[..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_round_trip() {
        let g = Grid::new(vec![Axis::new(0.0, 1.0, 3), Axis::new(-1.0, 1.0, 4)]).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.strides(), &[4, 1]);
        for idx in 0..g.len() {
            assert_eq!(g.linear_index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.node_coords(5), vec![0.5, g.axis(1).coord(1)]);
    }

    #[test]
    fn endpoints_are_exact() {
        let a = Axis::new(0.1, 0.3, 7);
        assert_eq!(a.coord(0), 0.1);
        assert_eq!(a.coord(6), 0.3);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(Grid::new(vec![Axis::new(0.0, 1.0, 2)]).is_err());
        assert!(Grid::new(vec![Axis::new(1.0, 1.0, 5)]).is_err());
        assert!(Grid::new(vec![]).is_err());
    }
}
