use super::grid::Grid;
use crate::error::{check_len, Error, Result};

/// Which value function a field approximates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    /// Reduced value over `z`.
    Reduced,
    /// Full SP value over `(z, y)` at the given `eps`.
    Full { eps: f64 },
    /// Built or loaded outside the solver.
    External,
}

/// Scheme parameters recorded with a solved field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMeta {
    pub kind: FieldKind,
    pub scheme: String,
    pub cfl: f64,
    pub steps: usize,
    /// Largest admissible backward-time step.
    pub max_step: f64,
}

impl Default for FieldMeta {
    fn default() -> Self {
        Self {
            kind: FieldKind::External,
            scheme: String::new(),
            cfl: 0.0,
            steps: 0,
            max_step: 0.0,
        }
    }
}

/// Gridded value function `V(t, .)` with optional running extremes over
/// `[t, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<f64>,
    pub running_min: Option<Vec<f64>>,
    pub running_max: Option<Vec<f64>>,
    pub meta: FieldMeta,
}

const BOUNDS_TOL: f64 = 1e-12;

impl ValueField {
    pub fn new(grid: Grid, time: f64, values: Vec<f64>) -> Result<Self> {
        check_len("values", grid.len(), &values)?;
        Ok(Self {
            grid,
            time,
            values,
            running_min: None,
            running_max: None,
            meta: FieldMeta::default(),
        })
    }

    /// Samples `v` at every node.
    pub fn from_fn(grid: Grid, time: f64, v: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.n_dims()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_coords_into(i, &mut x);
                v(&x)
            })
            .collect();
        Self {
            grid,
            time,
            values,
            running_min: None,
            running_max: None,
            meta: FieldMeta::default(),
        }
    }

    pub fn with_extremes(mut self, running_min: Vec<f64>, running_max: Vec<f64>) -> Result<Self> {
        check_len("running_min", self.grid.len(), &running_min)?;
        check_len("running_max", self.grid.len(), &running_max)?;
        self.running_min = Some(running_min);
        self.running_max = Some(running_max);
        Ok(self)
    }

    pub fn has_extremes(&self) -> bool {
        self.running_min.is_some() && self.running_max.is_some()
    }

    /// Equality of grid, time, values and extremes (metadata ignored).
    pub fn data_eq(&self, other: &ValueField) -> bool {
        self.grid == other.grid
            && self.time.to_bits() == other.time.to_bits()
            && bits_eq(&self.values, &other.values)
            && opt_bits_eq(&self.running_min, &other.running_min)
            && opt_bits_eq(&self.running_max, &other.running_max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell lower index and fractional offset along axis `k`.
    fn locate(&self, k: usize, x: f64) -> Result<(usize, f64)> {
        let a = self.grid.axis(k);
        let h = a.spacing();
        let tol = BOUNDS_TOL * (a.max - a.min);
        if !(x >= a.min - tol && x <= a.max + tol) {
            return Err(Error::Domain(format!(
                "coordinate {x} outside grid axis {k} ([{}, {}])",
                a.min, a.max
            )));
        }
        let mut i = (((x - a.min) / h).floor().max(0.0) as usize).min(a.nodes - 2);
        if i + 1 < a.nodes - 1 && x >= a.coord(i + 1) {
            i += 1;
        }
        if i > 0 && x < a.coord(i) {
            i -= 1;
        }
        let frac = if x >= a.coord(i + 1) {
            1.0
        } else {
            ((x - a.coord(i)) / h).clamp(0.0, 1.0)
        };
        Ok((i, frac))
    }

    /// Multilinear interpolation of the node values at `x`.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        self.interpolate_array(&self.values, x)
    }

    /// Multilinear interpolation of an arbitrary per-node array on this grid.
    pub fn interpolate_array(&self, data: &[f64], x: &[f64]) -> Result<f64> {
        let n = self.grid.n_dims();
        check_len("x", n, x)?;
        let mut base = 0usize;
        let mut fracs = Vec::with_capacity(n);
        for (k, &xk) in x.iter().enumerate() {
            let (i, f) = self.locate(k, xk)?;
            base += i * self.grid.strides()[k];
            fracs.push(f);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base;
            for (k, &f) in fracs.iter().enumerate() {
                if corner >> k & 1 == 1 {
                    w *= f;
                    idx += self.grid.strides()[k];
                } else {
                    w *= 1.0 - f;
                }
            }
            if w != 0.0 {
                acc += w * data[idx];
            }
        }
        Ok(acc)
    }

    /// Central-difference gradient of the interpolant with one grid spacing
    /// per axis. `x` must be at least one cell inside the grid.
    pub fn gradient_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n_dims();
        check_len("x", n, x)?;
        let mut grad = vec![0.0; n];
        let mut probe = x.to_vec();
        for k in 0..n {
            let a = self.grid.axis(k);
            let h = a.spacing();
            let tol = BOUNDS_TOL * (a.max - a.min);
            if x[k] - h < a.min - tol || x[k] + h > a.max + tol {
                return Err(Error::Domain(format!(
                    "gradient at {:?} needs one cell of clearance on axis {k}",
                    x
                )));
            }
            probe[k] = x[k] + h;
            let hi = self.interpolate(&probe)?;
            probe[k] = x[k] - h;
            let lo = self.interpolate(&probe)?;
            probe[k] = x[k];
            grad[k] = (hi - lo) / (2.0 * h);
        }
        Ok(grad)
    }

    /// Clamps `x` into the region where [`Self::gradient_at`] is defined.
    pub fn clamp_to_interior(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                let a = self.grid.axis(k);
                let h = a.spacing();
                v.clamp(a.min + h, a.max - h)
            })
            .collect()
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn opt_bits_eq(a: &Option<Vec<f64>>, b: &Option<Vec<f64>>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => bits_eq(a, b),
        _ => false,
    }
}
