use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};

type PayoffMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Bounded Lipschitz terminal payoff `l`; the target is `{z : l(z) < 0}`.
#[derive(Clone)]
pub struct PayoffFn {
    dim: usize,
    eval: PayoffMap,
    lipschitz_bound: f64,
    saturation: f64,
    target: Option<TargetBox>,
}

/// Open target box; `None` bounds are unconstrained axes.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBox {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl TargetBox {
    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (lo, hi))| lo.is_none_or(|lo| v > lo) && hi.is_none_or(|hi| v < hi))
    }
}

impl fmt::Debug for PayoffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PayoffFn")
            .field("dim", &self.dim)
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("saturation", &self.saturation)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl PayoffFn {
    /// Payoff from an arbitrary map. The caller vouches for the bounds.
    pub fn custom(
        dim: usize,
        lipschitz_bound: f64,
        saturation: f64,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            lipschitz_bound,
            saturation,
            target: None,
        }
    }

    /// Box target payoff
    /// `l(z) = min{ max_i slope * (|z_i - c_i| - w_i), cap }`
    /// over the constrained axes `i`, where `(c_i - w_i, c_i + w_i)` is the
    /// target interval. Axes listed in `free_dims` are ignored.
    pub fn target_box(
        target_lower: &[f64],
        target_upper: &[f64],
        slope: f64,
        cap: f64,
        free_dims: &[usize],
    ) -> Result<Self> {
        let dim = target_lower.len();
        check_len("target_upper", dim, target_upper)?;
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(Error::Domain(format!(
                "slope must be positive, got {slope}"
            )));
        }
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::Domain(format!("cap must be positive, got {cap}")));
        }
        if let Some(&k) = free_dims.iter().find(|&&k| k >= dim) {
            return Err(Error::Domain(format!("free dimension {k} out of range")));
        }
        let mut centers = Vec::new();
        let mut halves = Vec::new();
        let mut axes = Vec::new();
        let mut lower = vec![None; dim];
        let mut upper = vec![None; dim];
        for i in (0..dim).filter(|i| !free_dims.contains(i)) {
            let (lo, hi) = (target_lower[i], target_upper[i]);
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!(
                    "target is empty in dimension {i}: ({lo}, {hi})"
                )));
            }
            axes.push(i);
            centers.push(0.5 * (lo + hi));
            halves.push(0.5 * (hi - lo));
            lower[i] = Some(lo);
            upper[i] = Some(hi);
        }
        if axes.is_empty() {
            return Err(Error::Domain("target constrains no dimension".into()));
        }
        let min_half = halves.iter().copied().fold(f64::INFINITY, f64::min);
        let eval = move |z: &[f64]| {
            let mut worst = f64::NEG_INFINITY;
            for ((&i, &c), &w) in axes.iter().zip(&centers).zip(&halves) {
                worst = worst.max(slope * ((z[i] - c).abs() - w));
            }
            worst.min(cap)
        };
        Ok(Self {
            dim,
            eval: Arc::new(eval),
            lipschitz_bound: slope,
            saturation: cap.max(slope * min_half),
            target: Some(TargetBox { lower, upper }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn target(&self) -> Option<&TargetBox> {
        self.target.as_ref()
    }

    /// Evaluates `l` on the leading `dim` coordinates of `x`, so the same
    /// payoff serves both `z` and stacked `(z, y)` states.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(&x[..self.dim])
    }

    pub fn in_target(&self, z: &[f64]) -> bool {
        self.eval(z) < 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> PayoffFn {
        PayoffFn::target_box(&[0.25], &[0.75], 10.0, 3.0, &[]).unwrap()
    }

    #[test]
    fn one_dimensional_box() {
        let l = fig2();
        assert!((l.eval(&[0.5]) + 2.5).abs() < 1e-12);
        assert_eq!(l.eval(&[0.25]), 0.0);
        assert!((l.eval(&[1.0]) - 2.5).abs() < 1e-12);
        assert_eq!(l.eval(&[5.0]), 3.0);
        assert!(!l.in_target(&[0.25]));
        assert!(l.in_target(&[0.26]));
    }

    #[test]
    fn free_dimensions_are_ignored() {
        let l = PayoffFn::target_box(&[0.0, 0.4, 0.4], &[0.0, 0.6, 0.6], 10.0, 4.0, &[0]).unwrap();
        assert!((l.eval(&[0.0, 0.5, 0.5]) + 1.0).abs() < 1e-12);
        assert_eq!(l.eval(&[123.0, 0.5, 0.5]), l.eval(&[0.0, 0.5, 0.5]));
        assert_eq!(l.eval(&[0.0, 3.0, -2.0]), 4.0);
        let t = l.target().unwrap();
        assert!(t.contains(&[9.0, 0.45, 0.55]));
        assert!(!t.contains(&[9.0, 0.45, 0.65]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PayoffFn::target_box(&[0.5], &[0.5], 10.0, 3.0, &[]).is_err());
        assert!(PayoffFn::target_box(&[0.0], &[1.0], 0.0, 3.0, &[]).is_err());
        assert!(PayoffFn::target_box(&[0.0], &[1.0], 1.0, -3.0, &[]).is_err());
        assert!(PayoffFn::target_box(&[0.0], &[1.0], 1.0, 3.0, &[0]).is_err());
    }
}
