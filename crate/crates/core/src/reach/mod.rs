//! Inner/outer reachable-set approximations from the reduced value
//! function, containment checks against a full SP value field, contours
//! and plot/mask export.

mod contour;
pub mod export;
pub mod svg;

pub use contour::{extract_contours, marching_squares, slice_2d, Polyline, Slice2d};

use crate::error::{Error, Result};
use crate::hj::{Grid, ValueField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// From `V(t, .)`.
    Brs,
    /// From the running minimum over `[t, 0]`; the inner mask is the
    /// meaningful one.
    BrtInner,
    /// From the running maximum over `[t, 0]`; the outer mask is the
    /// meaningful one.
    BstOuter,
}

/// Node masks `{V < -eta}` (inner) and `{V < +eta}` (outer) over `z`.
/// Both are valid for every fast state `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachBounds {
    pub grid: Grid,
    pub eta: f64,
    pub t: f64,
    pub kind: BoundKind,
    /// The level-set function the masks were cut from.
    pub levels: Vec<f64>,
    pub inner_mask: Vec<bool>,
    pub outer_mask: Vec<bool>,
}

impl ReachBounds {
    fn cut(grid: &Grid, t: f64, eta: f64, kind: BoundKind, levels: &[f64]) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            grid: grid.clone(),
            eta,
            t,
            kind,
            levels: levels.to_vec(),
            inner_mask: levels.iter().map(|&v| v < -eta).collect(),
            outer_mask: levels.iter().map(|&v| v < eta).collect(),
        })
    }

    pub fn inner_count(&self) -> usize {
        self.inner_mask.iter().filter(|&&b| b).count()
    }

    pub fn outer_count(&self) -> usize {
        self.outer_mask.iter().filter(|&&b| b).count()
    }
}

/// Inner and outer BRS approximations at margin `eta`.
pub fn brs_bounds(field: &ValueField, eta: f64) -> Result<ReachBounds> {
    ReachBounds::cut(&field.grid, field.time, eta, BoundKind::Brs, &field.values)
}

/// Tube bounds: the BRT inner approximation `{min_s V < -eta}` and the BST
/// outer approximation `{max_s V < +eta}`.
pub fn tube_bounds(field: &ValueField, eta: f64) -> Result<(ReachBounds, ReachBounds)> {
    let (Some(lo), Some(hi)) = (&field.running_min, &field.running_max) else {
        return Err(Error::Config(
            "tube bounds need a field solved with running extremes".into(),
        ));
    };
    Ok((
        ReachBounds::cut(&field.grid, field.time, eta, BoundKind::BrtInner, lo)?,
        ReachBounds::cut(&field.grid, field.time, eta, BoundKind::BstOuter, hi)?,
    ))
}

/// Which inclusion a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inclusion {
    /// `inner x Y` within `{V_eps <= 0}`.
    InnerWithinFull,
    /// `{V_eps <= 0}` within `outer x Y`.
    FullWithinOuter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub inclusion: Inclusion,
    /// Linear index into the full field's grid.
    pub full_index: usize,
    pub coords: Vec<f64>,
    pub reduced_value: f64,
    pub full_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub checked_nodes: usize,
    pub dilation_cells: usize,
    pub eta: f64,
    pub violations: Vec<Violation>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, inclusion: Inclusion) -> usize {
        self.violations
            .iter()
            .filter(|v| v.inclusion == inclusion)
            .count()
    }
}

/// Chebyshev dilation of a node mask by `radius` cells along the first
/// `n_axes` axes of `grid`.
pub fn dilate(mask: &[bool], grid: &Grid, n_axes: usize, radius: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    if radius == 0 {
        return cur;
    }
    for k in 0..n_axes {
        let stride = grid.strides()[k];
        let n = grid.axis(k).nodes;
        let mut next = cur.clone();
        for (idx, out) in next.iter_mut().enumerate() {
            if *out {
                continue;
            }
            let i = grid.axis_index(idx, k);
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            *out = (lo..=hi).any(|m| cur[idx - i * stride + m * stride]);
        }
        cur = next;
    }
    cur
}

/// Checks `inner x Y` within `{V_eps <= 0}` and `{V_eps <= 0}` within
/// `outer x Y` node by node. The permissive side of each inclusion is
/// dilated by `dilation_cells`; the full field's leading axes must be the
/// bounds' `z` axes.
pub fn check_containment(
    bounds: &ReachBounds,
    full: &ValueField,
    dilation_cells: usize,
) -> Result<ContainmentReport> {
    if !full.grid.leading_axes_match(&bounds.grid) {
        return Err(Error::Config(
            "full field's leading axes do not coincide with the reduced grid".into(),
        ));
    }
    let nz = bounds.grid.len();
    let per_z = full.grid.len() / nz;
    let full_sub: Vec<bool> = full.values.iter().map(|&v| v <= 0.0).collect();
    let full_dilated = dilate(&full_sub, &full.grid, full.grid.n_dims(), dilation_cells);
    let outer_dilated = dilate(
        &bounds.outer_mask,
        &bounds.grid,
        bounds.grid.n_dims(),
        dilation_cells,
    );

    let mut violations = Vec::new();
    for idx in 0..full.grid.len() {
        let iz = idx / per_z;
        let inclusion = if bounds.inner_mask[iz] && !full_dilated[idx] {
            Some(Inclusion::InnerWithinFull)
        } else if full_sub[idx] && !outer_dilated[iz] {
            Some(Inclusion::FullWithinOuter)
        } else {
            None
        };
        if let Some(inclusion) = inclusion {
            violations.push(Violation {
                inclusion,
                full_index: idx,
                coords: full.grid.node_coords(idx),
                reduced_value: bounds.levels[iz],
                full_value: full.values[idx],
            });
        }
    }
    Ok(ContainmentReport {
        checked_nodes: full.grid.len(),
        dilation_cells,
        eta: bounds.eta,
        violations,
    })
}

/// Broadcasts a field over `z` to the `(z, y)` grid `target` (whose leading
/// axes must be the field's axes).
pub fn broadcast(field: &ValueField, target: &Grid) -> Result<ValueField> {
    if !target.leading_axes_match(&field.grid) {
        return Err(Error::Config(
            "target grid does not extend the field's grid".into(),
        ));
    }
    let per = target.len() / field.grid.len();
    let values = (0..target.len()).map(|i| field.values[i / per]).collect();
    ValueField::new(target.clone(), field.time, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj::Axis;

    #[test]
    fn dilation_by_one_cell() {
        let g = Grid::new(vec![Axis::new(0.0, 1.0, 5), Axis::new(0.0, 1.0, 5)]).unwrap();
        let mut m = vec![false; 25];
        m[12] = true;
        let d = dilate(&m, &g, 2, 1);
        let count = d.iter().filter(|&&b| b).count();
        assert_eq!(count, 9);
        assert!(d[6] && d[18] && !d[0]);
        assert_eq!(dilate(&m, &g, 2, 0), m);
    }

    #[test]
    fn masks_are_strict() {
        let g = Grid::new(vec![Axis::new(0.0, 1.0, 3)]).unwrap();
        let f = ValueField::new(g, 0.0, vec![-0.1, 0.1, 0.0]).unwrap();
        let b = brs_bounds(&f, 0.1).unwrap();
        assert_eq!(b.inner_mask, vec![false, false, false]);
        assert_eq!(b.outer_mask, vec![true, false, true]);
        assert!(brs_bounds(&f, 0.0).is_err());
        assert!(tube_bounds(&f, 0.1).is_err());
    }
}
