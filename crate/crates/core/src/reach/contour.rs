use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hj::{Axis, ValueField};

/// Piecewise-linear level curve in a 2D slice; `closed` when the last point
/// joins the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// A 2D slice of a field: values over the two free axes, first axis
/// slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2d {
    pub free_axes: [usize; 2],
    pub x: Axis,
    pub y: Axis,
    pub values: Vec<f64>,
}

/// Extracts the 2D slice selected by `fixed`: one entry per grid axis,
/// `None` for the two free axes and an on-grid coordinate for the rest.
pub fn slice_2d(field: &ValueField, data: &[f64], fixed: &[Option<f64>]) -> Result<Slice2d> {
    let grid = &field.grid;
    if fixed.len() != grid.n_dims() {
        return Err(Error::dims("slice", grid.n_dims(), fixed.len()));
    }
    let free: Vec<usize> = (0..fixed.len()).filter(|&k| fixed[k].is_none()).collect();
    if free.len() != 2 {
        return Err(Error::Domain(format!(
            "a slice needs exactly two free axes, got {}",
            free.len()
        )));
    }
    let mut base = vec![0usize; grid.n_dims()];
    for (k, c) in fixed.iter().enumerate() {
        let Some(c) = *c else { continue };
        let ax = grid.axis(k);
        let pos = (c - ax.min) / ax.spacing();
        let i = pos.round();
        if !(0.0..=(ax.nodes - 1) as f64).contains(&i) || (pos - i).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "slice coordinate {c} on axis {k} is not a grid node"
            )));
        }
        base[k] = i as usize;
    }
    let (ax, ay) = (*grid.axis(free[0]), *grid.axis(free[1]));
    let mut values = Vec::with_capacity(ax.nodes * ay.nodes);
    let mut multi = base;
    for i in 0..ax.nodes {
        for j in 0..ay.nodes {
            multi[free[0]] = i;
            multi[free[1]] = j;
            values.push(data[grid.linear_index(&multi)]);
        }
    }
    Ok(Slice2d {
        free_axes: [free[0], free[1]],
        x: ax,
        y: ay,
        values,
    })
}

/// Level curves `{V = level}` of the field (or of a slice of it).
pub fn extract_contours(
    field: &ValueField,
    level: f64,
    fixed: &[Option<f64>],
) -> Result<Vec<Polyline>> {
    let s = slice_2d(field, &field.values, fixed)?;
    Ok(marching_squares(&s.x, &s.y, &s.values, level))
}

// Edge ids: horizontal edge (i,j)-(i+1,j) is 2*(i*ny+j), vertical edge
// (i,j)-(i,j+1) is 2*(i*ny+j)+1.
struct Mesh<'a> {
    x: &'a Axis,
    y: &'a Axis,
    v: &'a [f64],
    level: f64,
}

impl Mesh<'_> {
    fn val(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.y.nodes + j]
    }

    fn point(&self, edge: usize) -> [f64; 2] {
        let node = edge / 2;
        let (i, j) = (node / self.y.nodes, node % self.y.nodes);
        let (i2, j2) = if edge.is_multiple_of(2) {
            (i + 1, j)
        } else {
            (i, j + 1)
        };
        let (va, vb) = (self.val(i, j), self.val(i2, j2));
        let s = ((self.level - va) / (vb - va)).clamp(0.0, 1.0);
        let (xa, ya) = (self.x.coord(i), self.y.coord(j));
        let (xb, yb) = (self.x.coord(i2), self.y.coord(j2));
        [xa + s * (xb - xa), ya + s * (yb - ya)]
    }
}

/// Marching squares on a rectilinear 2D grid. `values` is indexed
/// `i * y.nodes + j`. Saddle cells are resolved by the cell mean, segments
/// are joined into polylines and the output order is deterministic.
pub fn marching_squares(x: &Axis, y: &Axis, values: &[f64], level: f64) -> Vec<Polyline> {
    let ny = y.nodes;
    let mesh = Mesh {
        x,
        y,
        v: values,
        level,
    };
    let h = |i: usize, j: usize| 2 * (i * ny + j);
    let v = |i: usize, j: usize| 2 * (i * ny + j) + 1;

    let mut segments: Vec<[usize; 2]> = Vec::new();
    for i in 0..x.nodes - 1 {
        for j in 0..ny - 1 {
            let c = [
                mesh.val(i, j),
                mesh.val(i + 1, j),
                mesh.val(i + 1, j + 1),
                mesh.val(i, j + 1),
            ];
            let case = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (b, &val)| acc | (u8::from(val >= level) << b));
            let (ab, bc, dc, ad) = (h(i, j), v(i + 1, j), h(i, j + 1), v(i, j));
            let centre_above = c.iter().sum::<f64>() / 4.0 >= level;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push([ab, ad]),
                2 | 13 => segments.push([ab, bc]),
                3 | 12 => segments.push([ad, bc]),
                4 | 11 => segments.push([bc, dc]),
                6 | 9 => segments.push([ab, dc]),
                7 | 8 => segments.push([ad, dc]),
                5 => {
                    if centre_above {
                        segments.extend([[ab, bc], [ad, dc]]);
                    } else {
                        segments.extend([[ab, ad], [bc, dc]]);
                    }
                }
                10 => {
                    if centre_above {
                        segments.extend([[ab, ad], [bc, dc]]);
                    } else {
                        segments.extend([[ab, bc], [ad, dc]]);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            by_edge.entry(e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let walk = |start_seg: usize, from: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut edges = Vec::new();
        let mut edge = from;
        let mut seg = start_seg;
        loop {
            let next = by_edge[&edge]
                .iter()
                .copied()
                .find(|&s| s != seg && !used[s]);
            let Some(s) = next else { break };
            used[s] = true;
            let [a, b] = segments[s];
            edge = if a == edge { b } else { a };
            edges.push(edge);
            seg = s;
        }
        edges
    };

    let mut lines = Vec::new();
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        used[s] = true;
        let [a, b] = segments[s];
        let forward = walk(s, b, &mut used);
        let backward = walk(s, a, &mut used);
        let mut edges: Vec<usize> = backward.into_iter().rev().collect();
        edges.push(a);
        edges.push(b);
        edges.extend(forward);
        let closed = edges.len() > 2 && edges.first() == edges.last();
        if closed {
            edges.pop();
        }
        lines.push(Polyline {
            points: edges.iter().map(|&e| mesh.point(e)).collect(),
            closed,
        });
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj::Grid;

    #[test]
    fn circle_is_one_closed_curve() {
        let g = Grid::uniform(&[-1.0, -1.0], &[1.0, 1.0], 41).unwrap();
        let f = ValueField::from_fn(g, 0.0, |x| x[0].hypot(x[1]) - 0.5);
        let lines = extract_contours(&f, 0.0, &[None, None]).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            assert!((p[0].hypot(p[1]) - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn plane_gives_exact_line() {
        let g = Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], 11).unwrap();
        let f = ValueField::from_fn(g, 0.0, |x| x[0] - 0.33);
        let lines = extract_contours(&f, 0.0, &[None, None]).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].points.len(), 11);
        for p in &lines[0].points {
            assert!((p[0] - 0.33).abs() < 1e-12);
        }
    }

    #[test]
    fn slices_require_grid_nodes() {
        let g = Grid::uniform(&[0.0; 3], &[1.0; 3], 5).unwrap();
        let f = ValueField::from_fn(g, 0.0, |x| x[0] + x[1] + x[2] - 1.0);
        assert!(extract_contours(&f, 0.0, &[None, None, Some(0.25)]).is_ok());
        assert!(extract_contours(&f, 0.0, &[None, None, Some(0.3)]).is_err());
        assert!(extract_contours(&f, 0.0, &[None, Some(0.5), Some(0.25)]).is_err());
    }

    #[test]
    fn saddle_uses_cell_mean() {
        let ax = Axis::new(0.0, 1.0, 2);
        // corners a=(0,0) b=(1,0) c=(1,1) d=(0,1); a and c above.
        let vals = [1.0, -1.0, -1.0, 1.0];
        // values[i*2+j]: (0,0)=1,(0,1)=-1,(1,0)=-1,(1,1)=1
        let lines = marching_squares(&ax, &ax, &vals, 0.1);
        assert_eq!(lines.len(), 2);
        let lines_hi = marching_squares(&ax, &ax, &vals, -0.1);
        assert_eq!(lines_hi.len(), 2);
        assert_ne!(lines, lines_hi);
    }
}
