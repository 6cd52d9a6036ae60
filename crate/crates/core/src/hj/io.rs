//! Field export: CSV and the `SPRF` binary container.
//!
//! CSV: header `t,<axis labels>,value[,running_min,running_max]`, one node
//! per row in row-major order. Several fields can share one file (a
//! snapshot series); rows are grouped by `t`.
//!
//! Binary (all integers and floats little-endian):
//!
//! ```text
//! "SPRF"  u32 version (=1)  u32 n_dims
//! per axis: u64 nodes  f64 min  f64 max  u32 label_len  label bytes (utf-8)
//! f64 time  u8 flags (bit 0: running extremes present)
//! f64 values[n]  [f64 running_min[n]  f64 running_max[n]]
//! ```

use std::io::{BufRead, Read, Write};

use super::field::ValueField;
use super::grid::{Axis, Grid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SPRF";
pub const VERSION: u32 = 1;

pub fn write_csv<W: Write>(field: &ValueField, mut w: W) -> Result<()> {
    write_csv_header(field, &mut w)?;
    write_csv_rows(field, &mut w)
}

/// Writes several fields on the same grid as one CSV (one header).
pub fn write_csv_series<W: Write>(fields: &[ValueField], mut w: W) -> Result<()> {
    let Some(first) = fields.first() else {
        return Err(Error::Format("empty snapshot series".into()));
    };
    write_csv_header(first, &mut w)?;
    for f in fields {
        if f.grid != first.grid || f.has_extremes() != first.has_extremes() {
            return Err(Error::Format(
                "series fields must share grid and columns".into(),
            ));
        }
        write_csv_rows(f, &mut w)?;
    }
    Ok(())
}

fn write_csv_header<W: Write>(field: &ValueField, w: &mut W) -> Result<()> {
    let mut cols = vec!["t".to_string()];
    cols.extend(field.grid.labels().iter().cloned());
    cols.push("value".into());
    if field.has_extremes() {
        cols.push("running_min".into());
        cols.push("running_max".into());
    }
    writeln!(w, "{}", cols.join(","))?;
    Ok(())
}

fn write_csv_rows<W: Write>(field: &ValueField, w: &mut W) -> Result<()> {
    let g = &field.grid;
    let mut x = vec![0.0; g.n_dims()];
    for idx in 0..g.len() {
        g.node_coords_into(idx, &mut x);
        write!(w, "{:?}", field.time)?;
        for c in &x {
            write!(w, ",{c:?}")?;
        }
        write!(w, ",{:?}", field.values[idx])?;
        if let (Some(lo), Some(hi)) = (&field.running_min, &field.running_max) {
            write!(w, ",{:?},{:?}", lo[idx], hi[idx])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<ValueField> {
    let mut series = read_csv_series(r)?;
    if series.len() != 1 {
        return Err(Error::Format(format!(
            "expected one field, found {} time levels",
            series.len()
        )));
    }
    Ok(series.remove(0))
}

pub fn read_csv_series<R: BufRead>(r: R) -> Result<Vec<ValueField>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let value_col = cols
        .iter()
        .position(|&c| c == "value")
        .ok_or_else(|| Error::Format("missing `value` column".into()))?;
    if cols.first() != Some(&"t") || value_col < 2 {
        return Err(Error::Format(
            "header must start with `t` and axis columns".into(),
        ));
    }
    let n_dims = value_col - 1;
    let extremes = match &cols[value_col + 1..] {
        [] => false,
        ["running_min", "running_max"] => true,
        other => return Err(Error::Format(format!("unexpected columns {other:?}"))),
    };
    let labels: Vec<String> = cols[1..value_col].iter().map(|s| s.to_string()).collect();
    let width = cols.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
        if vals.len() != width {
            return Err(Error::Format(format!(
                "line {}: expected {width} columns, got {}",
                lineno + 2,
                vals.len()
            )));
        }
        rows.push(vals);
    }

    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let t = rows[start][0];
        let end = rows[start..]
            .iter()
            .position(|r| r[0].to_bits() != t.to_bits())
            .map_or(rows.len(), |p| start + p);
        out.push(field_from_rows(
            &rows[start..end],
            n_dims,
            &labels,
            extremes,
        )?);
        start = end;
    }
    Ok(out)
}

fn field_from_rows(
    rows: &[Vec<f64>],
    n_dims: usize,
    labels: &[String],
    extremes: bool,
) -> Result<ValueField> {
    let mut axes = Vec::with_capacity(n_dims);
    for k in 0..n_dims {
        let mut coords: Vec<u64> = rows.iter().map(|r| r[1 + k].to_bits()).collect();
        coords.sort_unstable();
        coords.dedup();
        axes.push(Axis::new(
            rows[0][1 + k],
            rows[rows.len() - 1][1 + k],
            coords.len(),
        ));
    }
    let grid = Grid::new(axes)?.with_labels(labels.iter().cloned());
    if grid.len() != rows.len() {
        return Err(Error::Format(format!(
            "{} rows do not form a full grid of {} nodes",
            rows.len(),
            grid.len()
        )));
    }
    let mut x = vec![0.0; n_dims];
    for (idx, r) in rows.iter().enumerate() {
        grid.node_coords_into(idx, &mut x);
        if x.iter()
            .zip(&r[1..=n_dims])
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::Format(format!(
                "row {idx} is not in row-major grid order"
            )));
        }
    }
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
    let mut f = ValueField::new(grid, rows[0][0], col(1 + n_dims))?;
    if extremes {
        f = f.with_extremes(col(2 + n_dims), col(3 + n_dims))?;
    }
    Ok(f)
}

pub fn write_binary<W: Write>(field: &ValueField, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.grid.n_dims() as u32).to_le_bytes())?;
    for (a, label) in field.grid.axes().iter().zip(field.grid.labels()) {
        w.write_all(&(a.nodes as u64).to_le_bytes())?;
        w.write_all(&a.min.to_le_bytes())?;
        w.write_all(&a.max.to_le_bytes())?;
        w.write_all(&(label.len() as u32).to_le_bytes())?;
        w.write_all(label.as_bytes())?;
    }
    w.write_all(&field.time.to_le_bytes())?;
    w.write_all(&[u8::from(field.has_extremes())])?;
    let mut put = |data: &[f64]| -> Result<()> {
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    put(&field.values)?;
    if let (Some(lo), Some(hi)) = (&field.running_min, &field.running_max) {
        put(lo)?;
        put(hi)?;
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated SPRF stream: {e}")))?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<ValueField> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Format("bad magic, expected SPRF".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported SPRF version {version}")));
    }
    let n_dims = u32::from_le_bytes(take(&mut r)?) as usize;
    if n_dims == 0 || n_dims > 16 {
        return Err(Error::Format(format!(
            "implausible dimension count {n_dims}"
        )));
    }
    let mut axes = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n_dims {
        let nodes = u64::from_le_bytes(take(&mut r)?) as usize;
        let min = f64::from_le_bytes(take(&mut r)?);
        let max = f64::from_le_bytes(take(&mut r)?);
        let len = u32::from_le_bytes(take(&mut r)?) as usize;
        let mut label = vec![0u8; len];
        r.read_exact(&mut label)
            .map_err(|e| Error::Format(format!("truncated label: {e}")))?;
        labels.push(String::from_utf8(label).map_err(|e| Error::Format(e.to_string()))?);
        axes.push(Axis::new(min, max, nodes));
    }
    let grid = Grid::new(axes)?.with_labels(labels);
    let time = f64::from_le_bytes(take(&mut r)?);
    let flags = take::<1, _>(&mut r)?[0];
    let n = grid.len();
    let mut get = || -> Result<Vec<f64>> {
        (0..n)
            .map(|_| Ok(f64::from_le_bytes(take(&mut r)?)))
            .collect()
    };
    let values = get()?;
    let mut field = ValueField::new(grid, time, values)?;
    if flags & 1 == 1 {
        let lo = get()?;
        let hi = get()?;
        field = field.with_extremes(lo, hi)?;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ValueField {
        let g = Grid::new(vec![Axis::new(0.1, 0.7, 4), Axis::new(-1.0, 1.0, 3)])
            .unwrap()
            .with_labels(["z0", "y0"]);
        let f = ValueField::from_fn(g, -0.3, |x| (x[0] * 7.3).sin() / 3.0 + x[1]);
        let lo = f.values.iter().map(|v| v - 0.1).collect();
        let hi = f.values.iter().map(|v| v + 1e-17).collect();
        f.with_extremes(lo, hi).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,z0,y0,value,running_min,running_max\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert!(back.data_eq(&f));
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SPRF");
        let back = read_binary(buf.as_slice()).unwrap();
        assert!(back.data_eq(&f));
        assert!(read_binary(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn series_round_trip() {
        let a = sample();
        let mut b = sample();
        b.time = -0.6;
        let mut buf = Vec::new();
        write_csv_series(&[a.clone(), b.clone()], &mut buf).unwrap();
        let back = read_csv_series(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back[0].data_eq(&a) && back[1].data_eq(&b));
    }
}
