//! CSV export of reachable-set masks.

use std::io::Write;

use super::ReachBounds;
use crate::error::{Error, Result};

/// Writes one row per node: coordinates followed by a 0/1 column for each
/// named mask. All masks must live on the same grid.
pub fn write_masks_csv<W: Write>(
    w: &mut W,
    masks: &[(&str, &[bool])],
    bounds: &ReachBounds,
) -> Result<()> {
    let grid = &bounds.grid;
    for (name, m) in masks {
        if m.len() != grid.len() {
            return Err(Error::dims(*name, grid.len(), m.len()));
        }
    }
    let mut header: Vec<String> = grid.labels().to_vec();
    header.push("level".into());
    header.extend(masks.iter().map(|(n, _)| n.to_string()));
    writeln!(w, "{}", header.join(","))?;
    let mut coords = vec![0.0; grid.n_dims()];
    for idx in 0..grid.len() {
        grid.node_coords_into(idx, &mut coords);
        let mut row: Vec<String> = coords.iter().map(|c| format!("{c:?}")).collect();
        row.push(format!("{:?}", bounds.levels[idx]));
        row.extend(masks.iter().map(|(_, m)| u8::from(m[idx]).to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Inner and outer masks of `bounds` as CSV.
pub fn write_bounds_csv<W: Write>(w: &mut W, bounds: &ReachBounds) -> Result<()> {
    write_masks_csv(
        w,
        &[("inner", &bounds.inner_mask), ("outer", &bounds.outer_mask)],
        bounds,
    )
}
