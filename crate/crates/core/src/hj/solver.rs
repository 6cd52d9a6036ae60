//! Time-dependent HJI solver on a rectangular grid.
//!
//! The value function satisfies `dV/dt + H(x, grad V) = 0` with
//! `V(0, .) = l` and `H(x, p) = min_u max_d p^T F(x, u, d)`. In backward
//! time `tau = -t` this reads `dV/dtau = H(x, grad V)`. We discretise
//! `dV/dtau + G(x, grad V) = 0`, `G = -H`, with a local Lax-Friedrichs flux
//!
//! ```text
//! G^(x, p-, p+) = G(x, (p- + p+)/2) - sum_i a_i(x) (p+_i - p-_i)/2
//! ```
//!
//! where `a_i(x) = max |F_i(x, u, d)|` over the `U x D` lattice, and step
//! `V <- V - dtau G^` under `dtau <= cfl / sum_i (max_x a_i / dx_i)`.

use rayon::prelude::*;

use super::field::{FieldKind, FieldMeta, ValueField};
use super::grid::Grid;
use super::payoff::PayoffFn;
use crate::error::{Error, Result};
use crate::systems::{min_max, GameDynamics, GameLattice, ReducedSystem, SpSystem};

/// Largest grid dimension the solver handles.
pub const MAX_DIMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// Forward Euler in backward time.
    Euler,
    /// Two-stage TVD Runge-Kutta (Heun).
    Rk2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub cfl: f64,
    pub time_scheme: TimeScheme,
    /// Track `min`/`max` of `V(s, .)` over the accepted steps.
    pub track_extremes: bool,
    /// Times in `[t_final, 0]` at which to keep a copy of the field.
    pub snapshot_times: Vec<f64>,
    pub min_step: f64,
    /// Upper bound on cached `F` entries; beyond it `F` is evaluated per step.
    pub max_cache_entries: usize,
    /// Allow `solve_full_value` above three state dimensions.
    pub allow_high_dim: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            time_scheme: TimeScheme::Euler,
            track_extremes: true,
            snapshot_times: Vec::new(),
            min_step: 1e-12,
            max_cache_entries: 40_000_000,
            allow_high_dim: false,
        }
    }
}

/// Final field plus requested snapshots, ordered from `t = 0` backwards.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ValueField,
    pub snapshots: Vec<ValueField>,
}

/// Solves for the reduced value function over `z`.
pub fn solve_reduced_value(
    red: &ReducedSystem,
    ell: &PayoffFn,
    grid: &Grid,
    t_final: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    if ell.dim() != red.n_z() {
        return Err(Error::dims("payoff", red.n_z(), ell.dim()));
    }
    solve_value(red, ell, grid, t_final, opts, FieldKind::Reduced)
}

/// Solves for the full SP value function over `(z, y)` at fixed `eps`.
pub fn solve_full_value(
    sys: &SpSystem,
    eps: f64,
    ell: &PayoffFn,
    grid: &Grid,
    t_final: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    let dim = sys.n_z() + sys.n_y();
    if dim > 3 && !opts.allow_high_dim {
        return Err(Error::Config(format!(
            "full solve in {dim} dimensions exceeds the desk-scale limit of 3"
        )));
    }
    if ell.dim() != sys.n_z() {
        return Err(Error::dims("payoff", sys.n_z(), ell.dim()));
    }
    let joint = sys.at_eps(eps)?;
    solve_value(&joint, ell, grid, t_final, opts, FieldKind::Full { eps })
}

/// Per-node dynamics data: the cached `F` lattice (when it fits) and the
/// local dissipation coefficients.
struct NodeDynamics {
    lattice: GameLattice,
    dim: usize,
    n_u: usize,
    n_d: usize,
    table: Option<Vec<f64>>,
    alpha: Vec<f64>,
    alpha_max: Vec<f64>,
}

impl NodeDynamics {
    fn build<G: GameDynamics + ?Sized>(
        dynamics: &G,
        grid: &Grid,
        opts: &SolveOptions,
    ) -> Result<Self> {
        let lattice = GameLattice::of(dynamics);
        let dim = grid.n_dims();
        let per_node = lattice.table_len(dim);
        let cache = grid
            .len()
            .checked_mul(per_node)
            .is_some_and(|n| n <= opts.max_cache_entries);

        let fill = |idx: usize, x: &mut Vec<f64>, out: &mut [f64]| -> Result<()> {
            grid.node_coords_into(idx, x);
            lattice.fill_table(dynamics, x, out)
        };

        let mut alpha = vec![0.0; grid.len() * dim];
        let table = if cache {
            let mut table = vec![0.0; grid.len() * per_node];
            table
                .par_chunks_mut(per_node)
                .enumerate()
                .try_for_each_init(|| vec![0.0; dim], |x, (idx, out)| fill(idx, x, out))?;
            alpha
                .par_chunks_mut(dim)
                .zip(table.par_chunks(per_node))
                .for_each(|(a, t)| dissipation(t, a));
            Some(table)
        } else {
            alpha.par_chunks_mut(dim).enumerate().try_for_each_init(
                || (vec![0.0; dim], vec![0.0; per_node]),
                |(x, buf), (idx, a)| {
                    fill(idx, x, buf)?;
                    dissipation(buf, a);
                    Ok::<_, Error>(())
                },
            )?;
            None
        };
        let mut alpha_max = vec![0.0f64; dim];
        for a in alpha.chunks(dim) {
            for (m, &v) in alpha_max.iter_mut().zip(a) {
                *m = m.max(v);
            }
        }
        Ok(Self {
            n_u: lattice.n_controls(),
            n_d: lattice.n_disturbances(),
            lattice,
            dim,
            table,
            alpha,
            alpha_max,
        })
    }
}

fn dissipation(table: &[f64], alpha: &mut [f64]) {
    let dim = alpha.len();
    alpha.fill(0.0);
    for row in table.chunks(dim) {
        for (a, &v) in alpha.iter_mut().zip(row) {
            *a = a.max(v.abs());
        }
    }
}

/// Rate `dV/dtau = -G^` at one node.
#[inline]
fn node_rate(
    grid: &Grid,
    v: &[f64],
    idx: usize,
    table: &[f64],
    alpha: &[f64],
    nd: &NodeDynamics,
) -> f64 {
    let dim = nd.dim;
    let mut p_avg = [0.0f64; MAX_DIMS];
    let mut jump = 0.0;
    for k in 0..dim {
        let ax = grid.axis(k);
        let h = ax.spacing();
        let s = grid.strides()[k];
        let i = grid.axis_index(idx, k);
        // One ghost layer by linear extrapolation: the one-sided difference
        // at the boundary is reused on the missing side.
        let (pm, pp) = if i == 0 {
            let p = (v[idx + s] - v[idx]) / h;
            (p, p)
        } else if i == ax.nodes - 1 {
            let p = (v[idx] - v[idx - s]) / h;
            (p, p)
        } else {
            ((v[idx] - v[idx - s]) / h, (v[idx + s] - v[idx]) / h)
        };
        p_avg[k] = 0.5 * (pm + pp);
        jump += alpha[k] * 0.5 * (pp - pm);
    }
    let (h_val, _) = min_max(table, &p_avg[..dim], nd.n_u, nd.n_d);
    h_val + jump
}

fn apply_rate<G: GameDynamics + ?Sized>(
    dynamics: &G,
    grid: &Grid,
    nd: &NodeDynamics,
    v: &[f64],
    dtau: f64,
    out: &mut [f64],
) -> Result<()> {
    let dim = nd.dim;
    let per_node = nd.lattice.table_len(dim);
    match &nd.table {
        Some(table) => {
            out.par_iter_mut().enumerate().for_each(|(idx, o)| {
                let t = &table[idx * per_node..(idx + 1) * per_node];
                let a = &nd.alpha[idx * dim..(idx + 1) * dim];
                *o = v[idx] + dtau * node_rate(grid, v, idx, t, a, nd);
            });
            Ok(())
        }
        None => out.par_iter_mut().enumerate().try_for_each_init(
            || (vec![0.0; dim], vec![0.0; per_node]),
            |(x, buf), (idx, o)| {
                grid.node_coords_into(idx, x);
                nd.lattice.fill_table(dynamics, x, buf)?;
                let a = &nd.alpha[idx * dim..(idx + 1) * dim];
                *o = v[idx] + dtau * node_rate(grid, v, idx, buf, a, nd);
                Ok(())
            },
        ),
    }
}

/// Generic solver behind [`solve_reduced_value`] and [`solve_full_value`].
pub fn solve_value<G: GameDynamics + ?Sized>(
    dynamics: &G,
    ell: &PayoffFn,
    grid: &Grid,
    t_final: f64,
    opts: &SolveOptions,
    kind: FieldKind,
) -> Result<Solution> {
    let dim = dynamics.state_dim();
    if grid.n_dims() != dim {
        return Err(Error::dims("grid", dim, grid.n_dims()));
    }
    if dim > MAX_DIMS {
        return Err(Error::Config(format!(
            "solver supports at most {MAX_DIMS} dimensions, got {dim}"
        )));
    }
    if !(t_final <= 0.0) || !t_final.is_finite() {
        return Err(Error::Domain(format!(
            "t_final must be <= 0, got {t_final}"
        )));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(Error::Config(format!(
            "cfl must be in (0, 1], got {}",
            opts.cfl
        )));
    }
    for &s in &opts.snapshot_times {
        if !(s <= 0.0 && s >= t_final) {
            return Err(Error::Config(format!(
                "snapshot time {s} outside [{t_final}, 0]"
            )));
        }
    }

    let nd = NodeDynamics::build(dynamics, grid, opts)?;
    let rate_sum: f64 = nd
        .alpha_max
        .iter()
        .enumerate()
        .map(|(k, &a)| a / grid.spacing(k))
        .sum();
    let max_step = if rate_sum > 0.0 {
        opts.cfl / rate_sum
    } else {
        f64::INFINITY
    };
    let horizon = -t_final;
    if horizon > 0.0 && max_step < opts.min_step {
        return Err(Error::Progress {
            time: 0.0,
            step: max_step,
            min_step: opts.min_step,
        });
    }

    let scheme = match opts.time_scheme {
        TimeScheme::Euler => "llf-upwind/euler",
        TimeScheme::Rk2 => "llf-upwind/rk2",
    };
    let make_field = |values: &[f64], rmin: &[f64], rmax: &[f64], tau: f64, steps: usize| {
        let mut f = ValueField {
            grid: grid.clone(),
            time: if tau == 0.0 { 0.0 } else { -tau },
            values: values.to_vec(),
            running_min: None,
            running_max: None,
            meta: FieldMeta {
                kind,
                scheme: scheme.to_string(),
                cfl: opts.cfl,
                steps,
                max_step,
            },
        };
        if opts.track_extremes {
            f.running_min = Some(rmin.to_vec());
            f.running_max = Some(rmax.to_vec());
        }
        f
    };

    let initial = ValueField::from_fn(grid.clone(), 0.0, |x| ell.eval(x));
    let mut v = initial.values;
    let mut rmin = v.clone();
    let mut rmax = v.clone();

    // Stop points in backward time: snapshots then the horizon.
    let mut stops: Vec<f64> = opts.snapshot_times.iter().map(|s| -s).collect();
    stops.push(horizon);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut snapshots = Vec::new();
    let mut tau = 0.0f64;
    let mut steps = 0usize;
    let mut next = vec![0.0; v.len()];
    let mut stage = vec![0.0; v.len()];
    for &stop in &stops {
        while tau < stop {
            let remaining = stop - tau;
            let dtau = if remaining <= max_step {
                remaining
            } else {
                max_step
            };
            match opts.time_scheme {
                TimeScheme::Euler => apply_rate(dynamics, grid, &nd, &v, dtau, &mut next)?,
                TimeScheme::Rk2 => {
                    apply_rate(dynamics, grid, &nd, &v, dtau, &mut stage)?;
                    apply_rate(dynamics, grid, &nd, &stage, dtau, &mut next)?;
                    next.par_iter_mut()
                        .zip(v.par_iter())
                        .for_each(|(n, &old)| *n = 0.5 * (old + *n));
                }
            }
            std::mem::swap(&mut v, &mut next);
            steps += 1;
            tau = if remaining <= max_step {
                stop
            } else {
                tau + dtau
            };
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence {
                    step: steps,
                    time: -tau,
                });
            }
            if opts.track_extremes {
                for ((lo, hi), &x) in rmin.iter_mut().zip(rmax.iter_mut()).zip(&v) {
                    *lo = lo.min(x);
                    *hi = hi.max(x);
                }
            }
        }
        if stop < horizon || opts.snapshot_times.iter().any(|&s| -s == stop) {
            snapshots.push(make_field(&v, &rmin, &rmax, tau, steps));
        }
    }
    Ok(Solution {
        field: make_field(&v, &rmin, &rmax, tau, steps),
        snapshots,
    })
}
