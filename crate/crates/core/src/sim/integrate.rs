use std::io::Write;

use super::signal::Signal;
use crate::error::{Error, Result};
use crate::hj::PayoffFn;
use crate::systems::{BoxSet, ReducedSystem, SpSystem};

/// Integration settings. The RK4 step is `min(h, eps * fast_fraction)` for
/// SP runs, shrunk so that it divides the sample period.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub h: f64,
    pub fast_fraction: f64,
    /// Zero-order-hold period; `|t| / 200` when `None`.
    pub sample_period: Option<f64>,
    /// Used for `reached_target_at_0` and `min_payoff_along`.
    pub payoff: Option<PayoffFn>,
    /// Slow states passed to feedback policies are clamped into this box
    /// (typically the value grid's interior).
    pub feedback_clamp: Option<BoxSet>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            h: 1e-2,
            fast_fraction: 0.1,
            sample_period: None,
            payoff: None,
            feedback_clamp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Sample times from `t` up to `0`.
    pub times: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    /// Fast states of SP runs.
    pub y: Option<Vec<Vec<f64>>>,
    /// Control and disturbance held on each sample period.
    pub u: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub reached_target_at_0: Option<bool>,
    pub min_payoff_along: Option<f64>,
}

impl Trajectory {
    pub fn final_z(&self) -> &[f64] {
        self.z.last().expect("trajectories are never empty")
    }
}

type Rhs<'a> = dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) -> Result<()> + 'a;

fn rk4_step(
    rhs: &Rhs,
    x: &mut [f64],
    u: &[f64],
    d: &[f64],
    h: f64,
    buf: &mut [Vec<f64>; 5],
) -> Result<()> {
    let n = x.len();
    let [k1, k2, k3, k4, tmp] = buf;
    rhs(x, u, d, k1)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    rhs(tmp, u, d, k2)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    rhs(tmp, u, d, k3)?;
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    rhs(tmp, u, d, k4)?;
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Sample times, states, and the inputs applied on each interval.
type RawPath = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

#[allow(clippy::too_many_arguments)]
fn run(
    n_z: usize,
    x0: Vec<f64>,
    rhs: &Rhs,
    u_set: &BoxSet,
    d_set: &BoxSet,
    u_sig: &mut Signal,
    d_sig: &mut Signal,
    t: f64,
    h_max: f64,
    opts: &SimOptions,
) -> Result<RawPath> {
    if !(t <= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "horizon t must be finite and <= 0, got {t}"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial state is not finite".into()));
    }
    if t == 0.0 {
        return Ok((vec![0.0], vec![x0], Vec::new(), Vec::new()));
    }
    let period = opts.sample_period.unwrap_or(-t / 200.0);
    if !(period > 0.0) {
        return Err(Error::Config(format!(
            "sample period must be positive, got {period}"
        )));
    }
    if !(h_max > 1e-15 * -t) {
        return Err(Error::Config(format!(
            "integration step {h_max} underflows"
        )));
    }
    let n_periods = ((-t / period) - 1e-9).ceil().max(1.0) as usize;
    let period = -t / n_periods as f64;
    let n_sub = (period / h_max - 1e-9).ceil().max(1.0) as usize;
    let h = period / n_sub as f64;

    let n = x0.len();
    let mut buf: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut times = Vec::with_capacity(n_periods + 1);
    let mut states = Vec::with_capacity(n_periods + 1);
    let mut us = Vec::with_capacity(n_periods);
    let mut ds = Vec::with_capacity(n_periods);
    let mut x = x0;
    let time_at = |k: usize| {
        if k == n_periods {
            0.0
        } else {
            t * (1.0 - k as f64 / n_periods as f64)
        }
    };
    times.push(t);
    states.push(x.clone());
    for k in 0..n_periods {
        let tk = time_at(k);
        let z_query = match &opts.feedback_clamp {
            Some(b) => b.project(&x[..n_z]),
            None => x[..n_z].to_vec(),
        };
        let u = u_sig.sample(k, tk, &z_query, u_set, None)?;
        let d = d_sig.sample(k, tk, &z_query, d_set, Some(&u))?;
        if !u_set.contains(&u, 1e-12) {
            return Err(Error::Domain(format!(
                "control {u:?} left its box at t = {tk}"
            )));
        }
        if !d_set.contains(&d, 1e-12) {
            return Err(Error::Domain(format!(
                "disturbance {d:?} left its box at t = {tk}"
            )));
        }
        for s in 0..n_sub {
            rk4_step(rhs, &mut x, &u, &d, h, &mut buf)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step: k * n_sub + s + 1,
                    time: tk + (s + 1) as f64 * h,
                });
            }
        }
        times.push(time_at(k + 1));
        states.push(x.clone());
        us.push(u);
        ds.push(d);
    }
    Ok((times, states, us, ds))
}

fn finish(
    n_z: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    with_fast: bool,
    payoff: Option<&PayoffFn>,
) -> Trajectory {
    let z: Vec<Vec<f64>> = states.iter().map(|x| x[..n_z].to_vec()).collect();
    let y = with_fast.then(|| states.iter().map(|x| x[n_z..].to_vec()).collect());
    let (reached, min_payoff) = match payoff {
        Some(l) => (
            Some(l.eval(z.last().expect("non-empty")) < 0.0),
            Some(z.iter().map(|s| l.eval(s)).fold(f64::INFINITY, f64::min)),
        ),
        None => (None, None),
    };
    Trajectory {
        times,
        z,
        y,
        u,
        d,
        reached_target_at_0: reached,
        min_payoff_along: min_payoff,
    }
}

/// Integrates the SP system from `(z0, y0)` at time `t <= 0` up to `0`
/// with fixed-step RK4.
#[allow(clippy::too_many_arguments)]
pub fn integrate_sp(
    sys: &SpSystem,
    eps: f64,
    z0: &[f64],
    y0: &[f64],
    u_sig: &mut Signal,
    d_sig: &mut Signal,
    t: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    crate::error::check_len("z0", sys.n_z(), z0)?;
    crate::error::check_len("y0", sys.n_y(), y0)?;
    let n_z = sys.n_z();
    let rhs = |x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]| -> Result<()> {
        let (zd, yd) = sys.eval_rhs(eps, &x[..n_z], &x[n_z..], u, d)?;
        out[..n_z].copy_from_slice(zd.as_slice());
        out[n_z..].copy_from_slice(yd.as_slice());
        Ok(())
    };
    let x0 = [z0, y0].concat();
    let h = opts.h.min(eps * opts.fast_fraction);
    let (times, states, u, d) = run(
        n_z,
        x0,
        &rhs,
        sys.u_set(),
        sys.d_set(),
        u_sig,
        d_sig,
        t,
        h,
        opts,
    )?;
    Ok(finish(n_z, times, states, u, d, true, opts.payoff.as_ref()))
}

/// Integrates the reduced model from `z0` at time `t <= 0` up to `0`.
pub fn integrate_reduced(
    red: &ReducedSystem,
    z0: &[f64],
    u_sig: &mut Signal,
    d_sig: &mut Signal,
    t: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    crate::error::check_len("z0", red.n_z(), z0)?;
    let rhs = |x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]| -> Result<()> {
        out.copy_from_slice(red.eval(x, u, d)?.as_slice());
        Ok(())
    };
    let n_z = red.n_z();
    let (times, states, u, d) = run(
        n_z,
        z0.to_vec(),
        &rhs,
        red.u_set(),
        red.d_set(),
        u_sig,
        d_sig,
        t,
        opts.h,
        opts,
    )?;
    Ok(finish(
        n_z,
        times,
        states,
        u,
        d,
        false,
        opts.payoff.as_ref(),
    ))
}

/// CSV with columns `t, z.., y.., u.., d..`; the last row has no applied
/// inputs.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let n_z = traj.z[0].len();
    let n_y = traj.y.as_ref().map_or(0, |y| y[0].len());
    let n_u = traj.u.first().map_or(0, Vec::len);
    let n_d = traj.d.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n_z).map(|i| format!("z{i}")));
    header.extend((1..=n_y).map(|i| format!("y{i}")));
    header.extend((1..=n_u).map(|i| format!("u{i}")));
    header.extend((1..=n_d).map(|i| format!("d{i}")));
    writeln!(w, "{}", header.join(","))?;
    for (k, &t) in traj.times.iter().enumerate() {
        let mut row = vec![format!("{t:?}")];
        row.extend(traj.z[k].iter().map(|v| format!("{v:?}")));
        if let Some(y) = &traj.y {
            row.extend(y[k].iter().map(|v| format!("{v:?}")));
        }
        match (traj.u.get(k), traj.d.get(k)) {
            (Some(u), Some(d)) => {
                row.extend(u.iter().map(|v| format!("{v:?}")));
                row.extend(d.iter().map(|v| format!("{v:?}")));
            }
            _ => row.extend(std::iter::repeat_n(String::new(), n_u + n_d)),
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
