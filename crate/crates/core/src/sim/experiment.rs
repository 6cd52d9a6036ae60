use rayon::prelude::*;
use serde::Serialize;

use super::feedback::FeedbackPolicy;
use super::integrate::{integrate_sp, SimOptions, Trajectory};
use super::signal::Signal;
use crate::error::{Error, Result};
use crate::systems::SpSystem;

/// What the reduced value predicts for an initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    /// `V(t, z0) < -eta`: every run should reach the target.
    InsideInner,
    /// `V(t, z0) > +eta`: no run should reach the target.
    OutsideOuter,
    /// In the margin band; nothing is predicted.
    Indeterminate,
}

impl Prediction {
    pub fn classify(value: f64, eta: f64) -> Self {
        if value < -eta {
            Self::InsideInner
        } else if value > eta {
            Self::OutsideOuter
        } else {
            Self::Indeterminate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub reached: Option<bool>,
    pub error: Option<String>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateReport {
    pub z0: Vec<f64>,
    pub y0: Vec<f64>,
    pub value_at_start: f64,
    pub prediction: Prediction,
    pub runs: Vec<RunOutcome>,
    /// Fraction of successful runs that reached the target.
    pub reach_fraction: f64,
    /// `None` in the margin band.
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachExperiment {
    pub eps: f64,
    pub eta: f64,
    pub t: f64,
    pub seed: u64,
    pub n_disturbances: usize,
    pub states: Vec<StateReport>,
}

impl ReachExperiment {
    pub fn all_consistent(&self) -> bool {
        self.states.iter().all(|s| s.consistent != Some(false))
    }
}

/// Simulates every initial state under the feedback policy against
/// `n_disturbances` uniformly random disturbance signals. The value at the
/// start time is read from the policy's snapshot nearest to `t`. Integrator
/// failures are recorded per run.
#[allow(clippy::too_many_arguments)]
pub fn run_reach_experiment(
    sys: &SpSystem,
    eps: f64,
    policy: &FeedbackPolicy,
    initial_states: &[(Vec<f64>, Vec<f64>)],
    n_disturbances: usize,
    seed: u64,
    eta: f64,
    t: f64,
    opts: &SimOptions,
) -> Result<ReachExperiment> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    if opts.payoff.is_none() {
        return Err(Error::Config("reach experiments need a payoff".into()));
    }
    let field = policy.snapshot_at(t);
    let mut states = Vec::with_capacity(initial_states.len());
    for (i, (z0, y0)) in initial_states.iter().enumerate() {
        let value = field.interpolate(z0)?;
        let prediction = Prediction::classify(value, eta);
        let runs: Vec<RunOutcome> = (0..n_disturbances)
            .into_par_iter()
            .map(|r| {
                let mut u_sig = Signal::Feedback(policy);
                let mut d_sig = Signal::random(seed, (i * n_disturbances + r) as u64);
                match integrate_sp(sys, eps, z0, y0, &mut u_sig, &mut d_sig, t, opts) {
                    Ok(traj) => RunOutcome {
                        reached: traj.reached_target_at_0,
                        error: None,
                        trajectory: Some(traj),
                    },
                    Err(e) => RunOutcome {
                        reached: None,
                        error: Some(e.to_string()),
                        trajectory: None,
                    },
                }
            })
            .collect();
        let done: Vec<bool> = runs.iter().filter_map(|r| r.reached).collect();
        let reach_fraction = if done.is_empty() {
            0.0
        } else {
            done.iter().filter(|&&b| b).count() as f64 / done.len() as f64
        };
        let failed = done.len() < runs.len();
        let consistent = match prediction {
            Prediction::InsideInner => Some(!failed && done.iter().all(|&b| b)),
            Prediction::OutsideOuter => Some(!failed && done.iter().all(|&b| !b)),
            Prediction::Indeterminate => None,
        };
        states.push(StateReport {
            z0: z0.clone(),
            y0: y0.clone(),
            value_at_start: value,
            prediction,
            runs,
            reach_fraction,
            consistent,
        });
    }
    Ok(ReachExperiment {
        eps,
        eta,
        t,
        seed,
        n_disturbances,
        states,
    })
}
