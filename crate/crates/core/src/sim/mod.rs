//! Trajectory simulation under piecewise-constant signals, value-gradient
//! feedback synthesis and reach/no-reach experiments.

mod experiment;
mod feedback;
mod integrate;
mod signal;

pub use experiment::{run_reach_experiment, Prediction, ReachExperiment, RunOutcome, StateReport};
pub use feedback::FeedbackPolicy;
pub use integrate::{
    integrate_reduced, integrate_sp, write_trajectory_csv, SimOptions, Trajectory,
};
pub use signal::{Signal, SignalSpec};
