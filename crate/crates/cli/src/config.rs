//! Strict JSON run configuration.

use serde::{Deserialize, Serialize};
use spreach::hj::{Axis, Grid, PayoffFn, SolveOptions, TimeScheme};
use spreach::systems::{BoxSet, ModelDescription};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: ModelDescription,
    /// Grid over the slow state.
    pub grid: GridSpec,
    /// Grid over the fast state, for full solves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast_grid: Option<GridSpec>,
    pub payoff: PayoffSpec,
    pub solve: SolveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSpec {
    pub target_lower: Vec<f64>,
    pub target_upper: Vec<f64>,
    pub slope: f64,
    pub cap: f64,
    /// Axes the target does not constrain.
    #[serde(default)]
    pub free_dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Euler,
    Rk2,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_dilation() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub t_final: f64,
    pub eta: f64,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Adds snapshots every `snapshot_every` time units inside `(t_final, 0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    /// Containment slack in grid cells.
    #[serde(default = "default_dilation")]
    pub dilation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub z: Vec<f64>,
    /// Zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

fn default_disturbances() -> usize {
    20
}

fn default_h() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub initial_states: Vec<InitialState>,
    #[serde(default = "default_disturbances")]
    pub n_disturbances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LyapunovSpec {
    #[default]
    Identity,
    /// Solves `A'P + PA = -I` at the centre of the boxes.
    Nominal,
    Matrix {
        p: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub n_samples: usize,
    pub n_probes: usize,
    pub lambda_scale: f64,
    pub decay_horizon: f64,
    pub decay_trials: usize,
    pub decay_pieces: usize,
    pub seed: u64,
    pub lyapunov: LyapunovSpec,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_probes: 1000,
            lambda_scale: 2.0,
            decay_horizon: 10.0,
            decay_trials: 100,
            decay_pieces: 16,
            seed: 0,
            lyapunov: LyapunovSpec::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatName {
    Csv,
    Json,
    Svg,
    Binary,
}

fn default_formats() -> Vec<FormatName> {
    vec![FormatName::Csv, FormatName::Json, FormatName::Svg]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<FormatName>,
    /// Fixed coordinates selecting a 2D plot slice of the slow grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_slice: Option<Vec<Option<f64>>>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
            plot_slice: None,
        }
    }
}

/// Command-line overrides; they take precedence over file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eps: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub t: Option<f64>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("`{field}` {msg}"))
}

fn check_grid(name: &str, g: &GridSpec, dim: usize) -> Result<(), CliError> {
    if g.lower.len() != dim || g.upper.len() != dim {
        return Err(invalid(
            name,
            format!(
                "needs {dim} lower and upper bounds, got {} and {}",
                g.lower.len(),
                g.upper.len()
            ),
        ));
    }
    if g.nodes < 3 {
        return Err(invalid(
            &format!("{name}.nodes"),
            format!("must be >= 3 (got {})", g.nodes),
        ));
    }
    for (k, (lo, hi)) in g.lower.iter().zip(&g.upper).enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(
                name,
                format!("axis {k} must satisfy lower < upper (got {lo}, {hi})"),
            ));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("malformed config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(eps) = &o.eps {
            self.solve.eps = eps.clone();
        }
        if let Some(eta) = o.eta {
            self.solve.eta = eta;
        }
        if let Some(t) = o.t {
            self.solve.t_final = t;
        }
        if let Some(n) = o.grid {
            self.grid.nodes = n;
            if let Some(fg) = &mut self.fast_grid {
                fg.nodes = n;
            }
        }
        if let Some(seed) = o.seed {
            if let Some(e) = &mut self.experiment {
                e.seed = seed;
            }
            self.verify.seed = seed;
        }
    }

    /// Range checks that do not need the built system.
    pub fn validate(&self, n_z: usize, n_y: usize) -> Result<(), CliError> {
        let s = &self.solve;
        if !(s.eta > 0.0) || !s.eta.is_finite() {
            return Err(invalid("solve.eta", format!("must be > 0 (got {})", s.eta)));
        }
        if !(s.t_final <= 0.0) || !s.t_final.is_finite() {
            return Err(invalid(
                "solve.t_final",
                format!("must be <= 0 (got {})", s.t_final),
            ));
        }
        if let Some(e) = s.eps.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(invalid(
                "solve.eps",
                format!("entries must be > 0 (got {e})"),
            ));
        }
        if !(s.cfl > 0.0 && s.cfl <= 1.0) {
            return Err(invalid(
                "solve.cfl",
                format!("must be in (0, 1] (got {})", s.cfl),
            ));
        }
        if let Some(t) = s
            .snapshot_times
            .iter()
            .find(|&&t| !(t <= 0.0 && t >= s.t_final))
        {
            return Err(invalid(
                "solve.snapshot_times",
                format!("entries must lie in [t_final, 0] (got {t})"),
            ));
        }
        if let Some(dt) = s.snapshot_every {
            if !(dt > 0.0) {
                return Err(invalid(
                    "solve.snapshot_every",
                    format!("must be > 0 (got {dt})"),
                ));
            }
        }
        check_grid("grid", &self.grid, n_z)?;
        if let Some(fg) = &self.fast_grid {
            check_grid("fast_grid", fg, n_y)?;
        }
        let p = &self.payoff;
        if p.target_lower.len() != n_z || p.target_upper.len() != n_z {
            return Err(invalid(
                "payoff",
                format!("target bounds need {n_z} entries"),
            ));
        }
        if !(p.slope > 0.0) {
            return Err(invalid(
                "payoff.slope",
                format!("must be > 0 (got {})", p.slope),
            ));
        }
        if !(p.cap > 0.0) {
            return Err(invalid(
                "payoff.cap",
                format!("must be > 0 (got {})", p.cap),
            ));
        }
        if let Some(e) = &self.experiment {
            if e.n_disturbances == 0 {
                return Err(invalid("experiment.n_disturbances", "must be >= 1"));
            }
            if !(e.h > 0.0) {
                return Err(invalid(
                    "experiment.h",
                    format!("must be > 0 (got {})", e.h),
                ));
            }
            if let Some(sp) = e.sample_period {
                if !(sp > 0.0) {
                    return Err(invalid(
                        "experiment.sample_period",
                        format!("must be > 0 (got {sp})"),
                    ));
                }
            }
            for (i, st) in e.initial_states.iter().enumerate() {
                if st.z.len() != n_z {
                    return Err(invalid(
                        &format!("experiment.initial_states[{i}].z"),
                        format!("needs {n_z} entries"),
                    ));
                }
                if st.y.as_ref().is_some_and(|y| y.len() != n_y) {
                    return Err(invalid(
                        &format!("experiment.initial_states[{i}].y"),
                        format!("needs {n_y} entries"),
                    ));
                }
            }
        }
        let v = &self.verify;
        if v.n_samples == 0 || v.n_probes == 0 {
            return Err(invalid("verify", "sample and probe counts must be >= 1"));
        }
        if !(v.decay_horizon > 0.0) {
            return Err(invalid("verify.decay_horizon", "must be > 0"));
        }
        if let Some(slice) = &self.output.plot_slice {
            if slice.len() != n_z {
                return Err(invalid("output.plot_slice", format!("needs {n_z} entries")));
            }
        }
        Ok(())
    }

    pub fn slow_grid(&self) -> spreach::Result<Grid> {
        let g = &self.grid;
        let axes = (0..g.lower.len())
            .map(|k| Axis::new(g.lower[k], g.upper[k], g.nodes))
            .collect();
        Ok(Grid::new(axes)?.with_labels((1..=g.lower.len()).map(|k| format!("z{k}"))))
    }

    /// The slow grid extended by the fast grid.
    pub fn joint_grid(&self) -> Result<Grid, CliError> {
        let Some(fg) = &self.fast_grid else {
            return Err(CliError::config("`fast_grid` is required for full solves"));
        };
        let slow = self.slow_grid()?;
        let mut axes = slow.axes().to_vec();
        axes.extend((0..fg.lower.len()).map(|k| Axis::new(fg.lower[k], fg.upper[k], fg.nodes)));
        let labels = slow
            .labels()
            .iter()
            .cloned()
            .chain((1..=fg.lower.len()).map(|k| format!("y{k}")))
            .collect::<Vec<_>>();
        Ok(Grid::new(axes)?.with_labels(labels))
    }

    pub fn payoff_fn(&self) -> spreach::Result<PayoffFn> {
        let p = &self.payoff;
        PayoffFn::target_box(
            &p.target_lower,
            &p.target_upper,
            p.slope,
            p.cap,
            &p.free_dims,
        )
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        let s = &self.solve;
        let mut times = s.snapshot_times.clone();
        if let Some(dt) = s.snapshot_every {
            let mut k = 1;
            loop {
                let t = -(k as f64) * dt;
                if t <= s.t_final + 1e-12 {
                    break;
                }
                times.push(t);
                k += 1;
            }
        }
        times.sort_by(|a, b| b.total_cmp(a));
        times.dedup();
        times
    }

    pub fn solve_options(&self, snapshots: bool) -> SolveOptions {
        SolveOptions {
            cfl: self.solve.cfl,
            time_scheme: match self.solve.scheme {
                SchemeName::Euler => TimeScheme::Euler,
                SchemeName::Rk2 => TimeScheme::Rk2,
            },
            snapshot_times: if snapshots {
                self.snapshot_times()
            } else {
                Vec::new()
            },
            ..Default::default()
        }
    }

    pub fn wants(&self, f: FormatName) -> bool {
        self.output.formats.contains(&f)
    }

    /// The slow-state box of the grid.
    pub fn grid_box(&self) -> spreach::Result<BoxSet> {
        BoxSet::new(self.grid.lower.clone(), self.grid.upper.clone(), 2)
    }

    /// Settings pinned to the genetic-circuit experiment.
    pub fn figure2() -> Self {
        Self {
            system: ModelDescription::GeneticCircuit {
                alpha: 1.0,
                u_set: None,
                d_set: None,
            },
            grid: GridSpec {
                lower: vec![0.0],
                upper: vec![1.0],
                nodes: 101,
            },
            fast_grid: Some(GridSpec {
                lower: vec![0.0],
                upper: vec![1.0],
                nodes: 101,
            }),
            payoff: PayoffSpec {
                target_lower: vec![0.25],
                target_upper: vec![0.75],
                slope: 10.0,
                cap: 3.0,
                free_dims: Vec::new(),
            },
            solve: SolveSpec {
                t_final: -0.5,
                eta: 0.1,
                eps: vec![1.0, 0.01],
                cfl: 0.5,
                scheme: SchemeName::Euler,
                snapshot_times: Vec::new(),
                snapshot_every: None,
                dilation: 1,
            },
            experiment: None,
            verify: VerifySpec::default(),
            output: OutputSpec::default(),
        }
    }

    /// Settings pinned to the metabolic reaction network experiment.
    pub fn figure3() -> Self {
        Self {
            system: ModelDescription::Mrn {
                n_metabolites: 20,
                seed: 0,
                edges: None,
                u_set: None,
                d_set: None,
            },
            grid: GridSpec {
                lower: vec![0.0; 3],
                upper: vec![1.0; 3],
                nodes: 41,
            },
            fast_grid: None,
            payoff: PayoffSpec {
                target_lower: vec![0.0, 0.4, 0.4],
                target_upper: vec![1.0, 0.6, 0.6],
                slope: 10.0,
                cap: 4.0,
                free_dims: vec![0],
            },
            solve: SolveSpec {
                t_final: -3.0,
                eta: 0.5,
                eps: vec![0.01],
                cfl: 0.5,
                scheme: SchemeName::Euler,
                snapshot_times: Vec::new(),
                snapshot_every: Some(0.1),
                dilation: 1,
            },
            experiment: Some(ExperimentSpec {
                initial_states: vec![
                    InitialState {
                        z: vec![0.0, 0.025, 0.1],
                        y: None,
                    },
                    InitialState {
                        z: vec![0.0, 0.15, 0.1],
                        y: None,
                    },
                ],
                n_disturbances: 20,
                seed: 0,
                sample_period: None,
                h: 1e-2,
            }),
            verify: VerifySpec {
                lyapunov: LyapunovSpec::Nominal,
                ..VerifySpec::default()
            },
            output: OutputSpec {
                plot_slice: Some(vec![Some(0.0), None, None]),
                ..OutputSpec::default()
            },
        }
    }
}
