use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;
use spreach::assumptions::{self, solve_lyapunov, AssumptionReport, VerifyOptions};
use spreach::hj::{io, solve_full_value, solve_reduced_value, Grid, Solution, ValueField};
use spreach::reach::svg::{Marker, SvgPlot};
use spreach::reach::{
    broadcast, brs_bounds, check_containment, export, extract_contours, tube_bounds,
    ContainmentReport, Inclusion,
};
use spreach::sim::{
    run_reach_experiment, write_trajectory_csv, FeedbackPolicy, ReachExperiment, SimOptions,
};
use spreach::systems::{BoxSet, BuiltModel};

use crate::artifacts::{sha256_hex, Outputs};
use crate::config::{FormatName, LyapunovSpec, Overrides, RunConfig};
use crate::{CliError, Command, Common, OUT_ENV};

struct Run {
    name: &'static str,
    cfg: RunConfig,
    model: BuiltModel,
    out: Outputs,
    started: Instant,
}

impl Run {
    fn open(
        name: &'static str,
        common: &Common,
        default: Option<RunConfig>,
    ) -> Result<Self, CliError> {
        let started = Instant::now();
        let mut cfg = match (&common.config, default) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                RunConfig::parse(&text)?
            }
            (None, Some(cfg)) => cfg,
            (None, None) => return Err(CliError::config(format!("`{name}` needs --config PATH"))),
        };
        cfg.apply(&Overrides {
            eps: common.eps.clone(),
            eta: common.eta,
            t: common.t,
            grid: common.grid,
            seed: common.seed,
        });
        let model = cfg.system.build()?;
        cfg.validate(model.system.n_z(), model.system.n_y())?;
        let dir = common
            .out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("spreach-out"));
        let out = Outputs::create(&dir)?;
        Ok(Self {
            name,
            cfg,
            model,
            out,
            started,
        })
    }

    fn config_hash(&self) -> String {
        let mut c = self.cfg.clone();
        c.output.dir = None;
        sha256_hex(
            serde_json::to_string(&c)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    fn finish(mut self) -> Result<(), CliError> {
        if self.cfg.wants(FormatName::Json) {
            let cfg = self.cfg.clone();
            self.out.write_json("config.json", &ResolvedConfig(cfg))?;
        }
        let mut seeds = BTreeMap::new();
        if let spreach::systems::ModelDescription::Mrn {
            seed, edges: None, ..
        } = &self.cfg.system
        {
            seeds.insert("network".to_string(), *seed);
        }
        if let Some(e) = &self.cfg.experiment {
            seeds.insert("experiment".to_string(), e.seed);
        }
        seeds.insert("verify".to_string(), self.cfg.verify.seed);
        let hash = self.config_hash();
        let dir = self.out.dir().display().to_string();
        let n = self.out.len();
        self.out
            .finish(self.name, hash, seeds, self.started.elapsed().as_secs_f64())?;
        println!(
            "{}: wrote {n} artifacts and manifest.json to {dir}",
            self.name
        );
        Ok(())
    }

    fn write_field(&mut self, stem: &str, field: &ValueField) -> Result<(), CliError> {
        if self.cfg.wants(FormatName::Csv) {
            let mut buf = Vec::new();
            io::write_csv(field, &mut buf)?;
            self.out.write(&format!("{stem}.csv"), &buf)?;
        }
        if self.cfg.wants(FormatName::Binary) {
            let mut buf = Vec::new();
            io::write_binary(field, &mut buf)?;
            self.out.write(&format!("{stem}.bin"), &buf)?;
        }
        Ok(())
    }

    fn reduced_solve(&self, snapshots: bool) -> Result<Solution, CliError> {
        let red = self.model.system.reduce();
        Ok(solve_reduced_value(
            &red,
            &self.cfg.payoff_fn()?,
            &self.cfg.slow_grid()?,
            self.cfg.solve.t_final,
            &self.cfg.solve_options(snapshots),
        )?)
    }

    fn full_solve(&self, eps: f64, grid: &Grid) -> Result<Solution, CliError> {
        Ok(solve_full_value(
            &self.model.system,
            eps,
            &self.cfg.payoff_fn()?,
            grid,
            self.cfg.solve.t_final,
            &self.cfg.solve_options(false),
        )?)
    }
}

#[derive(Serialize)]
struct ResolvedConfig(RunConfig);

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Verify {
            common,
            expect_pass,
        } => verify(Run::open("verify", common, None)?, *expect_pass),
        Command::Solve(c) => solve(Run::open("solve", c, None)?),
        Command::FullSolve(c) => full_solve(Run::open("full-solve", c, None)?),
        Command::Bounds {
            common,
            expect_pass,
        } => bounds(Run::open("bounds", common, None)?, *expect_pass, false),
        Command::Simulate(c) => simulate(Run::open("simulate", c, None)?),
        Command::ReproduceFig2(c) => bounds(
            Run::open("reproduce-fig2", c, Some(RunConfig::figure2()))?,
            false,
            true,
        ),
        Command::ReproduceFig3(c) => {
            simulate(Run::open("reproduce-fig3", c, Some(RunConfig::figure3()))?)
        }
    }
}

fn eps_tag(eps: f64) -> String {
    format!("{eps}")
}

// ------------------------------------------------------------------ verify

#[derive(Serialize)]
struct InflowGains {
    /// `-C A^{-1} e1`, the gain of the implemented reduction.
    reduced: f64,
    /// The opposite sign, for comparison.
    opposite_sign: f64,
}

#[derive(Serialize)]
struct VerifyDocument {
    report: AssumptionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    mrn_inflow_gain: Option<InflowGains>,
}

fn lyapunov_matrix(run: &Run) -> Result<Option<DMatrix<f64>>, CliError> {
    let sys = &run.model.system;
    Ok(match &run.cfg.verify.lyapunov {
        LyapunovSpec::Identity => None,
        LyapunovSpec::Nominal => {
            let mid = |b: &BoxSet| -> Vec<f64> {
                b.lower()
                    .iter()
                    .zip(b.upper())
                    .map(|(a, c)| 0.5 * (a + c))
                    .collect()
            };
            let z = mid(&run.cfg.grid_box()?);
            let a = sys.a(&z, &mid(sys.u_set()), &mid(sys.d_set()))?;
            let n = sys.n_y();
            Some(solve_lyapunov(&a, &DMatrix::identity(n, n))?)
        }
        LyapunovSpec::Matrix { p } => {
            let n = p.len();
            if p.iter().any(|r| r.len() != n) {
                return Err(CliError::config("`verify.lyapunov.p` must be square"));
            }
            Some(DMatrix::from_row_iterator(
                n,
                n,
                p.iter().flatten().copied(),
            ))
        }
    })
}

fn verify(mut run: Run, expect_pass: bool) -> Result<(), CliError> {
    let v = run.cfg.verify.clone();
    let mut opts = VerifyOptions::new(run.cfg.grid_box()?);
    opts.p = lyapunov_matrix(&run)?;
    opts.n_samples = v.n_samples;
    opts.n_probes = v.n_probes;
    opts.lambda_scale = v.lambda_scale;
    opts.decay_horizon = v.decay_horizon;
    opts.decay_trials = v.decay_trials;
    opts.decay_pieces = v.decay_pieces;
    opts.seed = v.seed;
    let report = assumptions::verify(&run.model.system, &opts)?;
    let verdicts = report.verdicts;
    match report.stability.cert() {
        Some(c) => println!(
            "stability: certified nu = {} alpha = {} kappa = {}",
            c.nu, c.alpha_decay, c.kappa
        ),
        None => println!("stability: FAILED"),
    }
    println!(
        "regularity K = {}; isaacs gap = {:e}; decay ratio = {}",
        report.regularity.k_estimate,
        report.isaacs.max_gap,
        report
            .decay
            .as_ref()
            .map_or("n/a".into(), |d| d.worst_ratio.to_string())
    );
    let doc = VerifyDocument {
        report,
        mrn_inflow_gain: run.model.mrn.as_ref().map(|m| InflowGains {
            reduced: m.reduced_inflow_gain(),
            opposite_sign: m.opposite_sign_inflow_gain(),
        }),
    };
    run.out.write_json("verify.json", &doc)?;
    run.finish()?;
    if expect_pass && !verdicts.all_pass() {
        return Err(CliError::verdict("assumption checks did not all pass"));
    }
    Ok(())
}

// ------------------------------------------------------------------- solve

#[derive(Serialize)]
struct SolveSummary {
    time: f64,
    steps: usize,
    max_step: f64,
    min_value: f64,
    max_value: f64,
    snapshot_times: Vec<f64>,
}

fn summary(field: &ValueField, snapshots: &[ValueField]) -> SolveSummary {
    SolveSummary {
        time: field.time,
        steps: field.meta.steps,
        max_step: field.meta.max_step,
        min_value: field.min_value(),
        max_value: field.max_value(),
        snapshot_times: snapshots.iter().map(|s| s.time).collect(),
    }
}

fn solve(mut run: Run) -> Result<(), CliError> {
    let sol = run.reduced_solve(true)?;
    run.write_field("reduced_field", &sol.field)?;
    if !sol.snapshots.is_empty() && run.cfg.wants(FormatName::Csv) {
        let mut buf = Vec::new();
        io::write_csv_series(&sol.snapshots, &mut buf)?;
        run.out.write("reduced_snapshots.csv", &buf)?;
    }
    if run.cfg.wants(FormatName::Json) {
        run.out
            .write_json("solve.json", &summary(&sol.field, &sol.snapshots))?;
    }
    println!(
        "reduced solve to t = {}: {} steps, value range [{}, {}]",
        sol.field.time,
        sol.field.meta.steps,
        sol.field.min_value(),
        sol.field.max_value()
    );
    run.finish()
}

fn full_solve(mut run: Run) -> Result<(), CliError> {
    if run.cfg.solve.eps.is_empty() {
        return Err(CliError::config("`solve.eps` must list at least one value"));
    }
    let grid = run.cfg.joint_grid()?;
    let mut sums = BTreeMap::new();
    for eps in run.cfg.solve.eps.clone() {
        let sol = run.full_solve(eps, &grid)?;
        println!("full solve eps = {eps}: {} steps", sol.field.meta.steps);
        run.write_field(&format!("full_field_eps_{}", eps_tag(eps)), &sol.field)?;
        sums.insert(eps_tag(eps), summary(&sol.field, &[]));
    }
    if run.cfg.wants(FormatName::Json) {
        run.out.write_json("full_solve.json", &sums)?;
    }
    run.finish()
}

// ------------------------------------------------------------------ bounds

#[derive(Serialize)]
struct ViolationRecord {
    inclusion: &'static str,
    coords: Vec<f64>,
    reduced_value: f64,
    full_value: f64,
}

#[derive(Serialize)]
struct ContainmentSummary {
    eps: f64,
    passed: bool,
    dilation_cells: usize,
    checked_nodes: usize,
    inner_violations: usize,
    outer_violations: usize,
    /// `max |V_eps - V|` over the joint grid.
    sup_gap: f64,
    violations: Vec<ViolationRecord>,
}

const MAX_LISTED_VIOLATIONS: usize = 50;

fn containment_summary(eps: f64, r: &ContainmentReport, sup_gap: f64) -> ContainmentSummary {
    ContainmentSummary {
        eps,
        passed: r.passed(),
        dilation_cells: r.dilation_cells,
        checked_nodes: r.checked_nodes,
        inner_violations: r.count(Inclusion::InnerWithinFull),
        outer_violations: r.count(Inclusion::FullWithinOuter),
        sup_gap,
        violations: r
            .violations
            .iter()
            .take(MAX_LISTED_VIOLATIONS)
            .map(|v| ViolationRecord {
                inclusion: match v.inclusion {
                    Inclusion::InnerWithinFull => "inner_within_full",
                    Inclusion::FullWithinOuter => "full_within_outer",
                },
                coords: v.coords.clone(),
                reduced_value: v.reduced_value,
                full_value: v.full_value,
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct BoundsDocument {
    t: f64,
    eta: f64,
    brs_inner_nodes: usize,
    brs_outer_nodes: usize,
    brt_inner_nodes: usize,
    bst_outer_nodes: usize,
    containment: Vec<ContainmentSummary>,
    /// Whether `sup |V_eps - V|` is non-increasing (10% slack) as eps
    /// decreases along the configured list.
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_trend_non_increasing: Option<bool>,
}

fn bounds(mut run: Run, expect_pass: bool, figure: bool) -> Result<(), CliError> {
    let eta = run.cfg.solve.eta;
    let sol = run.reduced_solve(false)?;
    let vbar = &sol.field;
    let brs = brs_bounds(vbar, eta)?;
    let (brt, bst) = tube_bounds(vbar, eta)?;
    run.write_field("reduced_field", vbar)?;
    if run.cfg.wants(FormatName::Csv) {
        let mut buf = Vec::new();
        export::write_masks_csv(
            &mut buf,
            &[
                ("brs_inner", &brs.inner_mask),
                ("brs_outer", &brs.outer_mask),
                ("brt_inner", &brt.inner_mask),
                ("bst_outer", &bst.outer_mask),
            ],
            &brs,
        )?;
        run.out.write("bounds.csv", &buf)?;
    }
    println!(
        "bounds at t = {}, eta = {eta}: inner {} / outer {} nodes of {}",
        vbar.time,
        brs.inner_count(),
        brs.outer_count(),
        vbar.grid.len()
    );

    let mut containment = Vec::new();
    let mut failed = Vec::new();
    let eps_list = run.cfg.solve.eps.clone();
    if !eps_list.is_empty() {
        let grid = run.cfg.joint_grid()?;
        let vbar_joint = broadcast(vbar, &grid)?;
        for &eps in &eps_list {
            let full = run.full_solve(eps, &grid)?.field;
            let report = check_containment(&brs, &full, run.cfg.solve.dilation)?;
            let sup_gap = full
                .values
                .iter()
                .zip(&vbar_joint.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            println!(
                "eps = {eps}: containment {} ({} violations, dilation {}), sup gap {sup_gap:.4}",
                if report.passed() { "PASS" } else { "FAIL" },
                report.violations.len(),
                report.dilation_cells
            );
            if !report.passed() {
                failed.push(eps);
            }
            if figure || run.cfg.wants(FormatName::Csv) {
                run.write_field(&format!("full_field_eps_{}", eps_tag(eps)), &full)?;
            }
            if run.cfg.wants(FormatName::Svg) && grid.n_dims() == 2 {
                let svg = containment_plot(&run.cfg, &vbar_joint, &full, eps, eta)?;
                run.out.write(
                    &format!("containment_eps_{}.svg", eps_tag(eps)),
                    svg.as_bytes(),
                )?;
            }
            containment.push(containment_summary(eps, &report, sup_gap));
        }
    }
    let trend = (containment.len() > 1).then(|| {
        containment
            .windows(2)
            .all(|w| w[1].sup_gap <= 1.1 * w[0].sup_gap)
    });
    if run.cfg.wants(FormatName::Json) {
        let doc = BoundsDocument {
            t: vbar.time,
            eta,
            brs_inner_nodes: brs.inner_count(),
            brs_outer_nodes: brs.outer_count(),
            brt_inner_nodes: brt.inner_count(),
            bst_outer_nodes: bst.outer_count(),
            containment,
            gap_trend_non_increasing: trend,
        };
        run.out.write_json("bounds.json", &doc)?;
    }
    run.finish()?;
    if expect_pass && !failed.is_empty() {
        return Err(CliError::verdict(format!(
            "containment failed for eps = {failed:?}"
        )));
    }
    Ok(())
}

fn containment_plot(
    cfg: &RunConfig,
    vbar_joint: &ValueField,
    full: &ValueField,
    eps: f64,
    eta: f64,
) -> Result<String, CliError> {
    let g = &full.grid;
    let (ax, ay) = (g.axis(0), g.axis(1));
    let mut plot = SvgPlot::new([ax.min, ax.max], [ay.min, ay.max]).labels(
        &format!("eps = {eps}, t = {}, eta = {eta}", full.time),
        "z",
        "y",
    );
    let free = [None, None];
    let p = &cfg.payoff;
    plot.rect(
        [p.target_lower[0], ay.min],
        [p.target_upper[0], ay.max],
        "#2a9d8f",
    );
    plot.contours(extract_contours(vbar_joint, -eta, &free)?, "#1d3557", true);
    plot.contours(extract_contours(vbar_joint, eta, &free)?, "#e76f51", true);
    plot.contours(extract_contours(full, 0.0, &free)?, "black", false);
    plot.legend("target", "#2a9d8f");
    plot.legend("reduced = -eta", "#1d3557");
    plot.legend("reduced = +eta", "#e76f51");
    plot.legend("full = 0", "black");
    Ok(plot.render())
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulationDocument {
    experiments: Vec<ReachExperiment>,
    /// Per experiment: how many initial states had every run reach.
    all_reach_counts: Vec<usize>,
}

fn simulate(mut run: Run) -> Result<(), CliError> {
    let Some(exp) = run.cfg.experiment.clone() else {
        return Err(CliError::config("`experiment` block is required"));
    };
    if run.cfg.solve.eps.is_empty() {
        return Err(CliError::config("`solve.eps` must list at least one value"));
    }
    let sol = run.reduced_solve(true)?;
    run.write_field("reduced_field", &sol.field)?;
    let mut fields = sol.snapshots.clone();
    fields.push(sol.field.clone());
    let policy = FeedbackPolicy::new(fields, run.model.system.reduce())?;
    let grid = &sol.field.grid;
    let interior = BoxSet::new(
        (0..grid.n_dims())
            .map(|k| grid.axis(k).min + grid.spacing(k))
            .collect(),
        (0..grid.n_dims())
            .map(|k| grid.axis(k).max - grid.spacing(k))
            .collect(),
        2,
    )?;
    let opts = SimOptions {
        h: exp.h,
        sample_period: exp.sample_period,
        payoff: Some(run.cfg.payoff_fn()?),
        feedback_clamp: Some(interior),
        ..SimOptions::default()
    };
    let n_y = run.model.system.n_y();
    let states: Vec<(Vec<f64>, Vec<f64>)> = exp
        .initial_states
        .iter()
        .map(|s| (s.z.clone(), s.y.clone().unwrap_or_else(|| vec![0.0; n_y])))
        .collect();

    let t = run.cfg.solve.t_final;
    let eta = run.cfg.solve.eta;
    let mut experiments = Vec::new();
    let mut counts = Vec::new();
    for eps in run.cfg.solve.eps.clone() {
        let e = run_reach_experiment(
            &run.model.system,
            eps,
            &policy,
            &states,
            exp.n_disturbances,
            exp.seed,
            eta,
            t,
            &opts,
        )?;
        for (i, s) in e.states.iter().enumerate() {
            println!(
                "eps = {eps} state {i} z0 = {:?}: V = {:.4} ({:?}), reached {}/{} , consistent {:?}",
                s.z0,
                s.value_at_start,
                s.prediction,
                s.runs.iter().filter(|r| r.reached == Some(true)).count(),
                s.runs.len(),
                s.consistent
            );
            if run.cfg.wants(FormatName::Csv) {
                for (r, outcome) in s.runs.iter().enumerate() {
                    if let Some(traj) = &outcome.trajectory {
                        let mut buf = Vec::new();
                        write_trajectory_csv(&mut buf, traj)?;
                        run.out.write(
                            &format!("trajectory_eps_{}_state_{i}_run_{r}.csv", eps_tag(eps)),
                            &buf,
                        )?;
                    }
                }
            }
        }
        counts.push(e.states.iter().filter(|s| s.reach_fraction == 1.0).count());
        if run.cfg.wants(FormatName::Svg) {
            if let Some(svg) = experiment_plot(&run.cfg, &sol.field, &e)? {
                run.out.write(
                    &format!("experiment_eps_{}.svg", eps_tag(eps)),
                    svg.as_bytes(),
                )?;
            }
        }
        experiments.push(e);
    }
    if run.cfg.wants(FormatName::Json) {
        run.out.write_json(
            "experiment.json",
            &SimulationDocument {
                experiments,
                all_reach_counts: counts,
            },
        )?;
    }
    run.finish()
}

fn experiment_plot(
    cfg: &RunConfig,
    field: &ValueField,
    exp: &ReachExperiment,
) -> Result<Option<String>, CliError> {
    let n = field.grid.n_dims();
    let slice: Vec<Option<f64>> = match (&cfg.output.plot_slice, n) {
        (Some(s), _) => s.clone(),
        (None, 2) => vec![None, None],
        (None, _) => return Ok(None),
    };
    let free: Vec<usize> = (0..n).filter(|&k| slice[k].is_none()).collect();
    if free.len() != 2 {
        return Err(CliError::config(
            "`output.plot_slice` must leave two axes free",
        ));
    }
    let (a, b) = (free[0], free[1]);
    let (ax, ay) = (field.grid.axis(a), field.grid.axis(b));
    let mut plot = SvgPlot::new([ax.min, ax.max], [ay.min, ay.max]).labels(
        &format!("eps = {}, t = {}, eta = {}", exp.eps, exp.t, exp.eta),
        &format!("z{}", a + 1),
        &format!("z{}", b + 1),
    );
    let p = &cfg.payoff;
    if !p.free_dims.contains(&a) && !p.free_dims.contains(&b) {
        plot.rect(
            [p.target_lower[a], p.target_lower[b]],
            [p.target_upper[a], p.target_upper[b]],
            "#2a9d8f",
        );
        plot.legend("target", "#2a9d8f");
    }
    plot.contours(extract_contours(field, -exp.eta, &slice)?, "#1d3557", true);
    plot.contours(extract_contours(field, exp.eta, &slice)?, "#e76f51", true);
    plot.legend("reduced = -eta", "#1d3557");
    plot.legend("reduced = +eta", "#e76f51");
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    for s in &exp.states {
        starts.push([s.z0[a], s.z0[b]]);
        for r in &s.runs {
            if let Some(traj) = &r.trajectory {
                let pts: Vec<[f64; 2]> = traj.z.iter().map(|z| [z[a], z[b]]).collect();
                ends.push(*pts.last().expect("non-empty"));
                plot.path(pts, "#6c757d");
            }
        }
    }
    plot.markers(starts, Marker::Circle, "black");
    plot.markers(ends, Marker::Cross, "#d62828");
    Ok(Some(plot.render()))
}
