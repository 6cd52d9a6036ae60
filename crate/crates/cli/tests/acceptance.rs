//! Acceptance criteria AC1 to AC9. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use spreach::assumptions::{
    check_boundary_layer_decay, check_isaacs, decay_ratio, isaacs_gap_at, DecayTrial, LyapunovCert,
    SignalPiece,
};
use spreach::hj::{solve_reduced_value, Axis, Grid, PayoffFn, SolveOptions, ValueField};
use spreach::reach::{brs_bounds, tube_bounds};
use spreach::systems::{genetic_circuit, hamiltonian_minmax, BoxSet, ReducedSystem};
use tempfile::TempDir;

static LINES: Mutex<Vec<String>> = Mutex::new(Vec::new());

fn report(id: &str, pass: bool, detail: String) -> bool {
    let line = format!("{id} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    println!("{line}");
    LINES.lock().unwrap().push(line);
    pass
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["spreach".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    spreach_cli::run(argv)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

// ------------------------------------------------------------------ AC1

fn integrator() -> ReducedSystem {
    ReducedSystem::new(
        "integrator",
        1,
        Arc::new(|_z, u, _d| DVector::from_element(1, u[0])),
        BoxSet::new(vec![-1.0], vec![1.0], 2).unwrap(),
        BoxSet::point(vec![0.0]).unwrap(),
    )
    .unwrap()
}

fn exact(t: f64, z: f64) -> f64 {
    ((z.abs() + t).max(0.0) - 0.25).min(3.0)
}

fn integrator_error(nodes: usize) -> f64 {
    let ell = PayoffFn::custom(1, 1.0, 3.0, |z| (z[0].abs() - 0.25).min(3.0));
    let grid = Grid::new(vec![Axis::new(-1.0, 1.0, nodes)]).unwrap();
    let sol =
        solve_reduced_value(&integrator(), &ell, &grid, -0.5, &SolveOptions::default()).unwrap();
    (0..grid.len())
        .map(|i| (sol.field.values[i] - exact(-0.5, grid.node_coords(i)[0])).abs())
        .fold(0.0, f64::max)
}

fn ac1() -> bool {
    let start = Instant::now();
    let e401 = integrator_error(401);
    let secs = start.elapsed().as_secs_f64();
    let e801 = integrator_error(801);
    let ratio = e401 / e801;
    report(
        "AC1",
        e401 <= 0.02 && (1.4..=2.6).contains(&ratio) && secs < 5.0,
        format!("error(401) = {e401:.4e}, error(801) = {e801:.4e}, ratio {ratio:.3}, {secs:.2}s"),
    )
}

// ------------------------------------------------------------- AC2 - AC4

const LEMMA_EPS: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];

struct Fig2Run {
    _dir: TempDir,
    bounds: Value,
    secs: f64,
}

fn fig2() -> &'static Fig2Run {
    static RUN: OnceLock<Fig2Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        let start = Instant::now();
        let code = cli(&[
            "reproduce-fig2",
            "--eps",
            "1,0.3,0.1,0.03,0.01",
            "--out",
            &out,
        ]);
        assert_eq!(code, 0, "reproduce-fig2 exit code");
        Fig2Run {
            bounds: read_json(&dir.path().join("bounds.json")),
            secs: start.elapsed().as_secs_f64(),
            _dir: dir,
        }
    })
}

fn containment_for(eps: f64) -> &'static Value {
    fig2().bounds["containment"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["eps"].as_f64() == Some(eps))
        .unwrap()
}

fn ac2() -> bool {
    let c = containment_for(0.01);
    let run = fig2();
    report(
        "AC2",
        c["passed"] == true
            && c["dilation_cells"] == 1
            && c["checked_nodes"] == 101 * 101
            && run.secs <= 600.0,
        format!(
            "eps = 0.01: {} inner / {} outer violations on {} nodes (all five solves {:.1}s)",
            c["inner_violations"], c["outer_violations"], c["checked_nodes"], run.secs
        ),
    )
}

fn ac3() -> bool {
    let c = containment_for(1.0);
    let n = c["inner_violations"].as_u64().unwrap() + c["outer_violations"].as_u64().unwrap();
    report("AC3", n >= 1, format!("eps = 1: {n} violating nodes"))
}

fn ac4() -> bool {
    let gaps: Vec<f64> = LEMMA_EPS
        .iter()
        .map(|&e| containment_for(e)["sup_gap"].as_f64().unwrap())
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let shrink = gaps[4] < 0.25 * gaps[0];
    report(
        "AC4",
        monotone && shrink,
        format!("sup gaps for eps {LEMMA_EPS:?}: {gaps:.4?}"),
    )
}

// ------------------------------------------------------------------ AC5

fn ac5() -> bool {
    let sys = genetic_circuit(1.0).unwrap();
    let cert = LyapunovCert::from_margin(DMatrix::from_element(1, 1, 1.0), 1.0, 1).unwrap();
    let params = (cert.nu, cert.alpha_decay, cert.kappa);
    let check = check_boundary_layer_decay(&sys, &cert, &[0.5], 10.0, 100, 16, 0).unwrap();
    let trial = DecayTrial {
        w0: vec![0.7],
        pieces: vec![SignalPiece {
            duration: 10.0,
            u: vec![0.5],
            d: vec![0.5, 1.0, 1.0],
        }],
    };
    let (tight, _) = decay_ratio(&sys, &cert, &[0.5], &trial).unwrap();
    report(
        "AC5",
        params == (1.0, 1.0, 0.5) && check.worst_ratio <= 1.0 + 1e-6 && tight >= 1.0 - 1e-6,
        format!(
            "(nu, alpha, kappa) = {params:?}; worst ratio over {} signals {:.6}; constant d1 = 0.5 ratio {tight:.9}",
            check.n_trials, check.worst_ratio
        ),
    )
}

// ------------------------------------------------------------------ AC6

fn ac6() -> bool {
    let red = genetic_circuit(1.0).unwrap().reduce();
    let gap = check_isaacs(&red, &BoxSet::cube(1, 0.0, 1.0, 2).unwrap(), 1000, 2.0, 0)
        .unwrap()
        .max_gap;
    let h_pos = hamiltonian_minmax(&red, &[0.5], &[1.0]).unwrap();
    let h_neg = hamiltonian_minmax(&red, &[0.5], &[-1.0]).unwrap();
    let planted = ReducedSystem::new(
        "square_gap",
        1,
        Arc::new(|_z, u, d| DVector::from_element(1, (u[0] - d[0]).powi(2))),
        BoxSet::cube(1, -1.0, 1.0, 21).unwrap(),
        BoxSet::cube(1, -1.0, 1.0, 21).unwrap(),
    )
    .unwrap();
    let planted_gap = isaacs_gap_at(&planted, &[(vec![0.0], vec![1.0])])
        .unwrap()
        .max_gap;
    report(
        "AC6",
        gap <= 1e-9
            && (h_pos + 0.1730769).abs() <= 1e-6
            && (h_neg - 0.6).abs() <= 1e-6
            && (planted_gap - 1.0).abs() <= 1e-9,
        format!("circuit gap {gap:.2e}; H(0.5, +1) = {h_pos:.7}, H(0.5, -1) = {h_neg:.7}; planted gap {planted_gap}"),
    )
}

// ------------------------------------------------------------------ AC7

fn ac7() -> bool {
    let red = genetic_circuit(1.0).unwrap().reduce();
    let ell = PayoffFn::target_box(&[0.25], &[0.75], 10.0, 3.0, &[]).unwrap();
    let grid = Grid::new(vec![Axis::new(0.0, 1.0, 101)]).unwrap();
    let opts = SolveOptions {
        snapshot_times: (1..10).map(|k| -0.05 * k as f64).collect(),
        ..Default::default()
    };
    let sol = solve_reduced_value(&red, &ell, &grid, -0.5, &opts).unwrap();
    let mut fields: Vec<&ValueField> = sol.snapshots.iter().collect();
    fields.push(&sol.field);
    let mut violations = 0usize;
    let mut checks = 0usize;
    for w in fields.windows(2) {
        let (lo0, lo1) = (
            w[0].running_min.as_ref().unwrap(),
            w[1].running_min.as_ref().unwrap(),
        );
        let (hi0, hi1) = (
            w[0].running_max.as_ref().unwrap(),
            w[1].running_max.as_ref().unwrap(),
        );
        for i in 0..lo0.len() {
            checks += 2;
            violations += usize::from(lo1[i] > lo0[i]) + usize::from(hi1[i] < hi0[i]);
        }
    }
    for f in &fields {
        for eta in [0.02, 0.1, 0.25, 0.5] {
            let brs = brs_bounds(f, eta).unwrap();
            let (brt, bst) = tube_bounds(f, eta).unwrap();
            for i in 0..brs.inner_mask.len() {
                checks += 2;
                violations += usize::from(brs.inner_mask[i] && !brt.inner_mask[i])
                    + usize::from(bst.outer_mask[i] && !brs.outer_mask[i]);
            }
        }
    }
    report(
        "AC7",
        violations == 0,
        format!(
            "{} snapshots, {checks} checks, {violations} violations",
            fields.len()
        ),
    )
}

// ------------------------------------------------------------------ AC8

fn ac8() -> bool {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let code = cli(&["reproduce-fig3", "--out", dir.path().to_str().unwrap()]);
    let secs = start.elapsed().as_secs_f64();
    assert_eq!(code, 0, "reproduce-fig3 exit code");
    let doc = read_json(&dir.path().join("experiment.json"));
    let exp = &doc["experiments"][0];
    let eta = exp["eta"].as_f64().unwrap();
    let mut consistent = true;
    let mut reaching = 0;
    let mut parts = Vec::new();
    for s in exp["states"].as_array().unwrap() {
        let v = s["value_at_start"].as_f64().unwrap();
        let runs = s["runs"].as_array().unwrap();
        let reached = runs.iter().filter(|r| r["reached"] == true).count();
        let all = reached == runs.len();
        if v < -eta {
            consistent &= all;
        } else if v > eta {
            consistent &= reached == 0;
        }
        reaching += usize::from(all);
        parts.push(format!(
            "z0 = {} V = {v:.4} reached {reached}/{}",
            s["z0"],
            runs.len()
        ));
    }
    report(
        "AC8",
        consistent && reaching == 1 && secs < 600.0,
        format!(
            "{}; consistent with the eta bands: {consistent}; states reaching: {reaching} of 2 ({secs:.1}s)",
            parts.join("; ")
        ),
    )
}

// ------------------------------------------------------------------ AC9

fn ac9() -> bool {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    for d in &dirs {
        // A coarser grid than the figure keeps the double run short.
        let code = cli(&[
            "reproduce-fig2",
            "--grid",
            "51",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let manifest = |d: &TempDir| std::fs::read(d.path().join("manifest.json")).unwrap();
    let same_manifest = manifest(&dirs[0]) == manifest(&dirs[1]);
    let listed = read_json(&dirs[0].path().join("manifest.json"))["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap().to_string())
        .collect::<Vec<_>>();
    let differing: Vec<&String> = listed
        .iter()
        .filter(|p| {
            std::fs::read(dirs[0].path().join(p)).unwrap()
                != std::fs::read(dirs[1].path().join(p)).unwrap()
        })
        .collect();
    report(
        "AC9",
        same_manifest && differing.is_empty() && !listed.is_empty(),
        format!(
            "manifests identical: {same_manifest}; {} artifacts, differing: {differing:?}",
            listed.len()
        ),
    )
}

#[test]
fn acceptance() {
    let results = [
        ac1(),
        ac2(),
        ac3(),
        ac4(),
        ac5(),
        ac6(),
        ac7(),
        ac8(),
        ac9(),
    ];
    println!("---");
    for line in LINES.lock().unwrap().iter() {
        println!("{line}");
    }
    let failed: Vec<String> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| format!("AC{}", i + 1))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
