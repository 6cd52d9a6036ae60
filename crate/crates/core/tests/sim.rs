use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use spreach::assumptions::LyapunovCert;
use spreach::hj::{Grid, PayoffFn, ValueField};
use spreach::sim::{
    integrate_reduced, integrate_sp, run_reach_experiment, write_trajectory_csv, FeedbackPolicy,
    Prediction, Signal, SignalSpec, SimOptions,
};
use spreach::systems::{genetic_circuit, BoxSet, ReducedSystem, SpSystem};

/// `z' = 0`, `eps y' = -y`.
fn decoupled() -> SpSystem {
    SpSystem::new(
        "decoupled",
        1,
        1,
        Arc::new(|_z, _u, _d| DVector::zeros(1)),
        Arc::new(|_z, _u, _d| DVector::zeros(1)),
        Arc::new(|_z| DMatrix::zeros(1, 1)),
        Arc::new(|_z, _u, _d| DMatrix::from_element(1, 1, -1.0)),
        BoxSet::point(vec![0.0]).unwrap(),
        BoxSet::point(vec![0.0]).unwrap(),
    )
    .unwrap()
}

fn zero() -> Signal<'static> {
    Signal::Constant(vec![0.0])
}

fn exp_run(eps: f64, t: f64, h: f64) -> spreach::sim::Trajectory {
    let opts = SimOptions {
        h,
        fast_fraction: f64::INFINITY,
        sample_period: Some(0.5),
        ..Default::default()
    };
    integrate_sp(
        &decoupled(),
        eps,
        &[0.3],
        &[1.0],
        &mut zero(),
        &mut zero(),
        t,
        &opts,
    )
    .unwrap()
}

#[test]
fn zero_horizon_is_a_single_point() {
    let tr = exp_run(0.1, 0.0, 0.01);
    assert_eq!(tr.times, vec![0.0]);
    assert_eq!(tr.z, vec![vec![0.3]]);
    assert_eq!(tr.y, Some(vec![vec![1.0]]));
}

#[test]
fn decoupled_exponential_and_envelope() {
    let (eps, t) = (0.1, -1.0);
    let tr = exp_run(eps, t, eps / 20.0);
    let cert = LyapunovCert::from_margin(DMatrix::identity(1, 1), 2.0, 1).unwrap();
    assert_eq!(cert.alpha_decay, 1.0);
    let y = tr.y.as_ref().unwrap();
    for (k, &s) in tr.times.iter().enumerate() {
        let exact = (-(s - t) / eps).exp();
        assert!(((y[k][0] - exact) / exact).abs() < 1e-6, "at s = {s}");
        assert_eq!(tr.z[k][0], 0.3);
        // Fast time is (s - t) / eps.
        let envelope = cert.alpha_decay * (-cert.kappa * (s - t) / eps).exp();
        assert!(y[k][0].abs() <= envelope * (1.0 + 1e-6));
    }
    assert_eq!(*tr.times.first().unwrap(), t);
    assert_eq!(*tr.times.last().unwrap(), 0.0);
    assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn rk4_step_halving_order() {
    let (eps, t) = (1.0, -2.0);
    let err = |h: f64| {
        let tr = exp_run(eps, t, h);
        let y = tr.y.unwrap().last().unwrap()[0];
        (y - (t / eps).exp()).abs()
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn genetic_circuit_first_step_matches_slopes() {
    let sys = genetic_circuit(1.0).unwrap();
    let (dz, dy) = sys
        .eval_rhs(1.0, &[0.5], &[0.8], &[1.0], &[1.0; 3])
        .unwrap();
    assert!((dz[0] - 0.3).abs() < 1e-15 && dy[0].abs() < 1e-15);
    let dt = 1e-3;
    let tr = integrate_sp(
        &sys,
        1.0,
        &[0.5],
        &[0.8],
        &mut Signal::Constant(vec![1.0]),
        &mut Signal::Constant(vec![1.0; 3]),
        -dt,
        &SimOptions::default(),
    )
    .unwrap();
    let z1 = tr.final_z()[0];
    assert!((z1 - 0.5 - 0.3 * dt).abs() < 1e-6);
}

#[test]
fn constant_reduced_dynamics_are_exact() {
    let red = ReducedSystem::new(
        "integrator",
        1,
        Arc::new(|_z, u, _d| DVector::from_element(1, u[0])),
        BoxSet::cube(1, -1.0, 1.0, 2).unwrap(),
        BoxSet::point(vec![0.0]).unwrap(),
    )
    .unwrap();
    let tr = integrate_reduced(
        &red,
        &[0.0],
        &mut Signal::Constant(vec![1.0]),
        &mut zero(),
        -0.5,
        &SimOptions::default(),
    )
    .unwrap();
    // Exact up to the rounding of 200 summed steps.
    assert!((tr.final_z()[0] - 0.5).abs() < 1e-14);
    assert!(tr.y.is_none());
}

/// Dormand-Prince 5(4) with step-size control, for reference solutions.
fn dopri(f: impl Fn(f64) -> f64, mut y: f64, t0: f64, t1: f64, tol: f64) -> f64 {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let (mut t, mut h) = (t0, 1e-3_f64);
    while t < t1 {
        h = h.min(t1 - t);
        let mut k = [0.0; 7];
        k[0] = f(y);
        for s in 0..6 {
            let yi = y + h * (0..=s).map(|j| C[s][j] * k[j]).sum::<f64>();
            k[s + 1] = f(yi);
        }
        let y5 = y + h * (0..6).map(|j| C[5][j] * k[j]).sum::<f64>();
        let err = (h * (0..7).map(|j| E[j] * k[j]).sum::<f64>()).abs();
        if err <= tol {
            t += h;
            y = y5;
        }
        h *= (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(0.2, 5.0);
    }
    y
}

#[test]
fn genetic_reduced_trajectory_matches_adaptive_reference() {
    let red = genetic_circuit(1.0).unwrap().reduce();
    let opts = SimOptions {
        h: 1e-2,
        ..Default::default()
    };
    let tr = integrate_reduced(
        &red,
        &[0.5],
        &mut Signal::Constant(vec![1.0]),
        &mut Signal::Constant(vec![1.0; 3]),
        -3.0,
        &opts,
    )
    .unwrap();
    let rhs = |z: f64| -z + 1.0 / (1.0 + z * z);
    let reference = dopri(rhs, 0.5, -3.0, 0.0, 1e-13);
    assert!((tr.final_z()[0] - reference).abs() < 1e-6);
    // Drifts toward the root of z^3 + z - 1.
    assert!((reference - 0.6823278).abs() < 0.05);
}

fn linear_field(slope: f64) -> ValueField {
    let g = Grid::uniform(&[0.0], &[1.0], 101).unwrap();
    ValueField::from_fn(g, -0.5, move |z| slope * z[0])
}

#[test]
fn feedback_follows_hamiltonian_minimiser() {
    let red = genetic_circuit(1.0).unwrap().reduce();
    let pol = |s| FeedbackPolicy::new(vec![linear_field(s)], red.clone()).unwrap();
    assert_eq!(pol(1.0).control(-0.5, &[0.5]).unwrap(), vec![0.1]);
    assert_eq!(pol(-1.0).control(-0.5, &[0.5]).unwrap(), vec![1.0]);
    assert_eq!(pol(0.0).control(-0.5, &[0.5]).unwrap(), vec![0.1]);
    assert!(pol(1.0).control(-0.5, &[0.0]).is_err());
    // Dense oracle: the minimiser over a fine control grid agrees.
    for (lam, want) in [(1.0, 0.1), (-1.0, 1.0)] {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=900 {
            let u = 0.1 + 0.001 * i as f64;
            let mut worst = f64::NEG_INFINITY;
            for d2 in [0.5, 1.0, 2.0] {
                for d3 in [0.5, 1.0, 2.0] {
                    let f = -d2 * 0.5 + d3 * u * u / (u * u + 0.25);
                    worst = worst.max(lam * f);
                }
            }
            if worst < best.0 - 1e-15 {
                best = (worst, u);
            }
        }
        assert!((best.1 - want).abs() < 1e-9);
    }
}

#[test]
fn feedback_uses_nearest_snapshot() {
    let red = genetic_circuit(1.0).unwrap().reduce();
    let mut late = linear_field(-1.0);
    late.time = 0.0;
    let pol = FeedbackPolicy::new(vec![linear_field(1.0), late], red).unwrap();
    assert_eq!(pol.control(-0.4, &[0.5]).unwrap(), vec![0.1]);
    assert_eq!(pol.control(-0.1, &[0.5]).unwrap(), vec![1.0]);
    // Equidistant: the lower index wins.
    assert_eq!(pol.control(-0.25, &[0.5]).unwrap(), vec![0.1]);
}

#[test]
fn signals_respect_their_boxes() {
    let u = genetic_circuit(1.0).unwrap().u_set().clone();
    assert!(SignalSpec::Constant { value: vec![2.0] }.build(&u).is_err());
    assert!(SignalSpec::Sequence {
        values: vec![vec![0.5], vec![0.0]]
    }
    .build(&u)
    .is_err());
    assert!(SignalSpec::Constant { value: vec![0.5] }.build(&u).is_ok());
    let spec: SignalSpec = serde_json::from_str(r#"{"kind":"uniform_random","seed":3}"#).unwrap();
    assert_eq!(spec, SignalSpec::UniformRandom { seed: 3 });
}

fn circuit_setup() -> (SpSystem, FeedbackPolicy, PayoffFn) {
    let sys = genetic_circuit(1.0).unwrap();
    let payoff = PayoffFn::target_box(&[0.25], &[0.75], 1.0, 10.0, &[]).unwrap();
    let g = Grid::uniform(&[0.0], &[1.0], 101).unwrap();
    let l = payoff.clone();
    let field = ValueField::from_fn(g, -0.5, move |z| l.eval(z));
    let pol = FeedbackPolicy::new(vec![field], sys.reduce()).unwrap();
    (sys, pol, payoff)
}

#[test]
fn random_disturbance_runs_are_reproducible() {
    let (sys, pol, payoff) = circuit_setup();
    let opts = SimOptions {
        payoff: Some(payoff),
        feedback_clamp: Some(BoxSet::cube(1, 0.01, 0.99, 2).unwrap()),
        ..Default::default()
    };
    let run = || {
        integrate_sp(
            &sys,
            0.05,
            &[0.1],
            &[0.0],
            &mut Signal::Feedback(&pol),
            &mut Signal::random(9, 0),
            -0.5,
            &opts,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.u.len(), 200);
    assert!(a.d.iter().all(|d| sys.d_set().contains(d, 0.0)));
    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &a).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,z1,y1,u1,d1,d2,d3\n"));
    assert_eq!(text.lines().count(), 202);
    let adv = integrate_sp(
        &sys,
        0.05,
        &[0.1],
        &[0.0],
        &mut Signal::Feedback(&pol),
        &mut Signal::Adversarial(&pol),
        -0.5,
        &opts,
    )
    .unwrap();
    assert!(adv.reached_target_at_0.is_some());
}

#[test]
fn reach_experiment_labels() {
    let (sys, pol, payoff) = circuit_setup();
    let opts = SimOptions {
        payoff: Some(payoff),
        ..Default::default()
    };
    let states = vec![
        (vec![0.5], vec![0.0]),
        (vec![0.05], vec![0.0]),
        (vec![0.7], vec![0.0]),
    ];
    let exp = run_reach_experiment(&sys, 0.01, &pol, &states, 3, 1, 0.1, 0.0, &opts).unwrap();
    assert_eq!(exp.states[0].prediction, Prediction::InsideInner);
    assert_eq!(exp.states[0].reach_fraction, 1.0);
    assert_eq!(exp.states[0].consistent, Some(true));
    assert_eq!(exp.states[1].prediction, Prediction::OutsideOuter);
    assert_eq!(exp.states[1].reach_fraction, 0.0);
    assert_eq!(exp.states[2].prediction, Prediction::Indeterminate);
    assert_eq!(exp.states[2].consistent, None);
    assert!(exp.all_consistent());
}
