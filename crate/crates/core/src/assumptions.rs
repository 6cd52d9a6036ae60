//! Sampling-based checks of the standing assumptions: growth and Lipschitz
//! regularity, uniform stability of the fast subsystem with a quadratic
//! Lyapunov certificate, Isaacs' condition for the reduced model, and the
//! exponential decay envelope of the boundary layer.
//!
//! Every check is a sampled verification ("passed at N samples with
//! tolerance tau"), never a proof.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::systems::{max_min, min_max, BoxSet, GameLattice, ReducedSystem, SpSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub stability: f64,
    pub isaacs: f64,
    pub decay: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stability: 1e-9,
            isaacs: 1e-9,
            decay: 1e-6,
        }
    }
}

/// A sampled point of the game: slow state, control, disturbance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GamePoint {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.len() == 1 {
        return Ok(m[(0, 0)].abs());
    }
    m.clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .map(|s| s.singular_values.max())
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .map(|e| e.eigenvalues)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))
}

fn non_finite(what: &str, p: &GamePoint) -> Error {
    Error::Numerical(format!(
        "non-finite {what} at z = {:?}, u = {:?}, d = {:?}",
        p.z, p.u, p.d
    ))
}

// ----------------------------------------------------------------- regularity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityEstimate {
    /// `max(matrix_bound, growth_bound)`.
    pub k_estimate: f64,
    /// Largest `|M| + |A|` (spectral norms).
    pub matrix_bound: f64,
    pub matrix_argmax: GamePoint,
    /// Largest `(|f| + |g|) / (1 + |z|)`.
    pub growth_bound: f64,
    pub growth_argmax: GamePoint,
    pub sample_count: usize,
}

/// Estimates the growth constant `K` over `n_samples` random slow states in
/// `probe_region`, each paired with every `(u, d)` lattice point. Sample
/// sequences are prefixes of one seeded stream, so more samples never give a
/// smaller estimate.
pub fn estimate_regularity_bounds(
    sys: &SpSystem,
    probe_region: &BoxSet,
    n_samples: usize,
    seed: u64,
) -> Result<RegularityEstimate> {
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    if probe_region.dim() != sys.n_z() {
        return Err(Error::dims("probe_region", sys.n_z(), probe_region.dim()));
    }
    let controls = sys.u_set().lattice();
    let disturbances = sys.d_set().lattice();
    let mut rng = rng_stream(seed, 1);
    let mut est: Option<RegularityEstimate> = None;
    for _ in 0..n_samples {
        let z = probe_region.sample_uniform(&mut rng);
        let m_norm = spectral_norm(&sys.m(&z)?)?;
        let z_norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        for u in &controls {
            for d in &disturbances {
                let p = GamePoint {
                    z: z.clone(),
                    u: u.clone(),
                    d: d.clone(),
                };
                let a_norm = spectral_norm(&sys.a(&z, u, d)?)?;
                let matrix = m_norm + a_norm;
                let growth = (sys.f(&z, u, d)?.norm() + sys.g(&z, u, d)?.norm()) / (1.0 + z_norm);
                if !matrix.is_finite() {
                    return Err(non_finite("M or A", &p));
                }
                if !growth.is_finite() {
                    return Err(non_finite("f or g", &p));
                }
                match &mut est {
                    None => {
                        est = Some(RegularityEstimate {
                            k_estimate: matrix.max(growth),
                            matrix_bound: matrix,
                            matrix_argmax: p.clone(),
                            growth_bound: growth,
                            growth_argmax: p,
                            sample_count: 0,
                        })
                    }
                    Some(e) => {
                        if matrix > e.matrix_bound {
                            e.matrix_bound = matrix;
                            e.matrix_argmax = p.clone();
                        }
                        if growth > e.growth_bound {
                            e.growth_bound = growth;
                            e.growth_argmax = p;
                        }
                        e.k_estimate = e.matrix_bound.max(e.growth_bound);
                    }
                }
            }
        }
    }
    let mut est = est.expect("at least one sample");
    est.sample_count = n_samples;
    Ok(est)
}

// ------------------------------------------------------------------ stability

fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

/// Quadratic Lyapunov certificate `V(w) = w' P w` for the fast subsystem,
/// with decay constants `|exp(int A)| <= alpha_decay * exp(-kappa s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovCert {
    #[serde(serialize_with = "serialize_matrix")]
    pub p: DMatrix<f64>,
    pub nu: f64,
    pub alpha_decay: f64,
    pub kappa: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub sample_count: usize,
}

impl LyapunovCert {
    /// Builds a certificate from `P` and a margin `nu`.
    pub fn from_margin(p: DMatrix<f64>, nu: f64, sample_count: usize) -> Result<Self> {
        let (lmin, lmax) = validate_spd(&p)?;
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("nu must be positive, got {nu}")));
        }
        Ok(Self {
            p,
            nu,
            alpha_decay: (lmax / lmin).sqrt(),
            kappa: nu / (2.0 * lmax),
            lambda_min_p: lmin,
            lambda_max_p: lmax,
            sample_count,
        })
    }
}

/// A sampled point where `A'P + PA` is not negative definite by the
/// required margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityWitness {
    pub point: GamePoint,
    /// `lambda_max(A'P + PA)` at `point`.
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StabilityOutcome {
    Certified(LyapunovCert),
    Failed(StabilityWitness),
}

impl StabilityOutcome {
    pub fn cert(&self) -> Option<&LyapunovCert> {
        match self {
            Self::Certified(c) => Some(c),
            Self::Failed(_) => None,
        }
    }
}

/// Smallest and largest eigenvalue of a symmetric positive-definite `p`.
fn validate_spd(p: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !p.is_square() || p.nrows() == 0 {
        return Err(Error::Domain(format!(
            "P must be a non-empty square matrix, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("P has non-finite entries".into()));
    }
    if (p - p.transpose()).amax() > 1e-12 {
        return Err(Error::Domain("P is not symmetric".into()));
    }
    let ev = symmetric_eigenvalues(p)?;
    let (lmin, lmax) = (ev.min(), ev.max());
    if !(lmin > 0.0) {
        return Err(Error::Domain(format!(
            "P is not positive definite (smallest eigenvalue {lmin})"
        )));
    }
    Ok((lmin, lmax))
}

/// `lambda_max(A'P + PA)`.
pub fn lyapunov_derivative_max(a: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    let q = a.transpose() * p + p * a;
    let q = (&q + q.transpose()) * 0.5;
    Ok(symmetric_eigenvalues(&q)?.max())
}

/// Checks `A(z,u,d)'P + PA(z,u,d) < 0` at `n_samples` random slow states in
/// `z_region`, each paired with every `(u, d)` lattice point.
pub fn check_stability(
    sys: &SpSystem,
    p: &DMatrix<f64>,
    z_region: &BoxSet,
    n_samples: usize,
    seed: u64,
    stability_tol: f64,
) -> Result<StabilityOutcome> {
    validate_spd(p)?;
    if p.nrows() != sys.n_y() {
        return Err(Error::dims("P", sys.n_y(), p.nrows()));
    }
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be at least 1".into()));
    }
    if z_region.dim() != sys.n_z() {
        return Err(Error::dims("z_region", sys.n_z(), z_region.dim()));
    }
    let controls = sys.u_set().lattice();
    let disturbances = sys.d_set().lattice();
    let mut rng = rng_stream(seed, 2);
    let mut worst: Option<StabilityWitness> = None;
    for _ in 0..n_samples {
        let z = z_region.sample_uniform(&mut rng);
        for u in &controls {
            for d in &disturbances {
                let point = GamePoint {
                    z: z.clone(),
                    u: u.clone(),
                    d: d.clone(),
                };
                let a = sys.a(&z, u, d)?;
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(non_finite("A", &point));
                }
                let lmax = lyapunov_derivative_max(&a, p)?;
                if worst.as_ref().is_none_or(|w| lmax > w.eigenvalue) {
                    worst = Some(StabilityWitness {
                        point,
                        eigenvalue: lmax,
                    });
                }
            }
        }
    }
    let worst = worst.expect("at least one sample");
    let nu = -worst.eigenvalue;
    if nu > stability_tol {
        Ok(StabilityOutcome::Certified(LyapunovCert::from_margin(
            p.clone(),
            nu,
            n_samples,
        )?))
    } else {
        Ok(StabilityOutcome::Failed(worst))
    }
}

/// Solves the Lyapunov equation `A'P + PA = -Q` for `P` (dense Kronecker
/// formulation, fine for a few dozen fast states).
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::dims("Lyapunov operands", n, q.nrows()));
    }
    // Column-major vec: vec(A'P) = (I kron A') vec P, vec(PA) = (A' kron I) vec P.
    let at = a.transpose();
    let mut k = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                // (I kron A') block (j, j), entry (r, i) -> A'[r, i]
                k[(j * n + r, j * n + i)] += at[(r, i)];
                // (A' kron I) block (j, i), diagonal -> A'[j, i]
                k[(j * n + r, i * n + r)] += at[(j, i)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov equation is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

// --------------------------------------------------------------------- isaacs

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsaacsCheck {
    pub max_gap: f64,
    pub worst_z: Vec<f64>,
    pub worst_lambda: Vec<f64>,
    pub n_probes: usize,
}

/// Largest `|minmax - maxmin|` of the lattice Hamiltonian over random
/// `z in z_region` and `lambda` uniform in `[-lambda_scale, lambda_scale]^n`.
pub fn check_isaacs(
    red: &ReducedSystem,
    z_region: &BoxSet,
    n_probes: usize,
    lambda_scale: f64,
    seed: u64,
) -> Result<IsaacsCheck> {
    if n_probes == 0 {
        return Err(Error::Domain("n_probes must be at least 1".into()));
    }
    if !(lambda_scale >= 0.0) {
        return Err(Error::Domain(format!(
            "lambda_scale must be non-negative, got {lambda_scale}"
        )));
    }
    let n = red.n_z();
    if z_region.dim() != n {
        return Err(Error::dims("z_region", n, z_region.dim()));
    }
    let mut rng = rng_stream(seed, 3);
    let probes: Vec<(Vec<f64>, Vec<f64>)> = (0..n_probes)
        .map(|_| {
            let z = z_region.sample_uniform(&mut rng);
            let lambda = (0..n)
                .map(|_| lambda_scale * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            (z, lambda)
        })
        .collect();
    isaacs_gap_at(red, &probes)
}

/// Isaacs gap over explicit `(z, lambda)` probes.
pub fn isaacs_gap_at(red: &ReducedSystem, probes: &[(Vec<f64>, Vec<f64>)]) -> Result<IsaacsCheck> {
    let n = red.n_z();
    let lattice = GameLattice::of(red);
    let (nu, nd) = (lattice.n_controls(), lattice.n_disturbances());
    let mut table = vec![0.0; lattice.table_len(n)];
    let mut out = IsaacsCheck {
        max_gap: -1.0,
        worst_z: Vec::new(),
        worst_lambda: Vec::new(),
        n_probes: probes.len(),
    };
    for (z, lambda) in probes {
        crate::error::check_len("z", n, z)?;
        crate::error::check_len("lambda", n, lambda)?;
        lattice.fill_table(red, z, &mut table)?;
        let gap = (min_max(&table, lambda, nu, nd).0 - max_min(&table, lambda, nu, nd).0).abs();
        if gap > out.max_gap {
            out.max_gap = gap;
            out.worst_z = z.clone();
            out.worst_lambda = lambda.clone();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------- boundary layer

/// One piece of a piecewise-constant `(u, d)` signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalPiece {
    pub duration: f64,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

/// A decay trial: initial offset `w(0)` and the signal driving `w' = A w`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrial {
    pub w0: Vec<f64>,
    pub pieces: Vec<SignalPiece>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCheck {
    pub worst_ratio: f64,
    pub worst_trial: usize,
    pub worst_time: f64,
    pub n_trials: usize,
    pub horizon: f64,
}

const SAMPLES_PER_PIECE: usize = 8;

/// Worst `|w(s)| / (alpha exp(-kappa s) |w(0)|)` over sample times
/// `s in (0, horizon]` of one trial, with the exact matrix exponential on
/// each piece. Returns `(ratio, time)`; a zero offset gives ratio 0.
pub fn decay_ratio(
    sys: &SpSystem,
    cert: &LyapunovCert,
    z: &[f64],
    trial: &DecayTrial,
) -> Result<(f64, f64)> {
    let n = sys.n_y();
    crate::error::check_len("w0", n, &trial.w0)?;
    let mut w = DVector::from_column_slice(&trial.w0);
    let w0 = w.norm();
    if w0 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut s = 0.0;
    let mut worst = (0.0, 0.0);
    for piece in &trial.pieces {
        if !(piece.duration > 0.0) {
            return Err(Error::Domain(
                "signal pieces need positive durations".into(),
            ));
        }
        let a = sys.a(z, &piece.u, &piece.d)?;
        let h = piece.duration / SAMPLES_PER_PIECE as f64;
        let step = (a * h).exp();
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "matrix exponential overflowed at s = {s}"
            )));
        }
        for _ in 0..SAMPLES_PER_PIECE {
            w = &step * w;
            s += h;
            let ratio = w.norm() / (cert.alpha_decay * (-cert.kappa * s).exp() * w0);
            if ratio > worst.0 {
                worst = (ratio, s);
            }
        }
    }
    Ok(worst)
}

/// Runs `n_trials` random trials at slow state `z`: piecewise-constant
/// `(u, d)` uniform in their boxes and a random unit offset.
pub fn check_boundary_layer_decay(
    sys: &SpSystem,
    cert: &LyapunovCert,
    z: &[f64],
    horizon: f64,
    n_trials: usize,
    n_pieces: usize,
    seed: u64,
) -> Result<DecayCheck> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if n_pieces == 0 {
        return Err(Error::Domain("n_pieces must be at least 1".into()));
    }
    crate::error::check_len("z", sys.n_z(), z)?;
    let mut rng = rng_stream(seed, 4);
    let mut out = DecayCheck {
        worst_ratio: 0.0,
        worst_trial: 0,
        worst_time: 0.0,
        n_trials,
        horizon,
    };
    for k in 0..n_trials {
        let mut w0: Vec<f64> = Vec::new();
        while w0.iter().map(|v| v * v).sum::<f64>() < 1e-12 {
            w0 = (0..sys.n_y())
                .map(|_| 2.0 * rng.random::<f64>() - 1.0)
                .collect();
        }
        let pieces = (0..n_pieces)
            .map(|_| SignalPiece {
                duration: horizon / n_pieces as f64,
                u: sys.u_set().sample_uniform(&mut rng),
                d: sys.d_set().sample_uniform(&mut rng),
            })
            .collect();
        let (ratio, time) = decay_ratio(sys, cert, z, &DecayTrial { w0, pieces })?;
        if ratio > out.worst_ratio {
            out.worst_ratio = ratio;
            out.worst_trial = k;
            out.worst_time = time;
        }
    }
    Ok(out)
}

// --------------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Candidate Lyapunov matrix; identity when `None`.
    pub p: Option<DMatrix<f64>>,
    pub z_region: BoxSet,
    pub n_samples: usize,
    pub n_probes: usize,
    pub lambda_scale: f64,
    pub decay_horizon: f64,
    pub decay_trials: usize,
    pub decay_pieces: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl VerifyOptions {
    pub fn new(z_region: BoxSet) -> Self {
        Self {
            p: None,
            z_region,
            n_samples: 1000,
            n_probes: 1000,
            lambda_scale: 2.0,
            decay_horizon: 10.0,
            decay_trials: 100,
            decay_pieces: 16,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub regularity: bool,
    pub stability: bool,
    pub isaacs: bool,
    pub decay: Option<bool>,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.regularity && self.stability && self.isaacs && self.decay.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub system: String,
    pub seed: u64,
    pub n_samples: usize,
    pub tolerances: Tolerances,
    pub regularity: RegularityEstimate,
    pub stability: StabilityOutcome,
    pub isaacs: IsaacsCheck,
    /// Run at the centre of the region, only when stability is certified.
    pub decay: Option<DecayCheck>,
    pub verdicts: Verdicts,
}

/// Runs every check with the given options.
pub fn verify(sys: &SpSystem, opts: &VerifyOptions) -> Result<AssumptionReport> {
    let p = opts
        .p
        .clone()
        .unwrap_or_else(|| DMatrix::identity(sys.n_y(), sys.n_y()));
    let tol = opts.tolerances;
    let regularity = estimate_regularity_bounds(sys, &opts.z_region, opts.n_samples, opts.seed)?;
    let stability = check_stability(
        sys,
        &p,
        &opts.z_region,
        opts.n_samples,
        opts.seed,
        tol.stability,
    )?;
    let isaacs = check_isaacs(
        &sys.reduce(),
        &opts.z_region,
        opts.n_probes,
        opts.lambda_scale,
        opts.seed,
    )?;
    let decay = match stability.cert() {
        Some(cert) => {
            let centre: Vec<f64> = opts
                .z_region
                .lower()
                .iter()
                .zip(opts.z_region.upper())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            Some(check_boundary_layer_decay(
                sys,
                cert,
                &centre,
                opts.decay_horizon,
                opts.decay_trials,
                opts.decay_pieces,
                opts.seed,
            )?)
        }
        None => None,
    };
    let verdicts = Verdicts {
        regularity: regularity.k_estimate.is_finite(),
        stability: stability.cert().is_some(),
        isaacs: isaacs.max_gap <= tol.isaacs,
        decay: decay.as_ref().map(|d| d.worst_ratio <= 1.0 + tol.decay),
    };
    Ok(AssumptionReport {
        system: sys.name().to_string(),
        seed: opts.seed,
        n_samples: opts.n_samples,
        tolerances: tol,
        regularity,
        stability,
        isaacs,
        decay,
        verdicts,
    })
}
