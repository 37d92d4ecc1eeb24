//! Runs algorithms against instances and compares them with the bounds.
//!
//! Bound checks, error-bound estimation, the conjecture search, the Huber
//! sweep for the silver schedule, and CSV serialization of traces and
//! reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::Rng;
use serde::Deserialize;

use crate::algorithms::{
    accelerated_drs_run, drs_run, gd_run, km_run, silver_schedule, Relaxation, Trace,
};
use crate::instances::{
    build_instance, planted_quadratic_composite, random_quadratic_composite, FixedPointSet, GKind,
    Instance, Problem,
};
use crate::operators::{dr_operator_matrix, FunctionOracle, OperatorOracle};
use crate::rates::{BoundParams, BoundSpec};
use crate::rng::{cell_rng, normal_vector, open_uniform, orthogonal_matrix};
use crate::{Matrix, Result, SplitError, Vector};

/// Relative slack of a bound check.
pub const REL_TOL: f64 = 1e-7;
/// Absolute slack of a bound check.
pub const ABS_TOL: f64 = 1e-12;
/// Absolute slack when the reference solution is itself numerical.
pub const ORACLE_ABS_TOL: f64 = 1e-6;
/// A search sample is a violation when its ratio exceeds this.
pub const VIOLATION_RATIO: f64 = 1.0 + 1e-6;

pub const TRACE_CSV_HEADER: &str = "iter,residual_sq,dist_sq,obj_gap,w_coords";
pub const BOUND_CSV_HEADER: &str = "bound_id,instance_id,gamma,lambda,N,lhs,rhs,ratio,pass";

/// `lhs/rhs`, with `0` when both sides vanish (up to [`ABS_TOL`] on `lhs`).
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs.abs() <= ABS_TOL {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheckReport {
    pub bound_id: String,
    pub label: &'static str,
    pub instance_id: String,
    pub gamma: f64,
    /// Constant relaxation as a number, or a schedule name.
    pub lambda: String,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    pub notes: String,
}

impl BoundCheckReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        bound: &BoundSpec,
        instance_id: &str,
        gamma: f64,
        lambda: String,
        n: usize,
        lhs: f64,
        rhs: f64,
        abs_tol: f64,
        notes: String,
    ) -> Self {
        Self {
            bound_id: bound.id().into(),
            label: bound.label(),
            instance_id: instance_id.into(),
            gamma,
            lambda,
            n,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            pass: lhs <= rhs * (1.0 + REL_TOL) + abs_tol,
            notes,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{},{},{:?},{:?},{:?},{}",
            self.bound_id,
            self.instance_id,
            self.gamma,
            self.lambda,
            self.n,
            self.lhs,
            self.rhs,
            self.ratio,
            self.pass
        )
    }
}

impl fmt::Display for BoundCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} [{}] on {}: gamma={:?} lambda={} N={} lhs={:e} rhs={:e} ratio={:.12} pass={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.bound_id,
            self.label,
            self.instance_id,
            self.gamma,
            self.lambda,
            self.n,
            self.lhs,
            self.rhs,
            self.ratio,
            self.pass
        )?;
        if !self.notes.is_empty() {
            write!(f, "\n  notes: {}", self.notes)?;
        }
        Ok(())
    }
}

/// Which runner a bound check uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmId {
    /// Relaxed Douglas-Rachford (prox form for composite instances, the
    /// averaged iteration for nonexpansive maps).
    Drs,
    Accelerated,
    GradientDescent,
}

impl std::str::FromStr for AlgorithmId {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drs" => Ok(AlgorithmId::Drs),
            "accel" => Ok(AlgorithmId::Accelerated),
            "gd" => Ok(AlgorithmId::GradientDescent),
            other => Err(SplitError::Usage(format!(
                "unknown algorithm `{other}` (drs, accel, gd)"
            ))),
        }
    }
}

/// Default runner for a bound.
pub fn algorithm_for(bound: &BoundSpec) -> AlgorithmId {
    match bound {
        BoundSpec::SilverGd { .. } => AlgorithmId::GradientDescent,
        BoundSpec::ConjAccelerated { .. } => AlgorithmId::Accelerated,
        _ => AlgorithmId::Drs,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunParams {
    pub gamma: f64,
    pub relaxation: Relaxation,
    /// Starting point `w¹` (or `x⁰` for gradient descent); `e₁` by default.
    pub start: Option<Vector>,
}

impl RunParams {
    pub fn new(gamma: f64, lambda: f64) -> Self {
        Self {
            gamma,
            relaxation: Relaxation::Constant(lambda),
            start: None,
        }
    }

    pub fn with_start(mut self, start: Vector) -> Self {
        self.start = Some(start);
        self
    }

    fn start_for(&self, dim: usize) -> Vector {
        self.start.clone().unwrap_or_else(|| unit(dim))
    }
}

fn unit(dim: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[0] = 1.0;
    v
}

fn lambda_label(relaxation: &Relaxation) -> String {
    match relaxation {
        Relaxation::Constant(l) => format!("{l:?}"),
        Relaxation::Schedule(_) => "schedule".into(),
    }
}

/// Relaxation `(π_k, 1)` of length `2^k`.
pub fn silver_relaxation(k: u32) -> Result<Relaxation> {
    let mut values = silver_schedule(k)?.values;
    values.push(1.0);
    Ok(Relaxation::Schedule(values))
}

/// Runs Douglas-Rachford (or the averaged iteration for map instances).
pub fn run_splitting(
    instance: &Instance,
    algorithm: AlgorithmId,
    params: &RunParams,
    n: usize,
) -> Result<Trace> {
    let w1 = params.start_for(instance.dim());
    match (algorithm, &instance.problem) {
        (AlgorithmId::Drs, Problem::Map(map)) => {
            if params.relaxation != Relaxation::Constant(1.0) {
                return Err(SplitError::Unsupported(
                    "the averaged iteration on a map instance uses unit relaxation".into(),
                ));
            }
            km_run(|w: &Vector| map.apply(w), &w1, n)
        }
        (AlgorithmId::Drs, _) => instance.run_drs(params.gamma, &params.relaxation, &w1, n),
        (AlgorithmId::Accelerated, Problem::Composite { f, g }) => {
            let lambda = match params.relaxation {
                Relaxation::Constant(l) => l,
                Relaxation::Schedule(_) => {
                    return Err(SplitError::Unsupported(
                        "accelerated runs take a constant relaxation".into(),
                    ))
                }
            };
            accelerated_drs_run(f, g, params.gamma, lambda, &w1, n)
        }
        (AlgorithmId::Accelerated, _) => Err(SplitError::Unsupported(format!(
            "accelerated runs need a composite instance, got {}",
            instance.id
        ))),
        (AlgorithmId::GradientDescent, _) => Err(SplitError::Unsupported(
            "gradient descent does not produce a splitting trace".into(),
        )),
    }
}

/// Fixed-point set used for distances; map instances average with `½(I + S)`.
fn fixed_set(instance: &Instance, gamma: f64) -> Result<FixedPointSet> {
    let set = instance.fixed_point_set(gamma)?;
    if set == FixedPointSet::Unknown {
        return Err(SplitError::MissingReference(format!(
            "{}: fixed-point set unknown",
            instance.id
        )));
    }
    Ok(set)
}

fn dist(set: &FixedPointSet, w: &Vector) -> f64 {
    set.distance(w).expect("known fixed-point set")
}

/// `f(y) + g(y) − f(x⋆) − g(x⋆)`.
fn objective_gap(instance: &Instance, y: &Vector) -> Result<f64> {
    Ok(instance.objective(y)? - instance.optimal_value()?)
}

fn bound_lambda(bound: &BoundSpec) -> Option<f64> {
    match *bound {
        BoundSpec::KmSublinear { lambda, .. }
        | BoundSpec::LinearErrorBound { lambda, .. }
        | BoundSpec::RsmErrorBound { lambda, .. }
        | BoundSpec::ConjCocoercive { lambda, .. }
        | BoundSpec::ConjComposite { lambda, .. }
        | BoundSpec::ConjAccelerated { lambda, .. } => Some(lambda),
        BoundSpec::KmSublinearLambda1 { .. } => Some(1.0),
        _ => None,
    }
}

fn bound_n(bound: &BoundSpec) -> Option<usize> {
    match *bound {
        BoundSpec::KmSublinear { n, .. }
        | BoundSpec::KmSublinearLambda1 { n }
        | BoundSpec::ConjCocoercive { n, .. }
        | BoundSpec::ConjComposite { n, .. }
        | BoundSpec::ConjAccelerated { n, .. } => Some(n),
        BoundSpec::ConjSilverDrs { k, .. } => Some(1usize << k),
        BoundSpec::SilverGd { k, .. } => Some((1usize << k) - 1),
        _ => None,
    }
}

fn bound_gamma(bound: &BoundSpec) -> Option<f64> {
    match *bound {
        BoundSpec::RsmErrorBound { gamma, .. }
        | BoundSpec::ConjCocoercive { gamma, .. }
        | BoundSpec::ConjComposite { gamma, .. }
        | BoundSpec::ConjSilverDrs { gamma, .. }
        | BoundSpec::ConjAccelerated { gamma, .. } => Some(gamma),
        _ => None,
    }
}

/// Runs the algorithm for `n` iterations and compares the measured quantity
/// with the bound.
///
/// | bound | lhs | rhs |
/// |---|---|---|
/// | `km-*`, `conj-cocoercive` | `‖w^{N+1} − w^N‖²` | value · `dist(w¹, W⋆)²` |
/// | `linear-eb` | max per-step `dist(w^{k+1})/dist(w^k)` | value |
/// | `eb-from-rate`, `rsm-eb` | `dist(w^k)` at the worst iterate | value · `‖w^{k+1} − w^k‖` |
/// | `silver-gd` | `F(x^N) − F⋆` | value · `‖x⁰ − x⋆‖²` |
/// | `conj-composite`, `conj-silver-drs`, `conj-accel` | `F(y^N) − F⋆` | value · `‖w¹ − w⋆‖²` |
pub fn verify_bound(
    instance: &Instance,
    algorithm: AlgorithmId,
    bound: &BoundSpec,
    params: &RunParams,
    n: usize,
) -> Result<BoundCheckReport> {
    let value = bound.evaluate(false)?;
    if let (Some(bl), Relaxation::Constant(l)) = (bound_lambda(bound), &params.relaxation) {
        if bl != *l {
            return Err(SplitError::InvalidParameter(format!(
                "bound {} is stated for lambda={bl} but the run uses lambda={l}",
                bound.id()
            )));
        }
    }
    if let Some(bn) = bound_n(bound) {
        if bn != n {
            return Err(SplitError::InvalidParameter(format!(
                "bound {} is stated for N={bn} but the run has N={n}",
                bound.id()
            )));
        }
    }
    if let Some(bg) = bound_gamma(bound) {
        if bg != params.gamma {
            return Err(SplitError::InvalidParameter(format!(
                "bound {} is stated for gamma={bg} but the run uses gamma={}",
                bound.id(),
                params.gamma
            )));
        }
    }
    let abs_tol = if instance.oracle_solution {
        ORACLE_ABS_TOL
    } else {
        ABS_TOL
    };
    let mut notes = Vec::new();
    if instance.oracle_solution {
        notes.push("reference solution from a long numerical run; absolute slack 1e-6".to_string());
    }
    if bound.is_conjecture() {
        notes.push("conjectured bound: a failure is a finding, not a code error".to_string());
    }
    let lambda = lambda_label(&params.relaxation);

    if let BoundSpec::SilverGd { k, l } = *bound {
        let f = match &instance.problem {
            Problem::Smooth { f } => f.clone(),
            Problem::Composite { f, g }
                if matches!(g.kind(), crate::operators::FunctionKind::Zero) =>
            {
                f.clone()
            }
            _ => {
                return Err(SplitError::Unsupported(format!(
                    "silver gradient descent needs a smooth instance, got {}",
                    instance.id
                )))
            }
        };
        let x_star = instance
            .known_solution
            .clone()
            .ok_or_else(|| SplitError::MissingReference(instance.id.clone()))?;
        let x0 = params.start_for(instance.dim());
        let steps = silver_schedule(k)?.scaled(l);
        let run = gd_run(&f, &steps, &x0)?;
        let gap = run.last_value() - f.value(&x_star)?;
        let rhs = value * (&x0 - &x_star).norm_squared();
        return Ok(BoundCheckReport::new(
            bound,
            &instance.id,
            0.0,
            format!("silver:{k}"),
            steps.len(),
            gap,
            rhs,
            abs_tol,
            notes.join("; "),
        ));
    }

    let mut run_params = params.clone();
    if let BoundSpec::ConjSilverDrs { k, .. } = *bound {
        run_params.relaxation = silver_relaxation(k)?;
        notes.push("relaxation (pi_k, 1) exceeds 2; Fejer monotonicity is not expected".into());
    }
    let lambda = if matches!(bound, BoundSpec::ConjSilverDrs { .. }) {
        format!("silver:{}", n.trailing_zeros())
    } else {
        lambda
    };
    let trace = run_splitting(instance, algorithm, &run_params, n)?;
    let set = fixed_set(instance, params.gamma)?;
    let d1 = dist(&set, &trace.w[0]);

    let (lhs, rhs) = match *bound {
        BoundSpec::KmSublinear { .. }
        | BoundSpec::KmSublinearLambda1 { .. }
        | BoundSpec::ConjCocoercive { .. } => (trace.residual_sq[n - 1], value * d1 * d1),
        BoundSpec::LinearErrorBound { .. } => {
            let mut worst: f64 = 0.0;
            for k in 0..n {
                let (a, b) = (dist(&set, &trace.w[k]), dist(&set, &trace.w[k + 1]));
                if a > 0.0 {
                    worst = worst.max(b / a);
                }
            }
            (worst, value)
        }
        BoundSpec::ErrorBoundFromRate { .. } | BoundSpec::RsmErrorBound { .. } => {
            let (mut lhs, mut rhs, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
            for k in 0..n {
                let d = dist(&set, &trace.w[k]);
                let r = value * trace.residual_sq[k].sqrt();
                let q = ratio(d, r);
                if q > worst {
                    (lhs, rhs, worst) = (d, r, q);
                }
            }
            (lhs, rhs)
        }
        BoundSpec::ConjComposite { .. }
        | BoundSpec::ConjSilverDrs { .. }
        | BoundSpec::ConjAccelerated { .. } => {
            let y = trace.last_y().expect("n >= 1");
            (objective_gap(instance, y)?, value * d1 * d1)
        }
        BoundSpec::SilverGd { .. } => unreachable!("handled above"),
    };
    Ok(BoundCheckReport::new(
        bound,
        &instance.id,
        params.gamma,
        lambda,
        n,
        lhs,
        rhs,
        abs_tol,
        notes.join("; "),
    ))
}

// ---------------------------------------------------------------------------
// Error-bound moduli

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorBoundModulus {
    Finite(f64),
    /// `I − T` vanishes: every point is fixed.
    Unbounded,
}

impl ErrorBoundModulus {
    pub fn value(&self) -> f64 {
        match self {
            ErrorBoundModulus::Finite(m) => *m,
            ErrorBoundModulus::Unbounded => f64::INFINITY,
        }
    }
}

/// Relative threshold below which a singular value of `I − T` counts as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Smallest `μ` with `dist_{W⋆}(w) ≤ μ‖(I − T)w‖` for linear `T`: the
/// reciprocal of the smallest nonzero singular value of `I − T`.
pub fn error_bound_mu_of_matrix(t: &Matrix) -> ErrorBoundModulus {
    let dim = t.nrows();
    let m = Matrix::identity(dim, dim) - t;
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return ErrorBoundModulus::Unbounded;
    }
    let smallest = sv
        .iter()
        .copied()
        .filter(|s| *s > SINGULAR_TOL * top.max(1.0))
        .fold(f64::INFINITY, f64::min);
    ErrorBoundModulus::Finite(1.0 / smallest)
}

pub fn estimate_error_bound_mu(
    instance: &Instance,
    gamma: f64,
    lambda: f64,
) -> Result<ErrorBoundModulus> {
    let (a, b) = instance.operators()?;
    let t = dr_operator_matrix(&a, &b, gamma, lambda)?;
    Ok(error_bound_mu_of_matrix(&t))
}

/// Largest per-step contraction `dist(w^{k+1})/dist(w^k)` along a trace.
pub fn observed_rate(trace: &Trace, set: &FixedPointSet) -> Result<f64> {
    let mut r: f64 = 0.0;
    for k in 0..trace.iterations() {
        let a = set
            .distance(&trace.w[k])
            .ok_or_else(|| SplitError::MissingReference("fixed-point set unknown".into()))?;
        let b = set.distance(&trace.w[k + 1]).expect("known set");
        if a > 0.0 {
            r = r.max(b / a);
        }
    }
    Ok(r)
}

/// Checks `dist(w^k) ≤ ‖Tw^k − w^k‖/(1 − r)` at every iterate of the trace.
pub fn check_eb_necessity(
    trace: &Trace,
    set: &FixedPointSet,
    r: f64,
    instance_id: &str,
) -> Result<BoundCheckReport> {
    if !(0.0..1.0).contains(&r) {
        return Err(SplitError::NotApplicable(format!(
            "rate r = {r} outside [0, 1)"
        )));
    }
    if *set == FixedPointSet::Unknown {
        return Err(SplitError::MissingReference(format!(
            "{instance_id}: fixed-point set unknown"
        )));
    }
    let mu = 1.0 / (1.0 - r);
    let bound = BoundSpec::ErrorBoundFromRate {
        r: r.max(f64::MIN_POSITIVE),
    };
    let (mut lhs, mut rhs, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
    for k in 0..trace.iterations() {
        let d = dist(set, &trace.w[k]);
        let b = mu * trace.residual_sq[k].sqrt();
        let q = ratio(d, b);
        if q > worst {
            (lhs, rhs, worst) = (d, b, q);
        }
    }
    let mut report = BoundCheckReport::new(
        &bound,
        instance_id,
        trace.gamma,
        trace
            .lambdas
            .first()
            .map_or("-".into(), |l| format!("{l:?}")),
        trace.iterations(),
        lhs,
        rhs,
        ABS_TOL,
        format!("r={r:?}, worst iterate shown"),
    );
    report.pass = lhs <= rhs * (1.0 + REL_TOL) + ABS_TOL;
    Ok(report)
}

/// Samples `w` and checks `dist_{W⋆}(w) ≤ μ‖(I − T)w‖` for linear `T`.
pub fn check_error_bound_samples(
    instance: &Instance,
    gamma: f64,
    lambda: f64,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<BoundCheckReport> {
    let (a, b) = instance.operators()?;
    let t = dr_operator_matrix(&a, &b, gamma, lambda)?;
    let set = fixed_set(instance, gamma)?;
    let dim = instance.dim();
    let m = Matrix::identity(dim, dim) - t;
    let (mut lhs, mut rhs, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
    for s in 0..samples {
        let mut rng = cell_rng(seed, s as u64);
        let w = normal_vector(&mut rng, dim);
        let d = dist(&set, &w);
        let r = mu * (&m * &w).norm();
        let q = ratio(d, r);
        if q > worst {
            (lhs, rhs, worst) = (d, r, q);
        }
    }
    let bound = BoundSpec::RsmErrorBound {
        gamma,
        beta: instance.constants.beta.unwrap_or(f64::NAN),
        mu_f: instance.constants.mu_f.unwrap_or(f64::NAN),
        lambda,
    };
    Ok(BoundCheckReport::new(
        &bound,
        &instance.id,
        gamma,
        format!("{lambda:?}"),
        samples,
        lhs,
        rhs,
        ABS_TOL,
        format!("mu={mu:?}, {samples} sampled points, worst shown"),
    ))
}

// ---------------------------------------------------------------------------
// Conjecture search

pub const SEARCH_TARGETS: [&str; 4] = [
    "conj-cocoercive",
    "conj-composite",
    "conj-silver-drs",
    "conj-accel",
];

#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    pub cell: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Everything needed to rebuild the sample by hand.
    pub descriptor: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub target: String,
    pub budget: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub best_ratio: f64,
    pub best: Option<CellOutcome>,
    pub violations: Vec<CellOutcome>,
}

impl SearchReport {
    pub fn reproduce_hint(&self, cell: &CellOutcome) -> String {
        format!(
            "replay with target={} seed={} cell={} dim={} (or `splitlab search --target {} --budget {} --seed {} --dim {}`)",
            self.target,
            self.seed,
            cell.cell,
            self.max_dim,
            self.target,
            self.budget,
            self.seed,
            self.max_dim
        )
    }
}

impl fmt::Display for SearchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: budget={} seed={} dim<={} best_ratio={:.12} violations={}",
            if self.violations.is_empty() {
                "NO-VIOLATION"
            } else {
                "VIOLATION"
            },
            self.target,
            self.budget,
            self.seed,
            self.max_dim,
            self.best_ratio,
            self.violations.len()
        )?;
        if let Some(best) = &self.best {
            write!(f, "\n  best: cell={} {}", best.cell, best.descriptor)?;
        }
        for v in &self.violations {
            write!(
                f,
                "\n  violation: cell={} ratio={:?} lhs={:?} rhs={:?} {}\n    {}",
                v.cell,
                v.ratio,
                v.lhs,
                v.rhs,
                v.descriptor,
                self.reproduce_hint(v)
            )?;
        }
        Ok(())
    }
}

/// Draw from `(0, hi)` that also probes both ends of the interval.
fn sample_open<R: Rng>(rng: &mut R, hi: f64) -> f64 {
    let u = match rng.gen_range(0..4) {
        0 => 1.0 - 10f64.powf(-rng.gen_range(1.0..7.0)),
        1 => 10f64.powf(-rng.gen_range(0.3..3.0)),
        _ => open_uniform(rng, 0.0, 1.0),
    };
    hi * u
}

/// Draw from `(0, hi]`, hitting `hi` exactly a quarter of the time.
fn sample_left_open<R: Rng>(rng: &mut R, hi: f64) -> f64 {
    if rng.gen_range(0..4) == 0 {
        hi
    } else {
        hi * sample_open(rng, 1.0)
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn pick_g<R: Rng>(rng: &mut R) -> GKind {
    [GKind::Zero, GKind::L1, GKind::Box][rng.gen_range(0..3)]
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(","))
}

/// Composite sample: instance with known `x⋆`, `w⋆ = x⋆ + γ∇f(x⋆)`.
struct CompositeSample {
    instance: Instance,
    l: f64,
    family: String,
}

fn composite_sample<R: Rng>(rng: &mut R, max_dim: usize) -> Result<CompositeSample> {
    let dim = rng.gen_range(1..=max_dim);
    let l = log_uniform(rng, 0.1, 10.0);
    if rng.gen_bool(0.7) {
        let g = pick_g(rng);
        let seed: u64 = rng.gen();
        let instance = planted_quadratic_composite(dim, l, g, seed)?;
        let family = format!("planted-quad({})", instance.descriptor);
        Ok(CompositeSample {
            instance,
            l,
            family,
        })
    } else {
        let delta = log_uniform(rng, 1e-3, 10.0);
        let f = FunctionOracle::scaled_sum(vec![(l, FunctionOracle::huber(dim, delta)?)])?;
        let (g, gname) = if rng.gen_bool(0.5) {
            (FunctionOracle::zero(dim), "zero".to_string())
        } else {
            let weight = rng.gen_range(0.0..1.0) * l;
            (FunctionOracle::l1(dim, weight)?, format!("l1({weight:?})"))
        };
        let instance = huber_composite(f, g, dim);
        Ok(CompositeSample {
            instance,
            l,
            family: format!("huber(dim={dim},L={l:?},delta={delta:?},g={gname})"),
        })
    }
}

fn huber_composite(f: FunctionOracle, g: FunctionOracle, dim: usize) -> Instance {
    Instance {
        id: "huber-composite".into(),
        descriptor: String::new(),
        constants: crate::instances::Constants {
            smoothness: f.smoothness(),
            ..Default::default()
        },
        problem: Problem::Composite { f, g },
        known_solution: Some(Vector::zeros(dim)),
        fixed_points: crate::instances::FixedPoints::FromSmoothSolution,
        oracle_solution: false,
    }
}

fn start_near<R: Rng>(rng: &mut R, w_star: &Vector) -> Vector {
    if rng.gen_range(0..50) == 0 {
        return w_star.clone();
    }
    let scale = log_uniform(rng, 0.1, 10.0);
    w_star + normal_vector(rng, w_star.len()) * scale
}

/// Evaluates search cell `cell` of `target`; pure in `(target, seed, cell, max_dim)`.
pub fn search_cell(target: &str, seed: u64, cell: u64, max_dim: usize) -> Result<CellOutcome> {
    if max_dim == 0 {
        return Err(SplitError::InvalidParameter(
            "search dimension must be >= 1".into(),
        ));
    }
    let mut rng = cell_rng(seed, cell);
    match target {
        "conj-cocoercive" => cocoercive_cell(&mut rng, cell, max_dim),
        "conj-composite" | "conj-silver-drs" | "conj-accel" => {
            let sample = composite_sample(&mut rng, max_dim)?;
            let l = sample.l;
            let (bound, params, n) = match target {
                "conj-composite" => {
                    let gamma = sample_open(&mut rng, (2.0 * std::f64::consts::SQRT_2 - 1.0) / l);
                    let lambda = sample_open(&mut rng, (1.0 + 5f64.sqrt()) / 2.0);
                    let n = rng.gen_range(1..=20);
                    (
                        BoundSpec::ConjComposite {
                            n,
                            lambda,
                            gamma,
                            l,
                        },
                        RunParams::new(gamma, lambda),
                        n,
                    )
                }
                "conj-silver-drs" => {
                    let gamma = sample_open(&mut rng, (2.0 * std::f64::consts::SQRT_2 - 1.0) / l);
                    let k = rng.gen_range(1..=4u32);
                    let params = RunParams {
                        gamma,
                        relaxation: silver_relaxation(k)?,
                        start: None,
                    };
                    (
                        BoundSpec::ConjSilverDrs { k, gamma, l },
                        params,
                        1usize << k,
                    )
                }
                _ => {
                    let gamma = sample_left_open(&mut rng, 1.0 / l);
                    let lambda = sample_left_open(&mut rng, 1.0);
                    let n = rng.gen_range(1..=20);
                    (
                        BoundSpec::ConjAccelerated {
                            n,
                            lambda,
                            gamma,
                            l,
                        },
                        RunParams::new(gamma, lambda),
                        n,
                    )
                }
            };
            let w_star = sample.instance.fixed_point(params.gamma)?;
            let w1 = start_near(&mut rng, &w_star);
            let params = params.with_start(w1.clone());
            let algorithm = algorithm_for(&bound);
            let report = verify_bound(&sample.instance, algorithm, &bound, &params, n)?;
            Ok(CellOutcome {
                cell,
                lhs: report.lhs,
                rhs: report.rhs,
                ratio: report.ratio,
                descriptor: format!(
                    "{} gamma={:?} lambda={} N={} w1={}",
                    sample.family,
                    params.gamma,
                    report.lambda,
                    n,
                    fmt_vec(&w1)
                ),
            })
        }
        other => Err(SplitError::Usage(format!(
            "unknown search target `{other}` (expected one of {})",
            SEARCH_TARGETS.join(", ")
        ))),
    }
}

fn cocoercive_cell<R: Rng>(rng: &mut R, cell: u64, max_dim: usize) -> Result<CellOutcome> {
    let dim = rng.gen_range(1..=max_dim);
    let beta = log_uniform(rng, 0.1, 10.0);
    let gamma = sample_open(rng, beta);
    let lambda = sample_open(rng, 2.0);
    let n = rng.gen_range(1..=20);
    let (a, b, w_star, family) = match rng.gen_range(0..3) {
        0 => {
            let g = pick_g(rng);
            let seed: u64 = rng.gen();
            let inst = planted_quadratic_composite(dim, 1.0 / beta, g, seed)?;
            let w_star = inst.fixed_point(gamma)?;
            let (a, b) = inst.operators()?;
            (a, b, w_star, format!("planted-quad({})", inst.descriptor))
        }
        1 => {
            // B = (I + U)/(2β) is exactly β-cocoercive and not symmetric
            let u = orthogonal_matrix(rng, dim);
            let m = (Matrix::identity(dim, dim) + u) / (2.0 * beta);
            let b = OperatorOracle::linear(m.clone())?.with_cocoercivity(beta);
            let (g, gname) = zero_or_l1_or_box_around_origin(rng, dim)?;
            let desc = format!(
                "affine(dim={dim},beta={beta:?},g={gname},B={:?})",
                m.as_slice()
            );
            (
                OperatorOracle::subdifferential(g),
                b,
                Vector::zeros(dim),
                desc,
            )
        }
        _ => {
            let delta = log_uniform(rng, 1e-3, 10.0);
            let f =
                FunctionOracle::scaled_sum(vec![(1.0 / beta, FunctionOracle::huber(dim, delta)?)])?;
            let (g, gname) = zero_or_l1_or_box_around_origin(rng, dim)?;
            let desc = format!("huber(dim={dim},beta={beta:?},delta={delta:?},g={gname})");
            (
                OperatorOracle::subdifferential(g),
                OperatorOracle::subdifferential(f).with_cocoercivity(beta),
                Vector::zeros(dim),
                desc,
            )
        }
    };
    let w1 = start_near(rng, &w_star);
    let bound = BoundSpec::ConjCocoercive {
        n,
        lambda,
        beta,
        gamma,
    };
    let value = bound.evaluate(false)?;
    let trace = drs_run(&a, &b, gamma, &Relaxation::Constant(lambda), &w1, n)?;
    let lhs = trace.residual_sq[n - 1];
    let rhs = value * (&w1 - &w_star).norm_squared();
    Ok(CellOutcome {
        cell,
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
        descriptor: format!(
            "{family} gamma={gamma:?} lambda={lambda:?} N={n} w1={}",
            fmt_vec(&w1)
        ),
    })
}

fn zero_or_l1_or_box_around_origin<R: Rng>(
    rng: &mut R,
    dim: usize,
) -> Result<(FunctionOracle, String)> {
    Ok(match rng.gen_range(0..3) {
        0 => (FunctionOracle::zero(dim), "zero".into()),
        1 => {
            let w = rng.gen_range(0.0..2.0);
            (FunctionOracle::l1(dim, w)?, format!("l1({w:?})"))
        }
        _ => {
            let lo = Vector::from_fn(dim, |_, _| -rng.gen_range(0.1..2.0));
            let hi = Vector::from_fn(dim, |_, _| rng.gen_range(0.1..2.0));
            let name = format!("box({},{})", fmt_vec(&lo), fmt_vec(&hi));
            (FunctionOracle::indicator_of_box(lo, hi)?, name)
        }
    })
}

/// Samples `budget` cells and reports the largest ratio and any violation.
pub fn conjecture_search(
    target: &str,
    budget: usize,
    seed: u64,
    max_dim: usize,
) -> Result<SearchReport> {
    if budget == 0 {
        return Err(SplitError::InvalidParameter(
            "search budget must be >= 1".into(),
        ));
    }
    if !SEARCH_TARGETS.contains(&target) {
        return Err(SplitError::Usage(format!(
            "unknown search target `{target}` (expected one of {})",
            SEARCH_TARGETS.join(", ")
        )));
    }
    let mut best: Option<CellOutcome> = None;
    let mut violations = Vec::new();
    for cell in 0..budget as u64 {
        let outcome = search_cell(target, seed, cell, max_dim)?;
        if outcome.ratio > VIOLATION_RATIO {
            violations.push(outcome.clone());
        }
        if best.as_ref().is_none_or(|b| outcome.ratio > b.ratio) {
            best = Some(outcome);
        }
    }
    Ok(SearchReport {
        target: target.into(),
        budget,
        seed,
        max_dim,
        best_ratio: best.as_ref().map_or(0.0, |b| b.ratio),
        best,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Huber sweep for silver gradient descent

#[derive(Clone, Debug, PartialEq)]
pub struct HuberGrid {
    pub delta_min: f64,
    pub delta_max: f64,
    /// Log-spaced grid points, endpoints included.
    pub points: usize,
    /// Rounds of local refinement around the best grid point.
    pub refine_rounds: usize,
}

impl Default for HuberGrid {
    fn default() -> Self {
        Self {
            delta_min: 1e-4,
            delta_max: 1.0,
            points: 4001,
            refine_rounds: 30,
        }
    }
}

/// `F(x^N)/bound` for Huber(δ), `x⁰ = 1`, `L = 1`, silver level `k`.
pub fn huber_gap_ratio(k: u32, delta: f64) -> Result<f64> {
    let f = FunctionOracle::huber(1, delta)?;
    let run = gd_run(
        &f,
        &silver_schedule(k)?.values,
        &Vector::from_element(1, 1.0),
    )?;
    let bound = BoundSpec::SilverGd { k, l: 1.0 }.evaluate(false)?;
    Ok(run.last_value() / bound)
}

pub fn huber_tightness_sweep(k: u32, grid: &HuberGrid) -> Result<SearchReport> {
    if !(1..=3).contains(&k) {
        return Err(SplitError::InvalidParameter(format!(
            "Huber sweep covers k in 1..=3, got {k}"
        )));
    }
    if grid.points < 2 || !(grid.delta_min > 0.0 && grid.delta_max > grid.delta_min) {
        return Err(SplitError::InvalidParameter(
            "Huber grid needs >= 2 points on 0 < min < max".into(),
        ));
    }
    let (lo, hi) = (grid.delta_min.ln(), grid.delta_max.ln());
    let step = (hi - lo) / (grid.points - 1) as f64;
    let mut best = (f64::NEG_INFINITY, grid.delta_min);
    let mut violations = Vec::new();
    let mut consider = |delta: f64, cell: u64, best: &mut (f64, f64)| -> Result<()> {
        let r = huber_gap_ratio(k, delta)?;
        if r > VIOLATION_RATIO {
            violations.push(CellOutcome {
                cell,
                lhs: r,
                rhs: 1.0,
                ratio: r,
                descriptor: format!("delta={delta:?} k={k} x0=1 L=1"),
            });
        }
        if r > best.0 {
            *best = (r, delta);
        }
        Ok(())
    };
    for i in 0..grid.points {
        consider((lo + step * i as f64).exp(), i as u64, &mut best)?;
    }
    // zoom in on the best grid point in log space
    let mut radius = step;
    for round in 0..grid.refine_rounds {
        let center = best.1.ln();
        for j in -10..=10 {
            let d = (center + radius * j as f64 / 10.0)
                .exp()
                .clamp(grid.delta_min, grid.delta_max);
            consider(
                d,
                (grid.points + round * 21) as u64 + (j + 10) as u64,
                &mut best,
            )?;
        }
        radius /= 5.0;
    }
    let best_ratio = best.0;
    Ok(SearchReport {
        target: format!("huber-silver-k{k}"),
        budget: grid.points,
        seed: 0,
        max_dim: 1,
        best_ratio,
        best: Some(CellOutcome {
            cell: 0,
            lhs: best_ratio,
            rhs: 1.0,
            ratio: best_ratio,
            descriptor: format!("delta={:?} k={k} x0=1 L=1", best.1),
        }),
        violations,
    })
}

/// A seeded 1-smooth test function with its minimizer and a starting point:
/// even indices give random quadratics, odd ones separable Huber functions.
pub fn smooth_case(index: u64, seed: u64) -> Result<(FunctionOracle, Vector, Vector)> {
    let mut rng = cell_rng(seed, index);
    let dim = rng.gen_range(1..=5);
    let x0 = normal_vector(&mut rng, dim) * log_uniform(&mut rng, 0.1, 10.0);
    if index.is_multiple_of(2) {
        let inst = random_quadratic_composite(dim, 1.0, GKind::Zero, rng.gen())?;
        let (f, _) = inst.composite_parts()?;
        Ok((
            f.clone(),
            inst.known_solution.clone().expect("closed form"),
            x0,
        ))
    } else {
        let delta = log_uniform(&mut rng, 1e-3, 10.0);
        Ok((FunctionOracle::huber(dim, delta)?, Vector::zeros(dim), x0))
    }
}

// ---------------------------------------------------------------------------
// Trace CSV and experiments

/// Shortest round-trip decimal of a float.
pub fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Trace CSV with rows `1..=N+1`; `residual_sq` and `obj_gap` are empty on
/// the last row, `dist_sq` when `W⋆` is unknown, `obj_gap` for
/// non-composite instances.
pub fn trace_csv(trace: &Trace, instance: &Instance) -> Result<String> {
    let set = instance
        .fixed_point_set(trace.gamma)
        .unwrap_or(FixedPointSet::Unknown);
    let f_star = match instance.problem {
        Problem::Composite { .. } => instance.optimal_value().ok(),
        _ => None,
    };
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for (k, w) in trace.w.iter().enumerate() {
        let residual = trace
            .residual_sq
            .get(k)
            .map(|r| fmt_float(*r))
            .unwrap_or_default();
        let dist_sq = set
            .distance(w)
            .map(|d| fmt_float(d * d))
            .unwrap_or_default();
        let gap = match (f_star, trace.y.get(k)) {
            (Some(fs), Some(y)) => fmt_float(instance.objective(y)? - fs),
            _ => String::new(),
        };
        let coords: Vec<String> = w.iter().map(|v| fmt_float(*v)).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            k + 1,
            residual,
            dist_sq,
            gap,
            coords.join(";")
        )
        .expect("string write");
    }
    Ok(out)
}

/// Configuration of a `run` experiment; mirrors the command-line flags.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub gamma: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default, rename = "lambda-schedule", alias = "lambda_schedule")]
    pub lambda_schedule: Option<String>,
    pub iters: usize,
    #[serde(default)]
    pub w1: Option<Vec<f64>>,
    #[serde(default)]
    pub algorithm: Option<String>,
}

/// Parses `silver:K` into the relaxation `(π_K, 1)`.
pub fn parse_lambda_schedule(s: &str) -> Result<Relaxation> {
    let k = s
        .strip_prefix("silver:")
        .and_then(|k| k.parse::<u32>().ok())
        .ok_or_else(|| {
            SplitError::Usage(format!("lambda schedule `{s}` is not of the form silver:K"))
        })?;
    silver_relaxation(k)
}

impl ExperimentConfig {
    pub fn relaxation(&self) -> Result<Relaxation> {
        match (&self.lambda, &self.lambda_schedule) {
            (Some(_), Some(_)) => Err(SplitError::Usage(
                "give either lambda or lambda-schedule, not both".into(),
            )),
            (Some(l), None) => Ok(Relaxation::Constant(*l)),
            (None, Some(s)) => parse_lambda_schedule(s),
            (None, None) => Ok(Relaxation::Constant(1.0)),
        }
    }
}

/// Output of [`run_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub instance: Instance,
    pub trace: Trace,
    pub csv: String,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    if config.iters == 0 {
        return Err(SplitError::Usage(
            "iteration count `iters` must be at least 1".into(),
        ));
    }
    let instance = build_instance(&config.instance, &config.params)?;
    let algorithm: AlgorithmId = config.algorithm.as_deref().unwrap_or("drs").parse()?;
    let start = match &config.w1 {
        Some(v) => {
            if v.len() != instance.dim() {
                return Err(SplitError::Usage(format!(
                    "w1 has {} coordinates, instance {} has dimension {}",
                    v.len(),
                    instance.id,
                    instance.dim()
                )));
            }
            Some(Vector::from_vec(v.clone()))
        }
        None => None,
    };
    let params = RunParams {
        gamma: config.gamma,
        relaxation: config.relaxation()?,
        start,
    };
    let trace = run_splitting(&instance, algorithm, &params, config.iters)?;
    let csv = trace_csv(&trace, &instance)?;
    Ok(ExperimentOutput {
        instance,
        trace,
        csv,
    })
}

/// `dist_P(y^N)` on the two-subspace instance next to the two closed forms
/// proposed for it.
#[derive(Clone, Debug, PartialEq)]
pub struct DistPExtras {
    pub n: usize,
    /// From the given run.
    pub observed: f64,
    /// From the run whose start is rotated so that `w^N ∈ P`.
    pub aligned_run: f64,
    /// `√((N−1)^{N−1}/N^N)`.
    pub candidate_a: f64,
    /// `√((N−1)^N/N^{N+1})`.
    pub candidate_b: f64,
}

pub fn two_subspace_extras(n: usize, trace: &Trace) -> Result<DistPExtras> {
    let inst = crate::instances::two_subspace_feasibility(n)?;
    let y = trace
        .last_y()
        .ok_or_else(|| SplitError::InvalidParameter("empty trace".into()))?;
    let nf = n as f64;
    let theta = (1.0 / nf.sqrt()).asin();
    let phi = -((trace.iterations() as f64) - 1.0) * theta;
    let w1 = Vector::from_vec(vec![phi.cos(), phi.sin()]);
    let aligned = inst.run_drs(1.0, &Relaxation::Constant(1.0), &w1, trace.iterations())?;
    let ya = aligned.last_y().expect("nonempty");
    Ok(DistPExtras {
        n,
        observed: y[1].abs(),
        aligned_run: ya[1].abs(),
        candidate_a: crate::rates::km_constant(n).sqrt(),
        candidate_b: (((nf - 1.0) / nf).powi(n as i32) / nf).sqrt(),
    })
}

impl fmt::Display for DistPExtras {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dist_P(y^N): observed={:?} aligned_run={:?} candidate sqrt((N-1)^(N-1)/N^N)={:?} candidate sqrt((N-1)^N/N^(N+1))={:?}",
            self.observed, self.aligned_run, self.candidate_a, self.candidate_b
        )
    }
}

/// Builds a bound from its id, the run parameters and the instance constants;
/// `overrides` win over everything else.
pub fn bound_for(
    id: &str,
    instance: &Instance,
    gamma: f64,
    lambda: f64,
    n: usize,
    overrides: &BoundParams,
) -> Result<BoundSpec> {
    let mut p = BoundParams {
        n: Some(n),
        lambda: Some(lambda),
        gamma: Some(gamma),
        beta: instance.constants.beta,
        mu_f: instance.constants.mu_f,
        l: instance.constants.smoothness,
        ..BoundParams::default()
    };
    if id == "silver-gd" || id == "conj-silver-drs" {
        let k = if id == "silver-gd" {
            (n + 1).trailing_zeros()
        } else {
            n.trailing_zeros()
        };
        p.k = Some(k);
    }
    if id == "linear-eb" && overrides.mu.is_none() {
        p.mu = Some(estimate_error_bound_mu(instance, gamma, lambda)?.value());
    }
    let merge = |a: Option<f64>, b: Option<f64>| b.or(a);
    p.n = overrides.n.or(p.n);
    p.k = overrides.k.or(p.k);
    p.lambda = merge(p.lambda, overrides.lambda);
    p.gamma = merge(p.gamma, overrides.gamma);
    p.mu = merge(p.mu, overrides.mu);
    p.r = merge(p.r, overrides.r);
    p.beta = merge(p.beta, overrides.beta);
    p.mu_f = merge(p.mu_f, overrides.mu_f);
    p.l = merge(p.l, overrides.l);
    p.build(id)
}
