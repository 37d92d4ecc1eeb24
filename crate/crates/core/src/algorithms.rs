//! Trace-producing runners for the Douglas-Rachford family, the averaged
//! (Krasnoselskii-Mann) iteration and gradient descent, plus the silver
//! stepsize schedule.

use crate::operators::{FunctionOracle, OperatorOracle};
use crate::{check_dim, check_gamma, Result, SplitError, Vector, SILVER_RATIO};

/// Full per-iteration record of one run.
///
/// Iterates are 1-based in the documentation and 0-based in storage:
/// `w[0]` is `w¹` and `w[N]` is `w^{N+1}`. `residual_sq[k-1]` is the squared
/// fixed-point residual `‖Tw^k − w^k‖²` of iterate `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub w: Vec<Vector>,
    pub x: Vec<Vector>,
    pub y: Vec<Vector>,
    /// Extrapolation sequence `u¹..u^{N+1}` of the accelerated variant.
    pub u: Option<Vec<Vector>>,
    pub residual_sq: Vec<f64>,
    pub gamma: f64,
    pub lambdas: Vec<f64>,
}

impl Trace {
    /// Number of iterations `N`.
    pub fn iterations(&self) -> usize {
        self.residual_sq.len()
    }

    /// `‖Tw^k − w^k‖²` for `1 ≤ k ≤ N`.
    pub fn fixed_point_residual(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.residual_sq.len() {
            return Err(SplitError::IndexOutOfRange {
                index: k,
                len: self.residual_sq.len(),
            });
        }
        Ok(self.residual_sq[k - 1])
    }

    /// Iterate `w^k`, 1-based.
    pub fn w_at(&self, k: usize) -> Result<&Vector> {
        if k == 0 || k > self.w.len() {
            return Err(SplitError::IndexOutOfRange {
                index: k,
                len: self.w.len(),
            });
        }
        Ok(&self.w[k - 1])
    }

    /// Last `y` iterate, `y^N`.
    pub fn last_y(&self) -> Option<&Vector> {
        self.y.last()
    }
}

/// Relaxation parameters: one value broadcast to every iterate or one per
/// iterate.
#[derive(Clone, Debug, PartialEq)]
pub enum Relaxation {
    Constant(f64),
    Schedule(Vec<f64>),
}

impl Relaxation {
    /// Per-iterate values for an `n`-iteration run.
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        let values = match self {
            Relaxation::Constant(l) => vec![*l; n],
            Relaxation::Schedule(v) if v.len() >= n => v[..n].to_vec(),
            Relaxation::Schedule(v) => {
                return Err(SplitError::InvalidParameter(format!(
                    "relaxation schedule has {} entries, {n} iterations requested",
                    v.len()
                )))
            }
        };
        if let Some(bad) = values.iter().find(|l| !l.is_finite()) {
            return Err(SplitError::InvalidParameter(format!(
                "relaxation parameter must be finite, got {bad}"
            )));
        }
        Ok(values)
    }
}

impl From<f64> for Relaxation {
    fn from(l: f64) -> Self {
        Relaxation::Constant(l)
    }
}

fn validate_run(w1: &Vector, n: usize) -> Result<()> {
    if w1.is_empty() {
        return Err(SplitError::InvalidParameter(
            "initial iterate is empty".into(),
        ));
    }
    if n == 0 {
        return Err(SplitError::InvalidParameter(
            "iteration count must be positive".into(),
        ));
    }
    Ok(())
}

/// Shared three-step loop: `x = first(w)`, `y = second(2x − w)`,
/// `w⁺ = w + λ(y − x)`.
fn splitting_loop<F, G>(
    first: F,
    second: G,
    gamma: f64,
    lambdas: Vec<f64>,
    w1: &Vector,
    n: usize,
) -> Result<Trace>
where
    F: Fn(&Vector) -> Result<Vector>,
    G: Fn(&Vector) -> Result<Vector>,
{
    let mut w = Vec::with_capacity(n + 1);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut residual_sq = Vec::with_capacity(n);
    w.push(w1.clone());
    for &lambda in &lambdas {
        let wk = w.last().expect("w is never empty");
        let x = first(wk)?;
        let y = second(&(&x * 2.0 - wk))?;
        let step = (&y - &x) * lambda;
        residual_sq.push(step.norm_squared());
        let next = wk + step;
        w.push(next);
        xs.push(x);
        ys.push(y);
    }
    debug_assert_eq!(xs.len(), n);
    Ok(Trace {
        w,
        x: xs,
        y: ys,
        u: None,
        residual_sq,
        gamma,
        lambdas,
    })
}

/// Relaxed Douglas-Rachford splitting for `0 ∈ Ax + Bx`:
/// `x = J_{γB}(w)`, `y = J_{γA}(2x − w)`, `w⁺ = w + λ(y − x)`.
pub fn drs_run(
    a: &OperatorOracle,
    b: &OperatorOracle,
    gamma: f64,
    relaxation: &Relaxation,
    w1: &Vector,
    n: usize,
) -> Result<Trace> {
    check_gamma(gamma)?;
    validate_run(w1, n)?;
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), w1.len())?;
    let lambdas = relaxation.resolve(n)?;
    splitting_loop(
        |w| b.resolvent(gamma, w),
        |v| a.resolvent(gamma, v),
        gamma,
        lambdas,
        w1,
        n,
    )
}

/// Douglas-Rachford splitting for `min f + g`; `f` is evaluated first.
pub fn drs_composite_run(
    f: &FunctionOracle,
    g: &FunctionOracle,
    gamma: f64,
    relaxation: &Relaxation,
    w1: &Vector,
    n: usize,
) -> Result<Trace> {
    check_gamma(gamma)?;
    validate_run(w1, n)?;
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), w1.len())?;
    let lambdas = relaxation.resolve(n)?;
    splitting_loop(
        |w| f.prox(gamma, w),
        |v| g.prox(gamma, v),
        gamma,
        lambdas,
        w1,
        n,
    )
}

/// Momentum coefficient `k/(k+3)` used at iterate `k ≥ 1`.
pub fn accelerated_momentum(k: usize) -> f64 {
    k as f64 / (k as f64 + 3.0)
}

/// Accelerated composite Douglas-Rachford with momentum `k/(k+3)`.
pub fn accelerated_drs_run(
    f: &FunctionOracle,
    g: &FunctionOracle,
    gamma: f64,
    lambda: f64,
    w1: &Vector,
    n: usize,
) -> Result<Trace> {
    accelerated_drs_run_with_momentum(f, g, gamma, lambda, w1, n, accelerated_momentum)
}

/// Accelerated run with a caller-supplied momentum sequence `k ↦ θ_k`.
///
/// `residual_sq[k-1]` holds `‖λ(y^k − x^k)‖²`, the fixed-point residual at the
/// extrapolated point `w^k`, which differs from `‖w^{k+1} − w^k‖²` here.
pub fn accelerated_drs_run_with_momentum<M>(
    f: &FunctionOracle,
    g: &FunctionOracle,
    gamma: f64,
    lambda: f64,
    w1: &Vector,
    n: usize,
    momentum: M,
) -> Result<Trace>
where
    M: Fn(usize) -> f64,
{
    check_gamma(gamma)?;
    validate_run(w1, n)?;
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), w1.len())?;
    let lambdas = Relaxation::Constant(lambda).resolve(n)?;
    let mut w = vec![w1.clone()];
    let mut u = vec![w1.clone()];
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut residual_sq = Vec::with_capacity(n);
    for k in 1..=n {
        let wk = &w[k - 1];
        let x = f.prox(gamma, wk)?;
        let y = g.prox(gamma, &(&x * 2.0 - wk))?;
        let step = (&y - &x) * lambda;
        residual_sq.push(step.norm_squared());
        let u_next = wk + step;
        let w_next = &u_next + (&u_next - &u[k - 1]) * momentum(k);
        u.push(u_next);
        w.push(w_next);
        xs.push(x);
        ys.push(y);
    }
    Ok(Trace {
        w,
        x: xs,
        y: ys,
        u: Some(u),
        residual_sq,
        gamma,
        lambdas,
    })
}

/// Averaged iteration `w⁺ = ½w + ½Sw` for a nonexpansive map `S`.
///
/// Recorded as a splitting trace with `x^k = ½w^k`, `y^k = ½Sw^k` and unit
/// relaxation, so `residual_sq[k-1] = ‖½Sw^k − ½w^k‖²`.
pub fn km_run<S>(s: S, w1: &Vector, n: usize) -> Result<Trace>
where
    S: Fn(&Vector) -> Vector,
{
    validate_run(w1, n)?;
    let mut w = vec![w1.clone()];
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut residual_sq = Vec::with_capacity(n);
    for k in 0..n {
        let sw = s(&w[k]);
        check_dim(w1.len(), sw.len())?;
        let x = &w[k] * 0.5;
        let y = sw * 0.5;
        let step = &y - &x;
        residual_sq.push(step.norm_squared());
        w.push(&w[k] + step);
        xs.push(x);
        ys.push(y);
    }
    Ok(Trace {
        w,
        x: xs,
        y: ys,
        u: None,
        residual_sq,
        gamma: 1.0,
        lambdas: vec![1.0; n],
    })
}

/// Gradient-descent record: `x⁰..x^N` with gradients and values at each.
#[derive(Clone, Debug, PartialEq)]
pub struct GdTrace {
    pub x: Vec<Vector>,
    pub gradients: Vec<Vector>,
    pub values: Vec<f64>,
    pub steps: Vec<f64>,
}

impl GdTrace {
    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("gd trace holds x⁰")
    }
}

/// `x^{i+1} = x^i − h_i ∇F(x^i)` for every step in `steps` (already scaled
/// by `1/L`).
pub fn gd_run(f: &FunctionOracle, steps: &[f64], x0: &Vector) -> Result<GdTrace> {
    check_dim(f.dim(), x0.len())?;
    if !f.is_smooth() {
        return Err(SplitError::Unsupported(
            "gradient descent needs a smooth function".into(),
        ));
    }
    let mut x = vec![x0.clone()];
    let mut gradients = vec![f.gradient(x0)?];
    let mut values = vec![f.value(x0)?];
    for (i, h) in steps.iter().enumerate() {
        let next = &x[i] - &gradients[i] * *h;
        gradients.push(f.gradient(&next)?);
        values.push(f.value(&next)?);
        x.push(next);
    }
    Ok(GdTrace {
        x,
        gradients,
        values,
        steps: steps.to_vec(),
    })
}

/// Palindromic silver stepsize schedule `π_k` of length `2^k − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepsizeSchedule {
    pub values: Vec<f64>,
    pub k_level: u32,
}

impl StepsizeSchedule {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The schedule divided by a smoothness constant.
    pub fn scaled(&self, smoothness: f64) -> Vec<f64> {
        self.values.iter().map(|h| h / smoothness).collect()
    }

    /// Relaxation sequence `(π_k, 1)` of length `2^k`.
    pub fn with_unit_tail(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.push(1.0);
        v
    }
}

pub const MAX_SILVER_LEVEL: u32 = 20;

/// `π_1 = [√2]`, `π_{j+1} = [π_j, 1 + ρ^{j−1}, π_j]`.
pub fn silver_schedule(k: u32) -> Result<StepsizeSchedule> {
    if k == 0 || k > MAX_SILVER_LEVEL {
        return Err(SplitError::InvalidParameter(format!(
            "silver schedule level must be in 1..={MAX_SILVER_LEVEL}, got {k}"
        )));
    }
    let mut values = vec![std::f64::consts::SQRT_2];
    for j in 1..k {
        let middle = 1.0 + SILVER_RATIO.powi(j as i32 - 1);
        let mut next = Vec::with_capacity(2 * values.len() + 1);
        next.extend_from_slice(&values);
        next.push(middle);
        next.extend_from_slice(&values);
        values = next;
    }
    Ok(StepsizeSchedule { values, k_level: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn two_subspace_pair() -> (OperatorOracle, OperatorOracle) {
        (
            OperatorOracle::normal_cone_of_line(dvector![1.0, 1.0]).unwrap(),
            OperatorOracle::normal_cone_of_line(dvector![1.0, 0.0]).unwrap(),
        )
    }

    #[test]
    fn two_subspace_two_iterations() {
        let (a, b) = two_subspace_pair();
        let t = drs_run(&a, &b, 1.0, &1.0.into(), &dvector![1.0, 0.0], 2).unwrap();
        assert_eq!(t.w[1], dvector![0.5, 0.5]);
        assert_eq!(t.w[2], dvector![0.0, 0.5]);
        assert_eq!(t.fixed_point_residual(2).unwrap(), 0.25);
        assert!(matches!(
            t.fixed_point_residual(3),
            Err(SplitError::IndexOutOfRange { .. })
        ));
        assert!(t.fixed_point_residual(0).is_err());
    }

    #[test]
    fn zero_operators_stationary() {
        let z = OperatorOracle::zero(2);
        let w1 = dvector![0.3, -1.1];
        let t = drs_run(&z, &z, 0.7, &1.4.into(), &w1, 5).unwrap();
        assert!(t.w.iter().all(|w| *w == w1));
        assert!(t.residual_sq.iter().all(|r| *r == 0.0));
        assert_eq!(t.fixed_point_residual(3).unwrap(), 0.0);
    }

    #[test]
    fn skew_three_iterations() {
        // A(x) = (−x₂, x₁)/√2 (the N = 3 skew construction); residual 4/27.
        let s = 1.0 / 2f64.sqrt();
        let a = OperatorOracle::linear(nalgebra::dmatrix![0.0, -s; s, 0.0]).unwrap();
        let b = OperatorOracle::zero(2);
        let t = drs_run(&a, &b, 1.0, &1.0.into(), &dvector![1.0, 0.0], 3).unwrap();
        assert!((t.fixed_point_residual(3).unwrap() - 4.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_errors() {
        let z = OperatorOracle::zero(1);
        let short = Relaxation::Schedule(vec![1.0, 1.0]);
        assert!(drs_run(&z, &z, 1.0, &short, &dvector![1.0], 3).is_err());
        assert!(drs_run(&z, &z, 1.0, &1.0.into(), &dvector![1.0], 0).is_err());
        assert!(drs_run(&z, &z, 0.0, &1.0.into(), &dvector![1.0], 1).is_err());
        let sched = Relaxation::Schedule(vec![0.5, 1.5, 9.0]);
        assert_eq!(sched.resolve(2).unwrap(), vec![0.5, 1.5]);
    }

    #[test]
    fn composite_examples() {
        let f = FunctionOracle::half_squared_norm(1);
        let zero = FunctionOracle::zero(1);
        let t = drs_composite_run(&f, &zero, 1.0, &1.0.into(), &dvector![1.0], 1).unwrap();
        assert_eq!(t.x[0], dvector![0.5]);
        assert_eq!(t.y[0], dvector![0.0]);
        assert_eq!(t.w[1], dvector![0.5]);

        let t = drs_composite_run(&zero, &zero, 1.0, &1.0.into(), &dvector![2.0], 4).unwrap();
        assert!(t.w.iter().all(|w| *w == dvector![2.0]));

        let l1 = FunctionOracle::l1(1, 1.0).unwrap();
        let t = drs_composite_run(&f, &l1, 1.0, &1.0.into(), &dvector![0.0], 4).unwrap();
        assert!(t.w.iter().all(|w| *w == dvector![0.0]));
    }

    #[test]
    fn accelerated_examples() {
        let f = FunctionOracle::half_squared_norm(1);
        let zero = FunctionOracle::zero(1);
        let t = accelerated_drs_run(&f, &zero, 1.0, 1.0, &dvector![1.0], 1).unwrap();
        let u = t.u.as_ref().unwrap();
        assert_eq!(u[1], dvector![0.5]);
        assert_eq!(t.w[1], dvector![0.375]);

        let plain = drs_composite_run(&f, &zero, 0.8, &0.9.into(), &dvector![1.3], 6).unwrap();
        let frozen =
            accelerated_drs_run_with_momentum(&f, &zero, 0.8, 0.9, &dvector![1.3], 6, |_| 0.0)
                .unwrap();
        assert_eq!(plain.w, frozen.w);
        assert_eq!(plain.x, frozen.x);
        assert_eq!(plain.y, frozen.y);
        assert_eq!(plain.residual_sq, frozen.residual_sq);

        let l1 = FunctionOracle::l1(1, 1.0).unwrap();
        let fixed = accelerated_drs_run(&f, &l1, 1.0, 1.0, &dvector![0.0], 5).unwrap();
        assert!(fixed
            .w
            .iter()
            .chain(fixed.u.as_ref().unwrap())
            .all(|w| *w == dvector![0.0]));
        assert_eq!(accelerated_momentum(1), 0.25);
    }

    #[test]
    fn km_examples() {
        let v = dvector![1.0, -2.0];
        let t = km_run(|w: &Vector| w.clone(), &v, 4).unwrap();
        assert!(t.w.iter().all(|w| *w == v));
        let t = km_run(|w: &Vector| -w, &v, 3).unwrap();
        assert_eq!(t.w[1], dvector![0.0, 0.0]);
        assert_eq!(t.w[3], dvector![0.0, 0.0]);
        assert_eq!(t.residual_sq[0], 5.0);
        assert_eq!(t.residual_sq[1], 0.0);
    }

    #[test]
    fn km_matches_drs_for_peaceman_rachford_map() {
        let (a, b) = two_subspace_pair();
        let pr = |w: &Vector| {
            let rb = b.reflected_resolvent(1.0, w).unwrap();
            a.reflected_resolvent(1.0, &rb).unwrap()
        };
        let w1 = dvector![0.6, -0.8];
        let km = km_run(pr, &w1, 6).unwrap();
        let drs = drs_run(&a, &b, 1.0, &1.0.into(), &w1, 6).unwrap();
        for (p, q) in km.residual_sq.iter().zip(&drs.residual_sq) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn gd_examples() {
        let f = FunctionOracle::half_squared_norm(1);
        let t = gd_run(&f, &[2f64.sqrt()], &dvector![1.0]).unwrap();
        assert_eq!(t.x[1], dvector![1.0 - 2f64.sqrt()]);
        let t = gd_run(&f, &[1.0], &dvector![1.0]).unwrap();
        assert_eq!(t.x[1], dvector![0.0]);
        let hub = FunctionOracle::huber(1, 1.0).unwrap();
        let t = gd_run(&hub, &[1.0], &dvector![0.5]).unwrap();
        assert_eq!(t.x[1], dvector![0.0]);
        assert_eq!(t.last_value(), 0.0);
        let l1 = FunctionOracle::l1(1, 1.0).unwrap();
        assert!(matches!(
            gd_run(&l1, &[1.0], &dvector![1.0]),
            Err(SplitError::Unsupported(_))
        ));
    }

    #[test]
    fn silver_small_levels() {
        let r2 = 2f64.sqrt();
        assert_eq!(silver_schedule(1).unwrap().values, vec![r2]);
        assert_eq!(silver_schedule(2).unwrap().values, vec![r2, 2.0, r2]);
        let s3 = silver_schedule(3).unwrap();
        assert_eq!(s3.values, vec![r2, 2.0, r2, 2.0 + r2, r2, 2.0, r2]);
        assert!((s3.values.iter().sum::<f64>() - (SILVER_RATIO.powi(3) - 1.0)).abs() < 1e-12);
        assert!(silver_schedule(0).is_err());
        assert!(silver_schedule(21).is_err());
        assert_eq!(s3.with_unit_tail().len(), 8);
    }
}
