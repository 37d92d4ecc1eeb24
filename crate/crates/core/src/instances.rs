//! Problem instances with known solutions or fixed points.
//!
//! The worst-case constructions (two lines in the plane, the skew rotation,
//! the Huber family) are exact. The randomized families are seeded and
//! reproducible; when no closed form exists the reference solution comes
//! from a long Douglas-Rachford run and is flagged as an oracle solution.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, Dyn};
use rand::Rng;

use crate::algorithms::{drs_composite_run, drs_run, Relaxation, Trace};
use crate::operators::{dr_operator_apply, FunctionKind, FunctionOracle, OperatorOracle};
use crate::rng::{cell_rng, normal_vector, orthogonal_matrix, skew_matrix};
use crate::{check_dim, Matrix, Result, SplitError, Vector};

/// Fixed-point residual at which the reference solver stops.
pub const ORACLE_RESIDUAL: f64 = 1e-13;
/// Iteration cap of the reference solver.
pub const ORACLE_MAX_ITERS: usize = 5_000_000;
/// Tolerance on `‖Tw⋆ − w⋆‖` for stored fixed points.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Tolerance on the stationarity residual of stored solutions.
pub const STATIONARITY_TOL: f64 = 1e-8;

/// A nonexpansive linear map `w ↦ Mw`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub matrix: Matrix,
    /// Contraction factor `c` in `M = c·U` with `U` orthogonal.
    pub factor: f64,
}

impl LinearMap {
    pub fn apply(&self, w: &Vector) -> Vector {
        &self.matrix * w
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    /// `0 ∈ Ax + Bx`; Douglas-Rachford evaluates `B` first.
    Monotone {
        a: OperatorOracle,
        b: OperatorOracle,
    },
    /// `min f + g`; `f` is evaluated first.
    Composite {
        f: FunctionOracle,
        g: FunctionOracle,
    },
    /// `min F` for gradient descent.
    Smooth { f: FunctionOracle },
    /// Fixed point of a nonexpansive map.
    Map(LinearMap),
}

/// Set of fixed points `W⋆` of the Douglas-Rachford operator.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedPointSet {
    Point(Vector),
    /// Subspace spanned by orthonormal columns.
    Subspace(Matrix),
    Unknown,
}

impl FixedPointSet {
    /// `dist_{W⋆}(w)`, or `None` when `W⋆` is unknown.
    pub fn distance(&self, w: &Vector) -> Option<f64> {
        match self {
            FixedPointSet::Point(p) => Some((w - p).norm()),
            FixedPointSet::Subspace(basis) => {
                let proj = basis * (basis.transpose() * w);
                Some((w - proj).norm())
            }
            FixedPointSet::Unknown => None,
        }
    }

    /// A nearest fixed point to `w`.
    pub fn nearest(&self, w: &Vector) -> Option<Vector> {
        match self {
            FixedPointSet::Point(p) => Some(p.clone()),
            FixedPointSet::Subspace(basis) => Some(basis * (basis.transpose() * w)),
            FixedPointSet::Unknown => None,
        }
    }
}

/// How the fixed point for a given stepsize is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedPoints {
    /// Same set for every stepsize.
    GammaFree(FixedPointSet),
    /// `w⋆ = x⋆ + γ∇f(x⋆)` from the stored solution and smooth `f`.
    FromSmoothSolution,
    Unknown,
}

/// Declared structural constants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constants {
    pub beta: Option<f64>,
    pub smoothness: Option<f64>,
    pub mu_f: Option<f64>,
    pub mu_strong: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: String,
    /// Human-readable parameters, e.g. `N=5` or `dim=3,seed=7`.
    pub descriptor: String,
    pub problem: Problem,
    pub known_solution: Option<Vector>,
    pub fixed_points: FixedPoints,
    pub constants: Constants,
    /// True when the reference solution comes from a long numerical run.
    pub oracle_solution: bool,
}

impl Instance {
    pub fn dim(&self) -> usize {
        match &self.problem {
            Problem::Monotone { a, .. } => a.dim(),
            Problem::Composite { f, .. } | Problem::Smooth { f } => f.dim(),
            Problem::Map(m) => m.dim(),
        }
    }

    /// Operators `(A, B)`; composite problems give `(∂g, ∂f)`.
    pub fn operators(&self) -> Result<(OperatorOracle, OperatorOracle)> {
        match &self.problem {
            Problem::Monotone { a, b } => Ok((a.clone(), b.clone())),
            Problem::Composite { f, g } => Ok((
                OperatorOracle::subdifferential(g.clone()),
                OperatorOracle::subdifferential(f.clone()),
            )),
            _ => Err(SplitError::Unsupported(format!(
                "instance {} is not a splitting problem",
                self.id
            ))),
        }
    }

    /// `W⋆` for stepsize `gamma`.
    pub fn fixed_point_set(&self, gamma: f64) -> Result<FixedPointSet> {
        match &self.fixed_points {
            FixedPoints::GammaFree(set) => Ok(set.clone()),
            FixedPoints::FromSmoothSolution => {
                let (f, g) = self.composite_parts()?;
                let x_star = self
                    .known_solution
                    .as_ref()
                    .ok_or_else(|| SplitError::MissingReference(self.id.clone()))?;
                Ok(FixedPointSet::Point(composite_fixed_point(
                    f, g, x_star, gamma,
                )?))
            }
            FixedPoints::Unknown => Ok(FixedPointSet::Unknown),
        }
    }

    /// A fixed point for `gamma` (nearest to the origin for subspaces).
    pub fn fixed_point(&self, gamma: f64) -> Result<Vector> {
        let set = self.fixed_point_set(gamma)?;
        set.nearest(&Vector::zeros(self.dim())).ok_or_else(|| {
            SplitError::MissingReference(format!("{}: fixed point unknown", self.id))
        })
    }

    pub fn composite_parts(&self) -> Result<(&FunctionOracle, &FunctionOracle)> {
        match &self.problem {
            Problem::Composite { f, g } => Ok((f, g)),
            _ => Err(SplitError::Unsupported(format!(
                "instance {} is not a composite problem",
                self.id
            ))),
        }
    }

    /// `f(x) + g(x)` for composite problems, `F(x)` for smooth ones.
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        match &self.problem {
            Problem::Composite { f, g } => Ok(f.value(x)? + g.value(x)?),
            Problem::Smooth { f } => f.value(x),
            _ => Err(SplitError::Unsupported(format!(
                "instance {} has no objective",
                self.id
            ))),
        }
    }

    pub fn optimal_value(&self) -> Result<f64> {
        let x = self
            .known_solution
            .as_ref()
            .ok_or_else(|| SplitError::MissingReference(self.id.clone()))?;
        self.objective(x)
    }

    /// Douglas-Rachford run on this instance (composite form uses prox).
    pub fn run_drs(
        &self,
        gamma: f64,
        relaxation: &Relaxation,
        w1: &Vector,
        n: usize,
    ) -> Result<Trace> {
        match &self.problem {
            Problem::Monotone { a, b } => drs_run(a, b, gamma, relaxation, w1, n),
            Problem::Composite { f, g } => drs_composite_run(f, g, gamma, relaxation, w1, n),
            _ => Err(SplitError::Unsupported(format!(
                "instance {} does not support Douglas-Rachford",
                self.id
            ))),
        }
    }

    /// Stationarity residual of the stored solution at stepsize `gamma`.
    ///
    /// With `x = J_{γB}(w⋆)` and `y = J_{γA}(2x − w⋆)`, the vectors
    /// `(w⋆ − x)/γ ∈ Bx` and `(2x − w⋆ − y)/γ ∈ Ay` are subgradients; the
    /// residual combines `‖x − x⋆‖`, `‖y − x⋆‖` and the norm of their sum.
    pub fn stationarity_residual(&self, gamma: f64) -> Result<f64> {
        let x_star = self
            .known_solution
            .as_ref()
            .ok_or_else(|| SplitError::MissingReference(self.id.clone()))?;
        match &self.problem {
            Problem::Smooth { f } => Ok(f.gradient(x_star)?.norm()),
            Problem::Map(m) => Ok((m.apply(x_star) - x_star).norm()),
            _ => {
                let (a, b) = self.operators()?;
                let w_star = self.fixed_point(gamma)?;
                let step = dr_operator_apply(&a, &b, gamma, 1.0, &w_star)?;
                let u = (&w_star - &step.x) / gamma;
                let v = (&step.x * 2.0 - &w_star - &step.y) / gamma;
                Ok((&step.x - x_star).norm() + (&step.y - x_star).norm() + (u + v).norm())
            }
        }
    }
}

/// Two lines in the plane, `P = {(x, 0)}` and `Q = {(x, x/√(N−1))}`, with
/// `B = N_P` and `A = N_Q`. The unit-relaxation Douglas-Rachford operator is
/// `√((N−1)/N)` times the rotation by `arcsin(1/√N)`.
pub fn two_subspace_feasibility(n: usize) -> Result<Instance> {
    if n < 2 {
        return Err(SplitError::InvalidParameter(format!(
            "two-subspace construction needs N >= 2, got {n}"
        )));
    }
    let slope = 1.0 / ((n - 1) as f64).sqrt();
    let p = Vector::from_vec(vec![1.0, 0.0]);
    let q = Vector::from_vec(vec![1.0, slope]);
    Ok(Instance {
        id: "two-subspace".into(),
        descriptor: format!("N={n}"),
        problem: Problem::Monotone {
            a: OperatorOracle::normal_cone_of_line(q)?,
            b: OperatorOracle::normal_cone_of_line(p)?,
        },
        known_solution: Some(Vector::zeros(2)),
        fixed_points: FixedPoints::GammaFree(FixedPointSet::Point(Vector::zeros(2))),
        constants: Constants::default(),
        oracle_solution: false,
    })
}

/// `B = 0` and `A(x) = (x₂, −x₁)/√(N−1)`: same unit-relaxation operator as
/// the two-subspace construction at `γ = 1`, with a cocoercive `B`.
///
/// With `B = 0` the operator is `(I + A)⁻¹`, so the rotation sense of `A`
/// must be clockwise for the two matrices to agree entrywise.
pub fn skew_rotation(n: usize) -> Result<Instance> {
    if n < 2 {
        return Err(SplitError::InvalidParameter(format!(
            "skew construction needs N >= 2, got {n}"
        )));
    }
    let s = 1.0 / ((n - 1) as f64).sqrt();
    let m = Matrix::from_row_slice(2, 2, &[0.0, s, -s, 0.0]);
    Ok(Instance {
        id: "skew".into(),
        descriptor: format!("N={n}"),
        problem: Problem::Monotone {
            a: OperatorOracle::linear(m)?,
            b: OperatorOracle::zero(2),
        },
        known_solution: Some(Vector::zeros(2)),
        fixed_points: FixedPoints::GammaFree(FixedPointSet::Point(Vector::zeros(2))),
        constants: Constants::default(),
        oracle_solution: false,
    })
}

/// `w⋆ = x⋆ + γ∇f(x⋆)`, verified to be a fixed point at unit relaxation.
pub fn composite_fixed_point(
    f: &FunctionOracle,
    g: &FunctionOracle,
    x_star: &Vector,
    gamma: f64,
) -> Result<Vector> {
    check_dim(f.dim(), x_star.len())?;
    let w_star = x_star + f.gradient(x_star)? * gamma;
    let x = f.prox(gamma, &w_star)?;
    let y = g.prox(gamma, &(&x * 2.0 - &w_star))?;
    let residual = (&y - &x).norm();
    if residual > FIXED_POINT_TOL * (1.0 + w_star.norm()) {
        return Err(SplitError::Verification(format!(
            "candidate fixed point has residual {residual:e}; x⋆ is not optimal"
        )));
    }
    Ok(w_star)
}

/// One-dimensional 1-smooth Huber function with threshold `delta`.
pub fn huber_1d(delta: f64) -> Result<FunctionOracle> {
    FunctionOracle::huber(1, delta)
}

/// Gradient-descent instance `min huber_δ(x)`, minimizer 0.
pub fn huber_instance(delta: f64) -> Result<Instance> {
    Ok(Instance {
        id: "huber".into(),
        descriptor: format!("delta={delta}"),
        problem: Problem::Smooth {
            f: huber_1d(delta)?,
        },
        known_solution: Some(Vector::zeros(1)),
        fixed_points: FixedPoints::Unknown,
        constants: Constants {
            smoothness: Some(1.0),
            ..Constants::default()
        },
        oracle_solution: false,
    })
}

/// Nonsmooth term of [`random_quadratic_composite`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GKind {
    Zero,
    L1,
    Box,
}

impl std::str::FromStr for GKind {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(GKind::Zero),
            "l1" => Ok(GKind::L1),
            "box" => Ok(GKind::Box),
            other => Err(SplitError::Usage(format!(
                "unknown g kind `{other}` (zero, l1, box)"
            ))),
        }
    }
}

/// Smallest eigenvalue of the random quadratic, as a fraction of `L`.
pub const RAND_QUAD_MIN_CURVATURE: f64 = 1e-2;

/// Random quadratic `f = ½xᵀQx + bᵀx` with spectrum in `[L·10⁻², L]` (top
/// eigenvalue exactly `L`) plus `g ∈ {0, w‖·‖₁, box indicator}`.
pub fn random_quadratic_composite(
    dim: usize,
    l: f64,
    g_kind: GKind,
    seed: u64,
) -> Result<Instance> {
    if dim == 0 || l.is_nan() || l <= 0.0 {
        return Err(SplitError::InvalidParameter(format!(
            "random quadratic needs dim >= 1 and L > 0 (dim={dim}, L={l})"
        )));
    }
    let mut rng = cell_rng(seed, 0);
    let q = random_spd(&mut rng, dim, l);
    let descriptor = format!("dim={dim},L={l},g={g_kind:?},seed={seed}").to_lowercase();
    let (f, g, x_star, oracle) = match g_kind {
        GKind::Zero => {
            let target = scaled_normal(&mut rng, dim, 3.0);
            let b = -(&q * target);
            let x_star = q
                .clone()
                .cholesky()
                .ok_or(SplitError::Singular("random quadratic"))?
                .solve(&(-&b));
            let f = FunctionOracle::quadratic(q, b)?;
            (f, FunctionOracle::zero(dim), x_star, false)
        }
        GKind::L1 | GKind::Box => {
            let b = scaled_normal(&mut rng, dim, 2.0) * l;
            let g = if g_kind == GKind::L1 {
                FunctionOracle::l1(dim, rng.gen_range(0.1..1.0) * l)?
            } else {
                let lower = Vector::from_fn(dim, |_, _| -rng.gen_range(0.1..1.0));
                let upper = Vector::from_fn(dim, |_, _| rng.gen_range(0.1..1.0));
                FunctionOracle::indicator_of_box(lower, upper)?
            };
            let f = FunctionOracle::quadratic(q, b)?;
            let x_star = reference_composite_solution(&f, &g, 1.0 / l)?;
            (f, g, x_star, true)
        }
    };
    let instance = Instance {
        id: "rand-quad".into(),
        descriptor,
        constants: Constants {
            smoothness: Some(l),
            beta: Some(1.0 / l),
            mu_strong: f.strong_convexity(),
            ..Constants::default()
        },
        problem: Problem::Composite { f, g },
        known_solution: Some(x_star),
        fixed_points: FixedPoints::FromSmoothSolution,
        oracle_solution: oracle,
    };
    let res = instance.stationarity_residual(1.0 / l)?;
    if res > STATIONARITY_TOL {
        return Err(SplitError::Verification(format!(
            "reference solution stationarity residual {res:e}"
        )));
    }
    Ok(instance)
}

fn scaled_normal<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    let v = normal_vector(rng, dim);
    let n = v.norm();
    if n == 0.0 {
        v
    } else {
        v * (radius * rng.gen_range(0.2..1.0) / n)
    }
}

/// `Uᵀ diag(d) U` with `d` log-uniform in `[L·10⁻², L]` and `max d = L`.
fn random_spd<R: Rng>(rng: &mut R, dim: usize, l: f64) -> Matrix {
    let u = orthogonal_matrix(rng, dim);
    let lo = RAND_QUAD_MIN_CURVATURE.ln();
    let d = Vector::from_fn(dim, |i, _| {
        if i == 0 {
            l
        } else {
            l * rng.gen_range(lo..0.0).exp()
        }
    });
    let q = u.transpose() * Matrix::from_diagonal(&d) * u;
    (&q + q.transpose()) * 0.5
}

/// Quadratic composite with a planted minimizer.
///
/// `Q` has spectrum in `[0, L]` (top eigenvalue exactly `L`, zero allowed),
/// `x⋆` and a subgradient `s ∈ ∂g(x⋆)` are drawn first, and `b = −Qx⋆ − s`
/// makes `x⋆` optimal without a numerical solve. Coordinates are pinned to
/// the kinks of `g` (zero for ℓ₁, the bounds for the box) with probability
/// about one half.
pub fn planted_quadratic_composite(
    dim: usize,
    l: f64,
    g_kind: GKind,
    seed: u64,
) -> Result<Instance> {
    if dim == 0 || l.is_nan() || l <= 0.0 {
        return Err(SplitError::InvalidParameter(format!(
            "planted quadratic needs dim >= 1 and L > 0 (dim={dim}, L={l})"
        )));
    }
    let mut rng = cell_rng(seed, 0);
    let u = orthogonal_matrix(&mut rng, dim);
    let d = Vector::from_fn(dim, |i, _| match (i, rng.gen_range(0..4)) {
        (0, _) => l,
        (_, 0) => 0.0,
        (_, 1) => l,
        _ => l * rng.gen_range(0.0..1.0),
    });
    let q = u.transpose() * Matrix::from_diagonal(&d) * u;
    let q = (&q + q.transpose()) * 0.5;
    let mut x_star = scaled_normal(&mut rng, dim, 2.0);
    let mut sub = Vector::zeros(dim);
    let g = match g_kind {
        GKind::Zero => FunctionOracle::zero(dim),
        GKind::L1 => {
            let weight = rng.gen_range(0.1..1.0) * l;
            for i in 0..dim {
                if rng.gen_bool(0.5) {
                    x_star[i] = 0.0;
                    sub[i] = weight * rng.gen_range(-1.0..=1.0);
                } else {
                    sub[i] = weight * x_star[i].signum();
                }
            }
            FunctionOracle::l1(dim, weight)?
        }
        GKind::Box => {
            let lower = Vector::from_fn(dim, |_, _| -rng.gen_range(0.1..1.0));
            let upper = Vector::from_fn(dim, |_, _| rng.gen_range(0.1..1.0));
            for i in 0..dim {
                let t: f64 = rng.gen_range(0.0..1.0);
                if t < 0.25 {
                    x_star[i] = lower[i];
                    sub[i] = -rng.gen_range(0.0..1.0) * l;
                } else if t < 0.5 {
                    x_star[i] = upper[i];
                    sub[i] = rng.gen_range(0.0..1.0) * l;
                } else {
                    x_star[i] = lower[i] + (upper[i] - lower[i]) * rng.gen_range(0.0..1.0);
                }
            }
            FunctionOracle::indicator_of_box(lower, upper)?
        }
    };
    let b = -(&q * &x_star) - sub;
    let f = FunctionOracle::quadratic(q, b)?;
    let instance = Instance {
        id: "planted-quad".into(),
        descriptor: format!("dim={dim},L={l},g={g_kind:?},seed={seed}").to_lowercase(),
        constants: Constants {
            smoothness: Some(l),
            beta: Some(1.0 / l),
            ..Constants::default()
        },
        problem: Problem::Composite { f, g },
        known_solution: Some(x_star),
        fixed_points: FixedPoints::FromSmoothSolution,
        oracle_solution: false,
    };
    instance.fixed_point(1.0 / l)?;
    Ok(instance)
}

/// Long-run unit-relaxation Douglas-Rachford with stepsize `gamma` until the
/// fixed-point residual drops to [`ORACLE_RESIDUAL`]; returns `prox_{γf}(w⋆)`.
///
/// Quadratic `f` is factorized once; other kinds go through the generic prox.
pub fn reference_composite_solution(
    f: &FunctionOracle,
    g: &FunctionOracle,
    gamma: f64,
) -> Result<Vector> {
    let dim = f.dim();
    let factored: Option<(Cholesky<f64, Dyn>, Vector)> = match f.kind() {
        FunctionKind::Quadratic { q, b } => {
            let chol = (Matrix::identity(dim, dim) + q * gamma)
                .cholesky()
                .ok_or(SplitError::Singular("reference solve"))?;
            Some((chol, b * gamma))
        }
        _ => None,
    };
    let prox_f = |w: &Vector| -> Result<Vector> {
        match &factored {
            Some((chol, gb)) => Ok(chol.solve(&(w - gb))),
            None => f.prox(gamma, w),
        }
    };
    let mut w = Vector::zeros(dim);
    for _ in 0..ORACLE_MAX_ITERS {
        let x = prox_f(&w)?;
        let y = g.prox(gamma, &(&x * 2.0 - &w))?;
        let step = y - &x;
        if step.norm() <= ORACLE_RESIDUAL {
            return Ok(x);
        }
        w += step;
    }
    Err(SplitError::NotConverged(format!(
        "no residual <= {ORACLE_RESIDUAL:e} after {ORACLE_MAX_ITERS} iterations"
    )))
}

/// `A = μI + K` (random skew `K`) and `B = (I + S)/(2β)` with `S` symmetric,
/// spectrum in `[−1, 1]` and top eigenvalue exactly 1, so `B` is exactly
/// `β`-cocoercive. The solution is `x⋆ = 0` and `W⋆ = {0}`.
pub fn strongly_monotone_linear(dim: usize, mu: f64, beta: f64, seed: u64) -> Result<Instance> {
    strongly_monotone_linear_with_skew(dim, mu, beta, 1.0, seed)
}

/// As [`strongly_monotone_linear`] with the skew part scaled by `skew_scale`.
pub fn strongly_monotone_linear_with_skew(
    dim: usize,
    mu: f64,
    beta: f64,
    skew_scale: f64,
    seed: u64,
) -> Result<Instance> {
    if dim == 0 || mu.is_nan() || mu <= 0.0 || beta.is_nan() || beta <= 0.0 {
        return Err(SplitError::InvalidParameter(format!(
            "sm-linear needs dim >= 1, mu > 0, beta > 0 (dim={dim}, mu={mu}, beta={beta})"
        )));
    }
    let mut rng = cell_rng(seed, 0);
    let k = skew_matrix(&mut rng, dim) * skew_scale;
    let a = Matrix::identity(dim, dim) * mu + k;
    let v = orthogonal_matrix(&mut rng, dim);
    let s = Vector::from_fn(dim, |i, _| {
        if i == 0 {
            1.0
        } else {
            rng.gen_range(-1.0..1.0)
        }
    });
    let sym = v.transpose() * Matrix::from_diagonal(&s) * &v;
    let b = (Matrix::identity(dim, dim) + (&sym + sym.transpose()) * 0.5) / (2.0 * beta);
    Ok(Instance {
        id: "sm-linear".into(),
        descriptor: format!("dim={dim},mu={mu},beta={beta},seed={seed}"),
        problem: Problem::Monotone {
            a: OperatorOracle::linear(a)?.with_strong_monotonicity(mu),
            b: OperatorOracle::linear(b)?.with_cocoercivity(beta),
        },
        known_solution: Some(Vector::zeros(dim)),
        fixed_points: FixedPoints::GammaFree(FixedPointSet::Point(Vector::zeros(dim))),
        constants: Constants {
            beta: Some(beta),
            mu_f: Some(mu),
            mu_strong: Some(mu),
            ..Constants::default()
        },
        oracle_solution: false,
    })
}

/// `c·U` with `c ∈ [0.9, 1]` and `U` a random rotation; fixed point 0.
pub fn random_nonexpansive_map(dim: usize, seed: u64) -> Result<LinearMap> {
    if dim == 0 {
        return Err(SplitError::InvalidParameter(
            "dimension must be positive".into(),
        ));
    }
    let mut rng = cell_rng(seed, 0);
    let factor = rng.gen_range(0.9..=1.0);
    let mut u = orthogonal_matrix(&mut rng, dim);
    if u.determinant() < 0.0 {
        u.column_mut(0).neg_mut();
    }
    Ok(LinearMap {
        matrix: u * factor,
        factor,
    })
}

pub fn random_nonexpansive_instance(dim: usize, seed: u64) -> Result<Instance> {
    let map = random_nonexpansive_map(dim, seed)?;
    Ok(Instance {
        id: "rand-nonexp".into(),
        descriptor: format!("dim={dim},seed={seed}"),
        problem: Problem::Map(map),
        known_solution: Some(Vector::zeros(dim)),
        fixed_points: FixedPoints::GammaFree(FixedPointSet::Point(Vector::zeros(dim))),
        constants: Constants::default(),
        oracle_solution: false,
    })
}

/// Stable instance identifiers.
pub const INSTANCE_IDS: [&str; 6] = [
    "two-subspace",
    "skew",
    "huber",
    "rand-quad",
    "sm-linear",
    "rand-nonexp",
];

/// Builds an instance by id from `key=value` parameters.
pub fn build_instance(id: &str, params: &BTreeMap<String, String>) -> Result<Instance> {
    let get = |key: &str| params.get(key).map(String::as_str);
    let parse_f = |key: &str, default: f64| -> Result<f64> {
        get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| {
                SplitError::Usage(format!("instance parameter `{key}`: `{v}` is not a number"))
            })
        })
    };
    let parse_u = |key: &str, default: u64| -> Result<u64> {
        get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| {
                SplitError::Usage(format!(
                    "instance parameter `{key}`: `{v}` is not an integer"
                ))
            })
        })
    };
    let known: &[&str] = match id {
        "two-subspace" | "skew" => &["N"],
        "huber" => &["delta"],
        "rand-quad" => &["dim", "L", "g", "seed"],
        "sm-linear" => &["dim", "mu", "beta", "seed"],
        "rand-nonexp" => &["dim", "seed"],
        other => {
            return Err(SplitError::Usage(format!(
                "unknown instance `{other}` (expected one of {})",
                INSTANCE_IDS.join(", ")
            )))
        }
    };
    if let Some(bad) = params.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(SplitError::Usage(format!(
            "instance `{id}` does not take parameter `{bad}` (accepts {})",
            known.join(", ")
        )));
    }
    match id {
        "two-subspace" => two_subspace_feasibility(parse_u("N", 2)? as usize),
        "skew" => skew_rotation(parse_u("N", 2)? as usize),
        "huber" => huber_instance(parse_f("delta", 1.0)?),
        "rand-quad" => random_quadratic_composite(
            parse_u("dim", 2)? as usize,
            parse_f("L", 1.0)?,
            get("g").unwrap_or("zero").parse()?,
            parse_u("seed", 0)?,
        ),
        "sm-linear" => strongly_monotone_linear(
            parse_u("dim", 2)? as usize,
            parse_f("mu", 1.0)?,
            parse_f("beta", 1.0)?,
            parse_u("seed", 0)?,
        ),
        _ => random_nonexpansive_instance(parse_u("dim", 2)? as usize, parse_u("seed", 0)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::dr_operator_matrix;
    use crate::rng::normal_vector;
    use nalgebra::dvector;

    fn scaled_rotation(n: usize) -> Matrix {
        let nf = n as f64;
        let theta = (1.0 / nf.sqrt()).asin();
        let c = ((nf - 1.0) / nf).sqrt();
        Matrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]) * c
    }

    #[test]
    fn two_subspace_matrix_is_scaled_rotation() {
        let inst = two_subspace_feasibility(2).unwrap();
        let (a, b) = inst.operators().unwrap();
        let t = dr_operator_matrix(&a, &b, 1.0, 1.0).unwrap();
        assert!((&t - Matrix::from_row_slice(2, 2, &[0.5, -0.5, 0.5, 0.5])).amax() < 1e-15);
        for n in [2, 3, 5, 17] {
            let inst = two_subspace_feasibility(n).unwrap();
            let (a, b) = inst.operators().unwrap();
            for gamma in [0.3, 1.0, 4.0] {
                let t = dr_operator_matrix(&a, &b, gamma, 1.0).unwrap();
                assert!((t - scaled_rotation(n)).amax() < 1e-14, "N={n}");
            }
            assert_eq!(inst.fixed_point(1.0).unwrap(), Vector::zeros(2));
        }
        assert!(two_subspace_feasibility(1).is_err());
    }

    #[test]
    fn skew_matches_two_subspace() {
        let skew = skew_rotation(2).unwrap();
        let (a, _) = skew.operators().unwrap();
        let z = a.resolvent(1.0, &dvector![1.0, 0.0]).unwrap();
        assert!((z - dvector![0.5, 0.5]).norm() < 1e-15);
        for n in 2..=12 {
            let (a1, b1) = skew_rotation(n).unwrap().operators().unwrap();
            let (a2, b2) = two_subspace_feasibility(n).unwrap().operators().unwrap();
            let t1 = dr_operator_matrix(&a1, &b1, 1.0, 1.0).unwrap();
            let t2 = dr_operator_matrix(&a2, &b2, 1.0, 1.0).unwrap();
            assert!((t1 - t2).amax() <= 1e-12);
        }
        assert!(skew_rotation(0).is_err());
    }

    #[test]
    fn composite_fixed_point_examples() {
        let f = FunctionOracle::half_squared_norm(1);
        let zero = FunctionOracle::zero(1);
        for gamma in [0.1, 1.0, 3.0] {
            assert_eq!(
                composite_fixed_point(&f, &zero, &dvector![0.0], gamma).unwrap(),
                dvector![0.0]
            );
        }
        // f = ½(x − 1)² up to a constant, g = |x|: x⋆ = 0, w⋆ = −1 at γ = 1
        let shifted = FunctionOracle::quadratic(Matrix::identity(1, 1), dvector![-1.0]).unwrap();
        let l1 = FunctionOracle::l1(1, 1.0).unwrap();
        let w = composite_fixed_point(&shifted, &l1, &dvector![0.0], 1.0).unwrap();
        assert_eq!(w, dvector![-1.0]);
        let step = dr_operator_apply(
            &OperatorOracle::subdifferential(l1.clone()),
            &OperatorOracle::subdifferential(shifted.clone()),
            1.0,
            1.0,
            &w,
        )
        .unwrap();
        assert!((step.tw - &w).norm() <= 1e-10);
        assert!(matches!(
            composite_fixed_point(&shifted, &l1, &dvector![0.5], 1.0),
            Err(SplitError::Verification(_))
        ));
    }

    #[test]
    fn huber_values() {
        let delta = 0.4;
        let h = huber_1d(delta).unwrap();
        assert!((h.value(&dvector![delta / 2.0]).unwrap() - delta * delta / 8.0).abs() < 1e-16);
        assert!((h.value(&dvector![2.0 * delta]).unwrap() - 1.5 * delta * delta).abs() < 1e-16);
        let sup = (-100..=100)
            .map(|i| h.gradient(&dvector![i as f64 * 0.1]).unwrap()[0].abs())
            .fold(0.0, f64::max);
        assert_eq!(sup, delta);
        assert!(huber_1d(0.0).is_err());
    }

    #[test]
    fn random_quadratic_zero_g_closed_form() {
        let inst = random_quadratic_composite(3, 2.0, GKind::Zero, 11).unwrap();
        let (f, _) = inst.composite_parts().unwrap();
        let x = inst.known_solution.as_ref().unwrap();
        assert!(f.gradient(x).unwrap().norm() < 1e-10);
        assert_eq!(f.smoothness().map(|l| (l - 2.0).abs() < 1e-12), Some(true));
        assert!(!inst.oracle_solution);
        assert_eq!(
            inst,
            random_quadratic_composite(3, 2.0, GKind::Zero, 11).unwrap()
        );
    }

    #[test]
    fn random_quadratic_nonsmooth_reference() {
        for (kind, seed) in [(GKind::L1, 1), (GKind::Box, 2), (GKind::L1, 3)] {
            let inst = random_quadratic_composite(4, 1.5, kind, seed).unwrap();
            assert!(inst.oracle_solution);
            for gamma in [0.2, 1.0 / 1.5, 1.5] {
                assert!(inst.stationarity_residual(gamma).unwrap() <= STATIONARITY_TOL);
            }
            assert!(inst.known_solution.as_ref().unwrap().norm() <= 10.0);
        }
    }

    #[test]
    fn planted_solutions_are_optimal() {
        for seed in 0..30 {
            for kind in [GKind::Zero, GKind::L1, GKind::Box] {
                let inst =
                    planted_quadratic_composite(1 + (seed as usize) % 5, 2.5, kind, seed).unwrap();
                assert!(inst.stationarity_residual(0.3).unwrap() <= STATIONARITY_TOL);
                let (f, _) = inst.composite_parts().unwrap();
                assert!((f.smoothness().unwrap() - 2.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn strongly_monotone_linear_properties() {
        let inst = strongly_monotone_linear(4, 0.3, 2.0, 5).unwrap();
        let (a, b) = inst.operators().unwrap();
        let mut rng = cell_rng(99, 0);
        for _ in 0..100 {
            let x = normal_vector(&mut rng, 4);
            let sum = a.apply(&x).unwrap() + b.apply(&x).unwrap();
            assert!(sum.dot(&x) >= 0.3 * x.norm_squared() - 1e-12);
        }
        let bm = b.matrix().unwrap();
        let top = bm.clone().symmetric_eigenvalues().max();
        assert!((1.0 / top - 2.0).abs() < 1e-12);

        let plain = strongly_monotone_linear_with_skew(3, 1.0, 0.5, 0.0, 1).unwrap();
        let (a, _) = plain.operators().unwrap();
        assert!((a.matrix().unwrap() - Matrix::identity(3, 3)).amax() < 1e-15);
        assert_eq!(plain.known_solution, Some(Vector::zeros(3)));
    }

    #[test]
    fn nonexpansive_maps() {
        let m = random_nonexpansive_map(4, 3).unwrap();
        assert!(m.factor >= 0.9 && m.factor <= 1.0);
        let mut rng = cell_rng(4, 0);
        for _ in 0..200 {
            let (p, q) = (normal_vector(&mut rng, 4), normal_vector(&mut rng, 4));
            assert!((m.apply(&p) - m.apply(&q)).norm() <= (p - q).norm() * (1.0 + 1e-12));
        }
        assert_eq!(m.apply(&Vector::zeros(4)), Vector::zeros(4));
        let id = LinearMap {
            matrix: Matrix::identity(2, 2),
            factor: 1.0,
        };
        assert_eq!(id.apply(&dvector![1.0, 2.0]), dvector![1.0, 2.0]);
    }

    #[test]
    fn build_by_id() {
        let mut p = BTreeMap::new();
        p.insert("N".to_string(), "4".to_string());
        assert_eq!(
            build_instance("two-subspace", &p).unwrap().descriptor,
            "N=4"
        );
        assert!(build_instance("nope", &p).is_err());
        assert!(build_instance("huber", &p).is_err());
        p.clear();
        p.insert("g".into(), "box".into());
        p.insert("seed".into(), "3".into());
        assert!(build_instance("rand-quad", &p).unwrap().oracle_solution);
    }

    #[test]
    fn distance_to_sets() {
        let point = FixedPointSet::Point(dvector![1.0, 0.0]);
        assert_eq!(point.distance(&dvector![1.0, 2.0]), Some(2.0));
        let line = FixedPointSet::Subspace(Matrix::from_column_slice(2, 1, &[1.0, 0.0]));
        assert_eq!(line.distance(&dvector![5.0, -3.0]), Some(3.0));
        assert_eq!(FixedPointSet::Unknown.distance(&dvector![1.0]), None);
    }
}
