//! Resolvent, proximal and projection oracles.
//!
//! An [`OperatorOracle`] is a maximally monotone operator that can be
//! evaluated through its resolvent `J_{γA} = (I + γA)^{-1}`. A
//! [`FunctionOracle`] is a closed proper convex function exposing its value,
//! its proximal map and, when it is smooth, its gradient. Oracles are
//! immutable once built; monotonicity and semidefiniteness are checked at
//! construction time only.

use crate::{check_dim, check_gamma, Matrix, Result, SplitError, Vector};

/// Tolerance on the smallest eigenvalue when checking (semi)definiteness.
pub const PSD_TOL: f64 = 1e-10;
/// Distance within which a point counts as a member of an indicator's set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Smallest eigenvalue of the symmetric part `(M + Mᵀ)/2`.
pub fn symmetric_part_min_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionKind {
    /// `½ xᵀQx + bᵀx` with `Q` symmetric positive semidefinite.
    Quadratic {
        q: Matrix,
        b: Vector,
    },
    /// `weight · ‖x‖₁`.
    L1 {
        weight: f64,
    },
    /// Indicator of the line spanned by `direction` (need not be unit length).
    IndicatorOfLine {
        direction: Vector,
    },
    /// Indicator of the box `lower ≤ x ≤ upper`.
    IndicatorOfBox {
        lower: Vector,
        upper: Vector,
    },
    /// Separable Huber function with threshold `delta`.
    Huber {
        delta: f64,
    },
    Zero,
    /// `Σ cᵢ fᵢ` with nonnegative scales.
    ScaledSum(Vec<(f64, FunctionOracle)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionOracle {
    kind: FunctionKind,
    dim: usize,
    smoothness: Option<f64>,
    strong_convexity: Option<f64>,
}

impl FunctionOracle {
    pub fn quadratic(q: Matrix, b: Vector) -> Result<Self> {
        let dim = b.len();
        if q.nrows() != dim || q.ncols() != dim {
            return Err(SplitError::DimensionMismatch {
                expected: dim,
                got: q.nrows(),
            });
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * (1.0 + q.amax()) {
            return Err(SplitError::InvalidParameter(format!(
                "quadratic matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let eig = q.clone().symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if lo < -PSD_TOL {
            return Err(SplitError::NotPositiveSemidefinite(lo));
        }
        Ok(Self {
            kind: FunctionKind::Quadratic { q, b },
            dim,
            smoothness: (hi > 0.0).then_some(hi),
            strong_convexity: Some(lo.max(0.0)),
        })
    }

    /// `½‖x‖²` in dimension `dim`.
    pub fn half_squared_norm(dim: usize) -> Self {
        Self::quadratic(Matrix::identity(dim, dim), Vector::zeros(dim))
            .expect("identity is positive definite")
    }

    pub fn l1(dim: usize, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(SplitError::InvalidParameter(format!(
                "l1 weight must be nonnegative, got {weight}"
            )));
        }
        Ok(Self {
            kind: FunctionKind::L1 { weight },
            dim,
            smoothness: None,
            strong_convexity: Some(0.0),
        })
    }

    pub fn indicator_of_line(direction: Vector) -> Result<Self> {
        if direction.norm() == 0.0 || !direction.iter().all(|v| v.is_finite()) {
            return Err(SplitError::InvalidParameter(
                "line direction must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            dim: direction.len(),
            kind: FunctionKind::IndicatorOfLine { direction },
            smoothness: None,
            strong_convexity: Some(0.0),
        })
    }

    pub fn indicator_of_box(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(SplitError::InvalidParameter(
                "box requires lower <= upper in every coordinate".into(),
            ));
        }
        Ok(Self {
            dim: lower.len(),
            kind: FunctionKind::IndicatorOfBox { lower, upper },
            smoothness: None,
            strong_convexity: Some(0.0),
        })
    }

    pub fn huber(dim: usize, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(SplitError::InvalidParameter(format!(
                "huber threshold must be positive, got {delta}"
            )));
        }
        Ok(Self {
            kind: FunctionKind::Huber { delta },
            dim,
            smoothness: Some(1.0),
            strong_convexity: Some(0.0),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            kind: FunctionKind::Zero,
            dim,
            smoothness: None,
            strong_convexity: Some(0.0),
        }
    }

    pub fn scaled_sum(terms: Vec<(f64, FunctionOracle)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, f)| f.dim)
            .ok_or_else(|| SplitError::InvalidParameter("empty scaled sum".into()))?;
        let mut smooth = Some(0.0);
        let mut strong = 0.0;
        for (c, f) in &terms {
            check_dim(dim, f.dim)?;
            if !(c.is_finite() && *c >= 0.0) {
                return Err(SplitError::InvalidParameter(format!(
                    "scaled sum needs nonnegative scales, got {c}"
                )));
            }
            smooth = match (smooth, f.smoothness_or_zero()) {
                (Some(acc), Some(l)) => Some(acc + c * l),
                _ if *c == 0.0 => smooth,
                _ => None,
            };
            strong += c * f.strong_convexity.unwrap_or(0.0);
        }
        Ok(Self {
            kind: FunctionKind::ScaledSum(terms),
            dim,
            smoothness: smooth.filter(|l| *l > 0.0),
            strong_convexity: Some(strong),
        })
    }

    fn smoothness_or_zero(&self) -> Option<f64> {
        match self.kind {
            FunctionKind::Zero => Some(0.0),
            FunctionKind::Quadratic { .. } => Some(self.smoothness.unwrap_or(0.0)),
            _ => self.smoothness,
        }
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared smoothness constant `L` (`None` when the function is not smooth).
    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }

    pub fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }

    /// True when the gradient exists everywhere.
    pub fn is_smooth(&self) -> bool {
        self.smoothness_or_zero().is_some()
    }

    /// Function value; `f64::INFINITY` outside the domain of an indicator.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(match &self.kind {
            FunctionKind::Quadratic { q, b } => 0.5 * x.dot(&(q * x)) + b.dot(x),
            FunctionKind::L1 { weight } => weight * x.lp_norm(1),
            FunctionKind::IndicatorOfLine { direction } => {
                if (x - project_onto_line(direction, x)).norm() <= MEMBERSHIP_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FunctionKind::IndicatorOfBox { lower, upper } => {
                let outside = x
                    .iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                    .fold(0.0, f64::max);
                if outside <= MEMBERSHIP_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FunctionKind::Huber { delta } => x.iter().map(|v| huber_scalar(*delta, *v)).sum(),
            FunctionKind::Zero => 0.0,
            FunctionKind::ScaledSum(terms) => {
                let mut total = 0.0;
                for (c, f) in terms {
                    if *c != 0.0 {
                        total += c * f.value(x)?;
                    }
                }
                total
            }
        })
    }

    /// Gradient of a smooth function. Nonsmooth kinds are rejected; `L1` is
    /// accepted away from its kinks.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            FunctionKind::Quadratic { q, b } => Ok(q * x + b),
            FunctionKind::Huber { delta } => Ok(x.map(|v| v.clamp(-delta, *delta))),
            FunctionKind::Zero => Ok(Vector::zeros(self.dim)),
            FunctionKind::L1 { weight } => {
                if x.iter().any(|v| *v == 0.0) {
                    Err(SplitError::Unsupported(
                        "l1 gradient requested at a kink".into(),
                    ))
                } else {
                    Ok(x.map(|v| weight * v.signum()))
                }
            }
            FunctionKind::IndicatorOfLine { .. } | FunctionKind::IndicatorOfBox { .. } => Err(
                SplitError::Unsupported("indicator functions have no gradient".into()),
            ),
            FunctionKind::ScaledSum(terms) => {
                let mut g = Vector::zeros(self.dim);
                for (c, f) in terms {
                    if *c != 0.0 {
                        g += f.gradient(x)? * *c;
                    }
                }
                Ok(g)
            }
        }
    }

    /// `argmin_z f(z) + ‖z − w‖²/(2γ)`.
    pub fn prox(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim, w.len())?;
        match &self.kind {
            FunctionKind::Quadratic { q, b } if is_diagonal(q) => {
                Ok(Vector::from_fn(self.dim, |i, _| {
                    (w[i] - gamma * b[i]) / (1.0 + gamma * q[(i, i)])
                }))
            }
            FunctionKind::Quadratic { q, b } => {
                let system = Matrix::identity(self.dim, self.dim) + q * gamma;
                let rhs = w - b * gamma;
                system
                    .cholesky()
                    .map(|c| c.solve(&rhs))
                    .ok_or(SplitError::Singular("quadratic prox"))
            }
            FunctionKind::L1 { weight } => {
                let t = gamma * weight;
                Ok(w.map(|v| v.signum() * (v.abs() - t).max(0.0)))
            }
            FunctionKind::IndicatorOfLine { direction } => Ok(project_onto_line(direction, w)),
            FunctionKind::IndicatorOfBox { lower, upper } => Ok(Vector::from_iterator(
                self.dim,
                w.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.clamp(*l, *u)),
            )),
            FunctionKind::Huber { delta } => Ok(w.map(|v| huber_prox_scalar(*delta, gamma, v))),
            FunctionKind::Zero => Ok(w.clone()),
            FunctionKind::ScaledSum(terms) => self.scaled_sum_prox(terms, gamma, w),
        }
    }

    fn scaled_sum_prox(
        &self,
        terms: &[(f64, FunctionOracle)],
        gamma: f64,
        w: &Vector,
    ) -> Result<Vector> {
        let active: Vec<_> = terms.iter().filter(|(c, _)| *c != 0.0).collect();
        match active.as_slice() {
            [] => Ok(w.clone()),
            [(c, f)] => f.prox(gamma * c, w),
            _ => {
                let mut q = Matrix::zeros(self.dim, self.dim);
                let mut b = Vector::zeros(self.dim);
                for (c, f) in &active {
                    match &f.kind {
                        FunctionKind::Quadratic { q: qi, b: bi } => {
                            q += qi * *c;
                            b += bi * *c;
                        }
                        FunctionKind::Zero => {}
                        _ => {
                            return Err(SplitError::Unsupported(
                                "prox of a sum with non-quadratic terms".into(),
                            ))
                        }
                    }
                }
                FunctionOracle::quadratic(q, b)?.prox(gamma, w)
            }
        }
    }

    /// True when the prox is a linear map (needed for DR operator matrices).
    pub fn prox_is_linear(&self) -> bool {
        match &self.kind {
            FunctionKind::Quadratic { b, .. } => b.iter().all(|v| *v == 0.0),
            FunctionKind::IndicatorOfLine { .. } | FunctionKind::Zero => true,
            FunctionKind::ScaledSum(terms) => {
                let active: Vec<_> = terms.iter().filter(|(c, _)| *c != 0.0).collect();
                match active.as_slice() {
                    [(_, f)] => f.prox_is_linear(),
                    _ => active.iter().all(|(_, f)| {
                        matches!(f.kind, FunctionKind::Quadratic { .. } | FunctionKind::Zero)
                            && f.prox_is_linear()
                    }),
                }
            }
            _ => false,
        }
    }
}

fn huber_scalar(delta: f64, v: f64) -> f64 {
    if v.abs() <= delta {
        0.5 * v * v
    } else {
        delta * v.abs() - 0.5 * delta * delta
    }
}

fn huber_prox_scalar(delta: f64, gamma: f64, v: f64) -> f64 {
    if v.abs() <= delta * (1.0 + gamma) {
        v / (1.0 + gamma)
    } else {
        v - gamma * delta * v.signum()
    }
}

/// Orthogonal projection onto the line spanned by `direction`.
fn is_diagonal(m: &Matrix) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, v)| *v == 0.0 || k % (m.nrows() + 1) == 0)
}

pub fn project_onto_line(direction: &Vector, w: &Vector) -> Vector {
    direction * (direction.dot(w) / direction.dot(direction))
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    LinearMonotone(Matrix),
    /// Normal cone of the line spanned by the direction (a subspace).
    NormalConeOfLine(Vector),
    Subdifferential(FunctionOracle),
    Zero,
    Sum(Vec<OperatorOracle>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorOracle {
    kind: OperatorKind,
    dim: usize,
    beta_cocoercive: Option<f64>,
    mu_strong: Option<f64>,
}

impl OperatorOracle {
    /// `x ↦ Mx`; rejects `M` whose symmetric part is not positive semidefinite.
    pub fn linear(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(SplitError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let lo = symmetric_part_min_eigenvalue(&m);
        if lo < -PSD_TOL {
            return Err(SplitError::NotMonotone(lo));
        }
        Ok(Self {
            dim: m.nrows(),
            kind: OperatorKind::LinearMonotone(m),
            beta_cocoercive: None,
            mu_strong: Some(lo.max(0.0)),
        })
    }

    pub fn normal_cone_of_line(direction: Vector) -> Result<Self> {
        if direction.norm() == 0.0 || !direction.iter().all(|v| v.is_finite()) {
            return Err(SplitError::InvalidParameter(
                "line direction must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            dim: direction.len(),
            kind: OperatorKind::NormalConeOfLine(direction),
            beta_cocoercive: None,
            mu_strong: Some(0.0),
        })
    }

    /// `∂f`; an `L`-smooth `f` gives a `1/L`-cocoercive operator.
    pub fn subdifferential(f: FunctionOracle) -> Self {
        Self {
            dim: f.dim(),
            beta_cocoercive: f.smoothness().map(|l| 1.0 / l),
            mu_strong: f.strong_convexity(),
            kind: OperatorKind::Subdifferential(f),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            kind: OperatorKind::Zero,
            dim,
            beta_cocoercive: None,
            mu_strong: Some(0.0),
        }
    }

    pub fn sum(ops: Vec<OperatorOracle>) -> Result<Self> {
        let dim = ops
            .first()
            .map(|o| o.dim)
            .ok_or_else(|| SplitError::InvalidParameter("empty operator sum".into()))?;
        for op in &ops {
            check_dim(dim, op.dim)?;
        }
        let mu = ops.iter().map(|o| o.mu_strong).sum::<Option<f64>>();
        Ok(Self {
            kind: OperatorKind::Sum(ops),
            dim,
            beta_cocoercive: None,
            mu_strong: mu,
        })
    }

    /// Declares a cocoercivity constant; checked by sampling in tests, not here.
    pub fn with_cocoercivity(mut self, beta: f64) -> Self {
        self.beta_cocoercive = Some(beta);
        self
    }

    pub fn with_strong_monotonicity(mut self, mu: f64) -> Self {
        self.mu_strong = Some(mu);
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta_cocoercive(&self) -> Option<f64> {
        self.beta_cocoercive
    }

    pub fn mu_strong(&self) -> Option<f64> {
        self.mu_strong
    }

    /// Matrix of a single-valued linear operator, if it is one.
    pub fn matrix(&self) -> Option<Matrix> {
        match &self.kind {
            OperatorKind::LinearMonotone(m) => Some(m.clone()),
            OperatorKind::Zero => Some(Matrix::zeros(self.dim, self.dim)),
            OperatorKind::Subdifferential(f) => match f.kind() {
                FunctionKind::Quadratic { q, b } if b.iter().all(|v| *v == 0.0) => Some(q.clone()),
                FunctionKind::Zero => Some(Matrix::zeros(self.dim, self.dim)),
                _ => None,
            },
            OperatorKind::Sum(ops) => ops
                .iter()
                .map(|o| o.matrix())
                .try_fold(Matrix::zeros(self.dim, self.dim), |acc, m| {
                    m.map(|m| acc + m)
                }),
            OperatorKind::NormalConeOfLine(_) => None,
        }
    }

    /// Forward evaluation for single-valued operators.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            OperatorKind::LinearMonotone(m) => Ok(m * x),
            OperatorKind::Zero => Ok(Vector::zeros(self.dim)),
            OperatorKind::Subdifferential(f) => f.gradient(x),
            OperatorKind::Sum(ops) => ops
                .iter()
                .try_fold(Vector::zeros(self.dim), |acc, o| Ok(acc + o.apply(x)?)),
            OperatorKind::NormalConeOfLine(_) => Err(SplitError::Unsupported(
                "normal cone is set-valued; no forward evaluation".into(),
            )),
        }
    }

    /// `J_{γA}(w)`: the unique `z` with `w − z ∈ γ·A(z)`.
    pub fn resolvent(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim, w.len())?;
        match &self.kind {
            OperatorKind::LinearMonotone(m) => solve_shifted(m, gamma, w),
            OperatorKind::NormalConeOfLine(d) => Ok(project_onto_line(d, w)),
            OperatorKind::Subdifferential(f) => f.prox(gamma, w),
            OperatorKind::Zero => Ok(w.clone()),
            OperatorKind::Sum(ops) => {
                let live: Vec<_> = ops
                    .iter()
                    .filter(|o| !matches!(o.kind, OperatorKind::Zero))
                    .collect();
                if let [single] = live.as_slice() {
                    return single.resolvent(gamma, w);
                }
                let m = self.matrix().ok_or_else(|| {
                    SplitError::Unsupported("resolvent of a sum of non-linear operators".into())
                })?;
                solve_shifted(&m, gamma, w)
            }
        }
    }

    /// `R_{γA}(w) = 2 J_{γA}(w) − w`.
    pub fn reflected_resolvent(&self, gamma: f64, w: &Vector) -> Result<Vector> {
        Ok(self.resolvent(gamma, w)? * 2.0 - w)
    }

    /// True when `w ↦ J_{γA}(w)` is linear for every `γ`.
    pub fn resolvent_is_linear(&self) -> bool {
        match &self.kind {
            OperatorKind::LinearMonotone(_)
            | OperatorKind::NormalConeOfLine(_)
            | OperatorKind::Zero => true,
            OperatorKind::Subdifferential(f) => f.prox_is_linear(),
            OperatorKind::Sum(_) => self.matrix().is_some(),
        }
    }
}

fn solve_shifted(m: &Matrix, gamma: f64, w: &Vector) -> Result<Vector> {
    let n = m.nrows();
    let system = Matrix::identity(n, n) + m * gamma;
    system
        .lu()
        .solve(w)
        .ok_or(SplitError::Singular("resolvent (I + γM)z = w"))
}

/// One application of the relaxed Douglas-Rachford operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DrStep {
    /// `Tw = w + λ(y − x)`.
    pub tw: Vector,
    /// `x = J_{γB}(w)`.
    pub x: Vector,
    /// `y = J_{γA}(2x − w)`.
    pub y: Vector,
}

/// `T = (1 − λ/2) I + (λ/2) R_{γA} R_{γB}` evaluated through its three steps.
pub fn dr_operator_apply(
    a: &OperatorOracle,
    b: &OperatorOracle,
    gamma: f64,
    lambda: f64,
    w: &Vector,
) -> Result<DrStep> {
    check_dim(a.dim(), b.dim())?;
    let x = b.resolvent(gamma, w)?;
    let y = a.resolvent(gamma, &(&x * 2.0 - w))?;
    let tw = w + (&y - &x) * lambda;
    Ok(DrStep { tw, x, y })
}

/// Matrix of `w ↦ Tw` for operators with linear resolvents, built column by
/// column from the canonical basis.
pub fn dr_operator_matrix(
    a: &OperatorOracle,
    b: &OperatorOracle,
    gamma: f64,
    lambda: f64,
) -> Result<Matrix> {
    check_dim(a.dim(), b.dim())?;
    if !(a.resolvent_is_linear() && b.resolvent_is_linear()) {
        return Err(SplitError::Unsupported(
            "DR operator matrix needs operators with linear resolvents".into(),
        ));
    }
    let n = a.dim();
    let mut t = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        let step = dr_operator_apply(a, b, gamma, lambda, &e)?;
        t.set_column(j, &step.tw);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn skew2() -> OperatorOracle {
        OperatorOracle::linear(dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_operator_resolvent_is_identity() {
        let z = OperatorOracle::zero(2);
        assert_eq!(
            z.resolvent(1.0, &dvector![3.0, -2.0]).unwrap(),
            dvector![3.0, -2.0]
        );
        assert_eq!(
            z.reflected_resolvent(1.0, &dvector![3.0, -2.0]).unwrap(),
            dvector![3.0, -2.0]
        );
    }

    #[test]
    fn skew_resolvent_solves_shifted_system() {
        let m = skew2();
        let w = dvector![1.0, 0.0];
        let z = m.resolvent(1.0, &w).unwrap();
        assert!((&z - dvector![0.5, -0.5]).norm() < 1e-15);
        // z + Mz = w
        let back = &z + m.apply(&z).unwrap();
        assert!((back - w).norm() < 1e-15);
    }

    #[test]
    fn normal_cone_resolvent_is_gamma_independent_projection() {
        let n = OperatorOracle::normal_cone_of_line(dvector![1.0, 0.0]).unwrap();
        for gamma in [0.1, 0.7, 10.0] {
            assert_eq!(
                n.resolvent(gamma, &dvector![2.5, -4.0]).unwrap(),
                dvector![2.5, 0.0]
            );
            assert_eq!(
                n.reflected_resolvent(gamma, &dvector![2.5, -4.0]).unwrap(),
                dvector![2.5, 4.0]
            );
        }
        let diag = OperatorOracle::normal_cone_of_line(dvector![1.0, 1.0]).unwrap();
        assert_eq!(
            diag.reflected_resolvent(1.0, &dvector![1.0, 0.0]).unwrap(),
            dvector![0.0, 1.0]
        );
    }

    #[test]
    fn non_monotone_matrix_rejected() {
        let err = OperatorOracle::linear(dmatrix![-1.0, 0.0; 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, SplitError::NotMonotone(_)));
        assert!(OperatorOracle::linear(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn dimension_and_gamma_errors() {
        let z = OperatorOracle::zero(2);
        assert!(matches!(
            z.resolvent(1.0, &dvector![1.0]),
            Err(SplitError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            z.resolvent(0.0, &dvector![1.0, 2.0]),
            Err(SplitError::InvalidParameter(_))
        ));
        let f = FunctionOracle::zero(1);
        assert!(f.prox(-1.0, &dvector![1.0]).is_err());
    }

    #[test]
    fn prox_closed_forms() {
        let sq = FunctionOracle::half_squared_norm(2);
        assert_eq!(
            sq.prox(1.0, &dvector![2.0, -4.0]).unwrap(),
            dvector![1.0, -2.0]
        );
        let l1 = FunctionOracle::l1(1, 1.0).unwrap();
        assert_eq!(l1.prox(1.0, &dvector![2.0]).unwrap(), dvector![1.0]);
        assert_eq!(l1.prox(1.0, &dvector![-0.5]).unwrap(), dvector![0.0]);
        let hub = FunctionOracle::huber(1, 0.5).unwrap();
        assert_eq!(hub.prox(1.0, &dvector![2.0]).unwrap(), dvector![1.5]);
        assert_eq!(hub.prox(1.0, &dvector![0.8]).unwrap(), dvector![0.4]);
        let bx = FunctionOracle::indicator_of_box(dvector![-1.0, 0.0], dvector![1.0, 2.0]).unwrap();
        assert_eq!(
            bx.prox(3.0, &dvector![-5.0, 1.0]).unwrap(),
            dvector![-1.0, 1.0]
        );
    }

    // Brute-force minimization of the 1-D prox objective: coarse grid, then
    // successive grid refinement around the best point.
    fn brute_prox_1d(f: &FunctionOracle, gamma: f64, w: f64) -> f64 {
        let obj = |z: f64| f.value(&dvector![z]).unwrap() + (z - w).powi(2) / (2.0 * gamma);
        let (mut lo, mut hi) = (w - 10.0, w + 10.0);
        let mut best = w;
        for _ in 0..40 {
            let step = (hi - lo) / 200.0;
            best = (0..=200)
                .map(|i| lo + step * i as f64)
                .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
                .unwrap();
            lo = best - 2.0 * step;
            hi = best + 2.0 * step;
        }
        best
    }

    #[test]
    fn huber_prox_matches_brute_force() {
        let hub = FunctionOracle::huber(1, 0.5).unwrap();
        let brute = brute_prox_1d(&hub, 1.0, 2.0);
        // grid search on a quadratic bottom resolves z only to about sqrt(eps)
        assert!((brute - 1.5).abs() < 1e-7, "{brute}");
        for (delta, gamma, w) in [(1.0, 0.3, -0.9), (0.2, 2.0, 5.0), (2.0, 1.5, 4.9)] {
            let f = FunctionOracle::huber(1, delta).unwrap();
            let p = f.prox(gamma, &dvector![w]).unwrap()[0];
            assert!((p - brute_prox_1d(&f, gamma, w)).abs() < 1e-7);
        }
    }

    #[test]
    fn values() {
        let q = FunctionOracle::quadratic(dmatrix![1.0], dvector![0.0]).unwrap();
        assert_eq!(q.value(&dvector![2.0]).unwrap(), 2.0);
        let line = FunctionOracle::indicator_of_line(dvector![1.0, 0.0]).unwrap();
        assert_eq!(line.value(&dvector![1.0, 1e-12]).unwrap(), 0.0);
        assert_eq!(line.value(&dvector![1.0, 1e-3]).unwrap(), f64::INFINITY);
        let hub = FunctionOracle::huber(1, 1.0).unwrap();
        assert_eq!(hub.value(&dvector![3.0]).unwrap(), 2.5);
    }

    #[test]
    fn huber_value_matches_infimal_convolution_definition() {
        // huber_δ(x) = min_z δ|z| + ½(x − z)², evaluated on a grid
        let delta = 1.0;
        let x = 3.0;
        let grid_min = (0..=600_000)
            .map(|i| -1.0 + i as f64 * 1e-5)
            .map(|z: f64| delta * z.abs() + 0.5 * (x - z).powi(2))
            .fold(f64::INFINITY, f64::min);
        let hub = FunctionOracle::huber(1, delta).unwrap();
        assert!((hub.value(&dvector![x]).unwrap() - grid_min).abs() < 1e-9);
    }

    #[test]
    fn gradients() {
        let sq = FunctionOracle::half_squared_norm(2);
        assert_eq!(
            sq.gradient(&dvector![1.0, 2.0]).unwrap(),
            dvector![1.0, 2.0]
        );
        let hub = FunctionOracle::huber(1, 1.0).unwrap();
        assert_eq!(hub.gradient(&dvector![3.0]).unwrap(), dvector![1.0]);
        let q =
            FunctionOracle::quadratic(dmatrix![2.0, 0.0; 0.0, 1.0], dvector![1.0, -3.0]).unwrap();
        assert_eq!(
            q.gradient(&dvector![0.0, 0.0]).unwrap(),
            dvector![1.0, -3.0]
        );
        let l1 = FunctionOracle::l1(2, 1.0).unwrap();
        assert!(matches!(
            l1.gradient(&dvector![0.0, 1.0]),
            Err(SplitError::Unsupported(_))
        ));
        let line = FunctionOracle::indicator_of_line(dvector![1.0]).unwrap();
        assert!(line.gradient(&dvector![1.0]).is_err());
    }

    #[test]
    fn quadratic_validation() {
        assert!(matches!(
            FunctionOracle::quadratic(dmatrix![-1.0], dvector![0.0]),
            Err(SplitError::NotPositiveSemidefinite(_))
        ));
        assert!(
            FunctionOracle::quadratic(dmatrix![1.0, 2.0; 0.0, 1.0], dvector![0.0, 0.0]).is_err()
        );
        let q =
            FunctionOracle::quadratic(dmatrix![4.0, 0.0; 0.0, 1.0], dvector![0.0, 0.0]).unwrap();
        assert_eq!(q.smoothness(), Some(4.0));
        assert_eq!(
            OperatorOracle::subdifferential(q).beta_cocoercive(),
            Some(0.25)
        );
    }

    #[test]
    fn scaled_sum_prox_and_value() {
        let sum = FunctionOracle::scaled_sum(vec![
            (2.0, FunctionOracle::half_squared_norm(1)),
            (
                1.0,
                FunctionOracle::quadratic(dmatrix![1.0], dvector![-1.0]).unwrap(),
            ),
        ])
        .unwrap();
        // 1.5 x² − x; prox at γ=1: (1 + 3) z = w + 1
        assert_eq!(sum.prox(1.0, &dvector![3.0]).unwrap(), dvector![1.0]);
        assert_eq!(sum.value(&dvector![2.0]).unwrap(), 4.0);
        assert_eq!(sum.smoothness(), Some(3.0));
        let mixed = FunctionOracle::scaled_sum(vec![
            (1.0, FunctionOracle::half_squared_norm(1)),
            (1.0, FunctionOracle::l1(1, 1.0).unwrap()),
        ])
        .unwrap();
        assert!(matches!(
            mixed.prox(1.0, &dvector![1.0]),
            Err(SplitError::Unsupported(_))
        ));
        let single =
            FunctionOracle::scaled_sum(vec![(0.5, FunctionOracle::l1(1, 2.0).unwrap())]).unwrap();
        assert_eq!(single.prox(1.0, &dvector![3.0]).unwrap(), dvector![2.0]);
    }

    #[test]
    fn sum_operator_resolvent() {
        let s = OperatorOracle::sum(vec![skew2(), OperatorOracle::zero(2)]).unwrap();
        assert!(
            (s.resolvent(1.0, &dvector![1.0, 0.0]).unwrap() - dvector![0.5, -0.5]).norm() < 1e-15
        );
        let two = OperatorOracle::sum(vec![
            skew2(),
            OperatorOracle::linear(Matrix::identity(2, 2)).unwrap(),
        ])
        .unwrap();
        // (2I + M) z = w
        let z = two.resolvent(1.0, &dvector![2.0, 0.0]).unwrap();
        assert!(
            (z * 2.0
                + skew2()
                    .apply(&two.resolvent(1.0, &dvector![2.0, 0.0]).unwrap())
                    .unwrap()
                - dvector![2.0, 0.0])
            .norm()
                < 1e-14
        );
        let bad = OperatorOracle::sum(vec![
            skew2(),
            OperatorOracle::normal_cone_of_line(dvector![1.0, 0.0]).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            bad.resolvent(1.0, &dvector![1.0, 0.0]),
            Err(SplitError::Unsupported(_))
        ));
    }

    #[test]
    fn dr_operator_examples() {
        let b = OperatorOracle::normal_cone_of_line(dvector![1.0, 0.0]).unwrap();
        let a = OperatorOracle::normal_cone_of_line(dvector![1.0, 1.0]).unwrap();
        let step = dr_operator_apply(&a, &b, 1.0, 1.0, &dvector![1.0, 0.0]).unwrap();
        assert_eq!(step.tw, dvector![0.5, 0.5]);
        let t = dr_operator_matrix(&a, &b, 1.0, 1.0).unwrap();
        assert!((t - dmatrix![0.5, -0.5; 0.5, 0.5]).amax() < 1e-15);

        let z = OperatorOracle::zero(3);
        assert_eq!(
            dr_operator_matrix(&z, &z, 2.0, 1.3).unwrap(),
            Matrix::identity(3, 3)
        );
        let w = dvector![1.0, -2.0, 0.5];
        assert_eq!(dr_operator_apply(&z, &z, 0.4, 1.7, &w).unwrap().tw, w);
        assert_eq!(
            dr_operator_apply(&a, &b, 1.0, 0.0, &dvector![3.0, 1.0])
                .unwrap()
                .tw,
            dvector![3.0, 1.0]
        );

        let l1 = OperatorOracle::subdifferential(FunctionOracle::l1(2, 1.0).unwrap());
        assert!(matches!(
            dr_operator_matrix(&l1, &b, 1.0, 1.0),
            Err(SplitError::Unsupported(_))
        ));
    }

    #[test]
    fn projection_idempotent() {
        let d = dvector![0.3, -1.7, 2.2];
        let w = dvector![1.0, 4.0, -3.0];
        let p = project_onto_line(&d, &w);
        assert!((project_onto_line(&d, &p) - &p).amax() <= 1e-14);
    }
}
