//! Numeric checks of the identities behind the convergence proofs.
//!
//! Each check samples the free variables of a polynomial identity (or runs a
//! trajectory for an inequality) and reports the largest mismatch. Samples
//! are drawn per trial from `cell_rng(seed, trial)`, so results do not depend
//! on evaluation order.

use std::fmt;

use rand::Rng;

use crate::algorithms::{gd_run, silver_schedule};
use crate::operators::FunctionOracle;
use crate::rng::{cell_rng, normal_vector};
use crate::{check_dim, Result, SplitError, Vector, SILVER_RATIO};

/// Absolute tolerance for the unit-scale identity checks.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Relative tolerance for the restricted-strong-monotonicity identity.
pub const PROP44_REL_TOL: f64 = 1e-6;
/// Slack for the trajectory inequality and the interpolation inequality.
pub const TRAJECTORY_TOL: f64 = 1e-8;
pub const INTERPOLATION_TOL: f64 = 1e-9;

pub const CERTIFICATE_IDS: [&str; 5] =
    ["thm31", "prop44", "lemma51-base", "lemma51-traj", "interp"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Checked,
    /// A denominator of the certificate vanished at the requested parameters.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub id: String,
    pub trials: usize,
    pub max_abs_residual: f64,
    /// Residual divided by the total magnitude of the terms, when relevant.
    pub max_rel_residual: Option<f64>,
    pub tolerance: f64,
    /// Parameter points where a required sign condition failed.
    pub sign_violations: Vec<String>,
    pub outcome: Outcome,
    pub pass: bool,
    /// Term-group breakdown of the worst trial.
    pub detail: String,
}

impl CertificateReport {
    fn finish(
        id: &str,
        trials: usize,
        max_abs: f64,
        max_rel: Option<f64>,
        tolerance: f64,
        sign_violations: Vec<String>,
        detail: String,
    ) -> Self {
        let measured = max_rel.unwrap_or(max_abs);
        let pass = measured <= tolerance && sign_violations.is_empty();
        Self {
            id: id.into(),
            trials,
            max_abs_residual: max_abs,
            max_rel_residual: max_rel,
            tolerance,
            sign_violations,
            outcome: Outcome::Checked,
            pass,
            detail,
        }
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.outcome, self.pass) {
            (Outcome::Degenerate, _) => "DEGENERATE",
            (_, true) => "PASS",
            (_, false) => "FAIL",
        };
        write!(
            f,
            "{} {}: trials={} max_abs_residual={:e}",
            verdict, self.id, self.trials, self.max_abs_residual
        )?;
        if let Some(rel) = self.max_rel_residual {
            write!(f, " max_rel_residual={rel:e}")?;
        }
        write!(
            f,
            " tolerance={:e} sign_violations={}",
            self.tolerance,
            self.sign_violations.len()
        )?;
        if !self.detail.is_empty() {
            write!(f, "\n  {}", self.detail)?;
        }
        for v in self.sign_violations.iter().take(10) {
            write!(f, "\n  sign: {v}")?;
        }
        Ok(())
    }
}

/// Rescales a sample jointly so that its largest vector has norm at most 1.
fn normalize(sample: &mut [Vector]) {
    let m = sample.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if m > 1.0 {
        for v in sample.iter_mut() {
            *v /= m;
        }
    }
}

fn random_dim<R: Rng>(rng: &mut R) -> usize {
    rng.gen_range(1..=5)
}

// ---------------------------------------------------------------------------
// Sublinear rate of the averaged iteration

/// One term `weight·‖Σ_i combo[i]·w^{i+1}‖²` of the multiplier-sum identity.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadTerm {
    pub group: &'static str,
    pub weight: f64,
    pub combo: Vec<f64>,
}

impl QuadTerm {
    fn eval(&self, w: &[Vector]) -> f64 {
        let mut v = Vector::zeros(w[0].len());
        for (c, wi) in self.combo.iter().zip(w) {
            if *c != 0.0 {
                v.axpy(*c, wi, 1.0);
            }
        }
        self.weight * v.norm_squared()
    }
}

/// Terms of `LHS − RHS` for horizon `n` over `w¹..w^{n+1}` (with `w⋆ = 0`
/// and `Sw^k = 2w^{k+1} − w^k`). LHS collects the multiplier-weighted
/// nonexpansiveness inequalities, RHS the rate term minus the three
/// sum-of-squares families; RHS terms enter with flipped sign.
pub fn thm31_terms(n: usize) -> Result<Vec<QuadTerm>> {
    if n < 2 {
        return Err(SplitError::InvalidParameter(format!(
            "identity needs N >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let m1 = nf - 1.0;
    let len = n + 1;
    // combo over w^1..w^{n+1}; `at(&[(k, c)])` puts c on w^k
    let at = |pairs: &[(usize, f64)]| {
        let mut c = vec![0.0; len];
        for &(k, v) in pairs {
            c[k - 1] += v;
        }
        c
    };
    let mut terms = Vec::new();
    for k in 1..n {
        let c = k as f64 * m1.powi((n - k - 1) as i32) / (2.0 * nf.powi((n - k) as i32));
        terms.push(QuadTerm {
            group: "lhs:consecutive",
            weight: c,
            combo: at(&[(k + 1, 1.0), (k, -1.0)]),
        });
        terms.push(QuadTerm {
            group: "lhs:consecutive",
            weight: -c,
            combo: at(&[(k + 2, 2.0), (k + 1, -3.0), (k, 1.0)]),
        });
    }
    let c = 1.0 / (2.0 * nf);
    terms.push(QuadTerm {
        group: "lhs:last",
        weight: c,
        combo: at(&[(n, 1.0)]),
    });
    terms.push(QuadTerm {
        group: "lhs:last",
        weight: -c,
        combo: at(&[(n + 1, 2.0), (n, -1.0)]),
    });
    for k in 1..n - 1 {
        let c =
            (n - k - 1) as f64 * m1.powi((n - k - 1) as i32) / (2.0 * nf.powi((n + 1 - k) as i32));
        terms.push(QuadTerm {
            group: "lhs:anchor",
            weight: c,
            combo: at(&[(k, 1.0)]),
        });
        terms.push(QuadTerm {
            group: "lhs:anchor",
            weight: -c,
            combo: at(&[(k + 1, 2.0), (k, -1.0)]),
        });
    }
    let a = 2.0 * m1 / nf;
    let b = m1 / nf;
    let rate = crate::rates::km_constant(n);
    terms.push(QuadTerm {
        group: "rhs:rate",
        weight: -rate,
        combo: at(&[(1, 1.0)]),
    });
    terms.push(QuadTerm {
        group: "rhs:residual",
        weight: 1.0,
        combo: at(&[(n + 1, 1.0), (n, -1.0)]),
    });
    terms.push(QuadTerm {
        group: "rhs:square",
        weight: 1.0,
        combo: at(&[(n + 1, 1.0), (n, -a), (n - 1, b)]),
    });
    for k in 1..n - 1 {
        let c = k as f64 * m1.powi((n - 2 - k) as i32) / nf.powi((n - k - 1) as i32);
        terms.push(QuadTerm {
            group: "rhs:square",
            weight: c,
            combo: at(&[(k + 2, 1.0), (k + 1, -a), (k, b)]),
        });
    }
    Ok(terms)
}

/// `LHS − RHS` of the identity at `w = [w¹, …, w^{n+1}]`.
pub fn thm31_residual(n: usize, w: &[Vector]) -> Result<f64> {
    check_dim(n + 1, w.len())?;
    Ok(thm31_terms(n)?.iter().map(|t| t.eval(w)).sum())
}

fn group_breakdown(terms: &[QuadTerm], w: &[Vector]) -> String {
    let mut groups: Vec<(&str, f64)> = Vec::new();
    for t in terms {
        let v = t.eval(w);
        match groups.iter_mut().find(|(g, _)| *g == t.group) {
            Some((_, acc)) => *acc += v,
            None => groups.push((t.group, v)),
        }
    }
    groups
        .iter()
        .map(|(g, v)| format!("{g}={v:.6e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn check_thm31_identity(
    n: usize,
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if dim == 0 {
        return Err(SplitError::InvalidParameter(
            "dimension must be positive".into(),
        ));
    }
    let terms = thm31_terms(n)?;
    let mut worst = (0.0, String::new());
    for t in 0..trials {
        let mut rng = cell_rng(seed, t as u64);
        let mut w: Vec<Vector> = (0..=n).map(|_| normal_vector(&mut rng, dim)).collect();
        normalize(&mut w);
        let r: f64 = terms.iter().map(|q| q.eval(&w)).sum::<f64>().abs();
        if r > worst.0 || t == 0 {
            worst = (
                r,
                format!("worst trial {t}: {}", group_breakdown(&terms, &w)),
            );
        }
    }
    Ok(CertificateReport::finish(
        "thm31",
        trials,
        worst.0,
        None,
        IDENTITY_TOL,
        Vec::new(),
        if trials == 0 { String::new() } else { worst.1 },
    ))
}

// ---------------------------------------------------------------------------
// Error-bound modulus under restricted strong monotonicity

/// Constants of the restricted-strong-monotonicity certificate, normalized to
/// `β = 1` with `μ̄ = min(μ_f, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop44Constants {
    pub gamma: f64,
    pub mu_f_bar: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub s: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub d_prime: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Prop44Constants {
    pub fn new(gamma: f64, mu_f_bar: f64) -> Result<Self> {
        let in_range = |v: f64| v > 0.0 && v <= 1.0;
        if !in_range(gamma) || !in_range(mu_f_bar) {
            return Err(SplitError::InvalidParameter(format!(
                "need gamma, mu_f_bar in (0, 1], got gamma={gamma}, mu_f_bar={mu_f_bar}"
            )));
        }
        let (g, m) = (gamma, mu_f_bar);
        let (g2, g3, g4, g5) = (g * g, g.powi(3), g.powi(4), g.powi(5));
        let (m2, m3) = (m * m, m.powi(3));
        let s = 1.0 + g * (1.0 + m);
        let c = (g + 1.0) * ((m + 1.0) * g + 1.0);
        let d = 2.0 * c - 1.0;
        let e = (g + m * g + 1.0).powi(2) / m2 + 8.0 * g2 * c
            - ((-2.0 * g * m2 + (2.0 * g2 + 4.0 * g + 2.0) / g) * (g - 1.0)) / m2
            - 16.0 * g2 * c * c / d;
        let d_prime = 2.0 - 2.0 * m2 * g4 - 6.0 * m2 * g3 - 4.0 * m2 * g2
            + 4.0 * m * g4
            + 8.0 * m * g3
            + m * g2
            + 2.0 * m * g
            - 2.0 * g4
            - 2.0 * g3
            + 7.0 * g2
            + 9.0 * g;
        let p1 = 2.0 * m2 * g4 - 4.0 * m2 * g2 + 2.0 * m * g3 + m * g2 + 2.0 * m * g
            - 2.0 * g4
            - 2.0 * g3
            + 7.0 * g2
            + 9.0 * g
            + 2.0;
        let p2 = -3.0 * m3 * g5
            - 10.0 * m3 * g4
            - 8.0 * m3 * g3
            - 3.0 * m2 * g5
            - 7.0 * m2 * g4
            - 8.0 * m2 * g3
            - 4.0 * m2 * g2
            - m * g5
            + 4.0 * m * g4
            + 19.0 * m * g3
            + 22.0 * m * g2
            + 8.0 * m * g
            - g5
            - 3.0 * g4
            + g3
            + 11.0 * g2
            + 12.0 * g
            + 4.0;
        Ok(Self {
            gamma,
            mu_f_bar,
            alpha1: 2.0 / m2 * (g * (1.0 - m2) + 1.0 / g + 2.0),
            alpha2: 2.0 * g * s,
            alpha3: 2.0 * (g + 1.0) * s / m,
            s,
            c,
            d,
            e,
            d_prime,
            p1,
            p2,
        })
    }

    /// `μλ = (γ + γμ̄ + 1)/(γμ̄)`, the λ-free product.
    pub fn mu_lambda(&self) -> f64 {
        (self.gamma + self.gamma * self.mu_f_bar + 1.0) / (self.gamma * self.mu_f_bar)
    }

    pub fn is_degenerate(&self) -> bool {
        self.d.abs() <= f64::EPSILON || self.d_prime.abs() <= f64::EPSILON
    }

    /// Required nonnegativity of `D`, `E`, `P₂`; returns the failing names.
    pub fn sign_failures(&self) -> Vec<String> {
        [("D", self.d), ("E", self.e), ("P2", self.p2)]
            .iter()
            .filter(|(_, v)| *v < 0.0)
            .map(|(n, v)| format!("gamma={} mu_f_bar={}: {n}={v:e}", self.gamma, self.mu_f_bar))
            .collect()
    }
}

/// Free variables of the certificate (`x⋆ = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct Prop44Sample {
    pub w: Vector,
    pub w_star: Vector,
    pub x: Vector,
    pub y: Vector,
    pub u_y: Vector,
}

/// Named term groups of `LHS − RHS` at relaxation `lambda`.
///
/// LHS weights the three monotonicity inequalities by `α₃, α₁, α₂`. RHS is
/// `μ²‖Tw − w‖² − ‖w − w⋆‖²` minus three weighted squares; the squares are
/// written in the variables shifted by `Bx⋆ = w⋆/γ`.
pub fn prop44_groups(
    k: &Prop44Constants,
    lambda: f64,
    s: &Prop44Sample,
) -> Result<Vec<(&'static str, f64)>> {
    let dim = s.w.len();
    for v in [&s.w_star, &s.x, &s.y, &s.u_y] {
        check_dim(dim, v.len())?;
    }
    let (g, m) = (k.gamma, k.mu_f_bar);
    let u_x = (&s.w - &s.x) / g;
    let v_y = (&s.x * 2.0 - &s.w - &s.y) / g;
    let bxs = &s.w_star / g;
    let ux_t = &u_x - &bxs;
    let uy_t = &s.u_y - &bxs;
    let vy_t = &v_y + &bxs;
    let dw = &s.w - &s.w_star;
    let duy = &u_x - &s.u_y;

    let rsm = k.alpha3 * ((&s.u_y + &v_y).dot(&s.y) - m * s.y.norm_squared());
    let coco_xy = k.alpha1 * (duy.dot(&(&s.x - &s.y)) - duy.norm_squared());
    let coco_star = k.alpha2 * (uy_t.dot(&s.y) - uy_t.norm_squared());

    let mu = k.mu_lambda() / lambda;
    let step = (&s.y - &s.x) * lambda;
    let contraction = mu * mu * step.norm_squared() - dw.norm_squared();
    let sq_d = &dw
        - &ux_t * (4.0 * g * k.c / k.d)
        - &uy_t * ((g * (g + m * g + 1.0) + k.c / m) / k.d)
        - &vy_t * (2.0 * (m * g + 0.5) * k.c / (m * k.d));
    let sq_e = &ux_t - &uy_t * (k.p1 / k.d_prime)
        + &vy_t * (2.0 * m * g.powi(3) * (2.0 * g + 3.0) / k.d_prime);
    let sq_p = &uy_t * (m - 1.0) - &vy_t;

    Ok(vec![
        ("lhs:rsm", rsm),
        ("lhs:cocoercive-xy", coco_xy),
        ("lhs:cocoercive-star", coco_star),
        ("rhs:contraction", -contraction),
        ("rhs:square-D", k.d * sq_d.norm_squared()),
        ("rhs:square-E", k.e * sq_e.norm_squared()),
        (
            "rhs:square-P2",
            g * k.p2 / (m * m * k.d_prime) * sq_p.norm_squared(),
        ),
    ])
}

/// `(LHS − RHS, Σ|terms|)` at relaxation `lambda`.
pub fn prop44_residual(k: &Prop44Constants, lambda: f64, s: &Prop44Sample) -> Result<(f64, f64)> {
    let groups = prop44_groups(k, lambda, s)?;
    Ok((
        groups.iter().map(|(_, v)| v).sum(),
        groups.iter().map(|(_, v)| v.abs()).sum(),
    ))
}

/// Relaxations at which λ-independence of the residual is checked.
pub const PROP44_LAMBDAS: [f64; 3] = [0.5, 1.0, 1.5];

pub fn check_prop44(
    gamma: f64,
    mu_f_bar: f64,
    trials: usize,
    seed: u64,
) -> Result<CertificateReport> {
    let k = Prop44Constants::new(gamma, mu_f_bar)?;
    if k.is_degenerate() {
        return Ok(CertificateReport {
            id: "prop44".into(),
            trials: 0,
            max_abs_residual: f64::NAN,
            max_rel_residual: None,
            tolerance: PROP44_REL_TOL,
            sign_violations: Vec::new(),
            outcome: Outcome::Degenerate,
            pass: false,
            detail: format!("D={:e} D'={:e}: certificate undefined", k.d, k.d_prime),
        });
    }
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut lambda_spread: f64 = 0.0;
    let mut detail = String::new();
    for t in 0..trials {
        let mut rng = cell_rng(seed, t as u64);
        let dim = random_dim(&mut rng);
        let mut v: Vec<Vector> = (0..5).map(|_| normal_vector(&mut rng, dim)).collect();
        normalize(&mut v);
        let sample = Prop44Sample {
            w: v[0].clone(),
            w_star: v[1].clone(),
            x: v[2].clone(),
            y: v[3].clone(),
            u_y: v[4].clone(),
        };
        let mut per_lambda = Vec::with_capacity(PROP44_LAMBDAS.len());
        for &lambda in &PROP44_LAMBDAS {
            let (r, scale) = prop44_residual(&k, lambda, &sample)?;
            let rel = if scale > 0.0 { r.abs() / scale } else { 0.0 };
            if rel > max_rel || (t == 0 && lambda == PROP44_LAMBDAS[0]) {
                let groups = prop44_groups(&k, lambda, &sample)?;
                detail = format!(
                    "worst trial {t} (lambda={lambda}): {}",
                    groups
                        .iter()
                        .map(|(g, v)| format!("{g}={v:.6e}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
            max_abs = max_abs.max(r.abs());
            max_rel = max_rel.max(rel);
            per_lambda.push((r, scale));
        }
        let (r0, s0) = per_lambda[0];
        for (r, _) in &per_lambda[1..] {
            lambda_spread = lambda_spread.max((r - r0).abs() / s0.max(f64::MIN_POSITIVE));
        }
    }
    let mut violations = k.sign_failures();
    // the contraction term is λ-free up to rounding of the μ/λ and λ(y−x) products
    if lambda_spread > 1e-12 {
        violations.push(format!(
            "gamma={gamma} mu_f_bar={mu_f_bar}: residual depends on lambda (spread {lambda_spread:e})"
        ));
    }
    Ok(CertificateReport::finish(
        "prop44",
        trials,
        max_abs,
        Some(max_rel),
        PROP44_REL_TOL,
        violations,
        detail,
    ))
}

/// Sign conditions on the `points × points` grid `{1/points, …, 1}²`.
pub fn prop44_sign_grid(points: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for i in 1..=points {
        for j in 1..=points {
            let k = Prop44Constants::new(i as f64 / points as f64, j as f64 / points as f64)?;
            out.extend(k.sign_failures());
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Silver-schedule gradient descent

/// `F⋆ − f_i − ⟨g_i, x⋆ − x_i⟩ − ½‖g_i‖²`, nonnegative for 1-smooth convex `F`
/// when `x⋆` is a minimizer.
fn interp_to_star(f_star: f64, fi: f64, gi: &Vector, xi: &Vector, x_star: &Vector) -> f64 {
    f_star - fi - gi.dot(&(x_star - xi)) - 0.5 * gi.norm_squared()
}

/// The potential expression (M.I) at level `k` for iterates `x⁰..x^N`,
/// gradients, values, `F⋆` and `x⋆` (with `N = 2^k − 1`).
pub fn silver_potential(
    k: u32,
    xs: &[Vector],
    gs: &[Vector],
    fs: &[f64],
    f_star: f64,
    x_star: &Vector,
) -> Result<f64> {
    let h = silver_schedule(k)?.values;
    let n = h.len();
    check_dim(n + 1, xs.len())?;
    check_dim(n + 1, gs.len())?;
    check_dim(n + 1, fs.len())?;
    let rk = SILVER_RATIO.powi(k as i32);
    let mut e = (2.0 * rk - 1.0) * (f_star - fs[n]) + 0.5 * (&xs[0] - x_star).norm_squared();
    for i in 0..n {
        e -= h[i] * interp_to_star(f_star, fs[i], &gs[i], &xs[i], x_star);
    }
    e -= rk * interp_to_star(f_star, fs[n], &gs[n], &xs[n], x_star);
    e -= 0.5 * (&xs[n] - &gs[n] * rk - x_star).norm_squared();
    Ok(e)
}

/// Level-one identity: with `g⁰ = (x⁰ − x¹)/h₀`, the combination
/// `ρ·Q(0,1) + Q(1,0)` of interpolation inequalities equals (M.I) at `k = 1`,
/// where `Q(i,j) = f_i − f_j − ⟨g_j, x_i − x_j⟩ − ½‖g_i − g_j‖²`.
pub fn check_lemma51_base(trials: usize, seed: u64) -> Result<CertificateReport> {
    let h0 = silver_schedule(1)?.values[0];
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for t in 0..trials {
        let mut rng = cell_rng(seed, t as u64);
        let dim = random_dim(&mut rng);
        let mut v: Vec<Vector> = (0..4).map(|_| normal_vector(&mut rng, dim)).collect();
        normalize(&mut v);
        let (x0, x1, g1, x_star) = (&v[0], &v[1], &v[2], &v[3]);
        let (f0, f1, f_star): (f64, f64, f64) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let g0 = (x0 - x1) / h0;
        let q = |fi: f64, fj: f64, gi: &Vector, gj: &Vector, xi: &Vector, xj: &Vector| {
            fi - fj - gj.dot(&(xi - xj)) - 0.5 * (gi - gj).norm_squared()
        };
        let lhs = SILVER_RATIO * q(f0, f1, &g0, g1, x0, x1) + q(f1, f0, g1, &g0, x1, x0);
        let rhs = silver_potential(
            1,
            &[x0.clone(), x1.clone()],
            &[g0.clone(), g1.clone()],
            &[f0, f1],
            f_star,
            x_star,
        )?;
        let r = (lhs - rhs).abs();
        if r > worst || t == 0 {
            worst = r;
            detail = format!("worst trial {t}: lhs={lhs:.6e} rhs={rhs:.6e}");
        }
    }
    Ok(CertificateReport::finish(
        "lemma51-base",
        trials,
        worst,
        None,
        IDENTITY_TOL,
        Vec::new(),
        detail,
    ))
}

fn require_unit_smooth(f: &FunctionOracle) -> Result<f64> {
    match f.smoothness() {
        Some(l) if l <= 1.0 + 1e-12 => Ok(l),
        Some(l) => Err(SplitError::NotApplicable(format!(
            "function is {l}-smooth; rescale to 1-smooth first"
        ))),
        None => Err(SplitError::NotApplicable("function is not smooth".into())),
    }
}

/// Runs silver-schedule gradient descent from `x0` and evaluates (M.I) with
/// the true values and gradients; passes when (M.I) ≥ −[`TRAJECTORY_TOL`].
pub fn check_lemma51_trajectory(
    k: u32,
    f: &FunctionOracle,
    x0: &Vector,
    x_star: &Vector,
) -> Result<CertificateReport> {
    require_unit_smooth(f)?;
    check_dim(f.dim(), x_star.len())?;
    let schedule = silver_schedule(k)?;
    let run = gd_run(f, &schedule.values, x0)?;
    let f_star = f.value(x_star)?;
    let potential = silver_potential(k, &run.x, &run.gradients, &run.values, f_star, x_star)?;
    let shortfall = (-potential).max(0.0);
    let mut report = CertificateReport::finish(
        "lemma51-traj",
        1,
        shortfall,
        None,
        TRAJECTORY_TOL,
        Vec::new(),
        format!("k={k} potential={potential:.6e}"),
    );
    report.pass = potential >= -TRAJECTORY_TOL;
    Ok(report)
}

/// Samples `F(y) ≥ F(x) + ⟨∇F(x), y − x⟩ + ‖∇F(y) − ∇F(x)‖²/(2L)`.
pub fn check_interpolation(
    f: &FunctionOracle,
    trials: usize,
    seed: u64,
) -> Result<CertificateReport> {
    let l = f
        .smoothness()
        .ok_or_else(|| SplitError::NotApplicable("function is not smooth".into()))?;
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for t in 0..trials {
        let mut rng = cell_rng(seed, t as u64);
        let scale = rng.gen_range(0.1..3.0);
        let x = normal_vector(&mut rng, f.dim()) * scale;
        let y = normal_vector(&mut rng, f.dim()) * scale;
        let gx = f.gradient(&x)?;
        let gy = f.gradient(&y)?;
        let gap = f.value(&y)?
            - f.value(&x)?
            - gx.dot(&(&y - &x))
            - (&gy - &gx).norm_squared() / (2.0 * l);
        if -gap > worst {
            worst = -gap;
            detail = format!("worst trial {t}: gap={gap:.6e}");
        }
    }
    Ok(CertificateReport::finish(
        "interp",
        trials,
        worst,
        None,
        INTERPOLATION_TOL,
        Vec::new(),
        detail,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;
    use nalgebra::dvector;

    // Independent oracle: LHS − RHS as a quadratic form in (w¹..w^{N+1})
    // must have the zero coefficient matrix.
    fn coefficient_matrix(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n + 1, n + 1);
        for t in thm31_terms(n).unwrap() {
            let c = Vector::from_vec(t.combo.clone());
            m += &c * c.transpose() * t.weight;
        }
        m
    }

    #[test]
    fn thm31_coefficients_cancel_exactly() {
        for n in 2..=12 {
            let m = coefficient_matrix(n);
            assert!(m.amax() < 1e-12, "N={n}: {}", m.amax());
        }
    }

    #[test]
    fn thm31_sampled() {
        let r = check_thm31_identity(2, 1, 100, 0).unwrap();
        assert!(r.pass && r.max_abs_residual <= 1e-9, "{r}");
        let zero = vec![Vector::zeros(2); 4];
        assert_eq!(thm31_residual(3, &zero).unwrap(), 0.0);
        assert!(check_thm31_identity(1, 1, 1, 0).is_err());
        assert_eq!(
            check_thm31_identity(5, 3, 20, 9).unwrap(),
            check_thm31_identity(5, 3, 20, 9).unwrap()
        );
    }

    #[test]
    fn thm31_homogeneous_of_degree_two() {
        let mut rng = cell_rng(5, 0);
        let w: Vec<Vector> = (0..5).map(|_| normal_vector(&mut rng, 3)).collect();
        let base = thm31_residual(4, &w).unwrap();
        let scaled: Vec<Vector> = w.iter().map(|v| v * 3.0).collect();
        let r = thm31_residual(4, &scaled).unwrap();
        assert!((r - 9.0 * base).abs() <= 1e-12 * (1.0 + r.abs()) + 1e-13);
    }

    #[test]
    fn prop44_constants_at_one() {
        let k = Prop44Constants::new(1.0, 1.0).unwrap();
        assert_eq!((k.s, k.c, k.d), (3.0, 6.0, 11.0));
        assert!((k.e - 51.0 / 11.0).abs() < 1e-13);
        assert_eq!((k.d_prime, k.p1, k.p2), (17.0, 17.0, 33.0));
        assert_eq!(k.mu_lambda(), 3.0);
        assert!(Prop44Constants::new(0.0, 0.5).is_err());
        assert!(Prop44Constants::new(1.0, 1.5).is_err());
    }

    #[test]
    fn prop44_identity_and_signs() {
        for (g, m) in [(1.0, 1.0), (0.3, 0.7), (0.05, 0.05), (1.0, 0.05)] {
            let r = check_prop44(g, m, 50, 1).unwrap();
            assert!(r.pass, "{r}");
        }
        assert!(prop44_sign_grid(20).unwrap().is_empty());
        let k = Prop44Constants::new(0.5, 0.5).unwrap();
        let z = Vector::zeros(2);
        let s = Prop44Sample {
            w: z.clone(),
            w_star: z.clone(),
            x: z.clone(),
            y: z.clone(),
            u_y: z,
        };
        assert_eq!(prop44_residual(&k, 1.0, &s).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn prop44_unshifted_form_only_holds_at_zero_fixed_point() {
        // with w⋆ = 0 the shift vanishes; this pins the sample plumbing
        let k = Prop44Constants::new(0.7, 0.4).unwrap();
        let s = Prop44Sample {
            w: dvector![0.3, -0.2],
            w_star: dvector![0.0, 0.0],
            x: dvector![0.1, 0.5],
            y: dvector![-0.4, 0.2],
            u_y: dvector![0.25, 0.1],
        };
        let (r, scale) = prop44_residual(&k, 1.0, &s).unwrap();
        assert!(r.abs() <= 1e-12 * scale);
    }

    #[test]
    fn lemma51_base_identity() {
        let r = check_lemma51_base(100, 3).unwrap();
        assert!(r.max_abs_residual <= 1e-9, "{r}");
    }

    #[test]
    fn lemma51_trajectory_examples() {
        let f = FunctionOracle::half_squared_norm(1);
        let r = check_lemma51_trajectory(2, &f, &dvector![1.0], &dvector![0.0]).unwrap();
        assert!(r.pass, "{r}");
        let r = check_lemma51_trajectory(3, &f, &dvector![0.0], &dvector![0.0]).unwrap();
        assert!(r.pass && r.max_abs_residual == 0.0);
        let l1 = FunctionOracle::l1(1, 1.0).unwrap();
        assert!(check_lemma51_trajectory(1, &l1, &dvector![1.0], &dvector![0.0]).is_err());
        let steep = FunctionOracle::quadratic(Matrix::identity(1, 1) * 2.0, dvector![0.0]).unwrap();
        assert!(check_lemma51_trajectory(1, &steep, &dvector![1.0], &dvector![0.0]).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let f = FunctionOracle::half_squared_norm(2);
        let r = check_interpolation(&f, 50, 0).unwrap();
        assert!(r.pass && r.max_abs_residual <= 1e-12);
        for delta in [0.01, 0.5, 2.0] {
            let h = FunctionOracle::huber(3, delta).unwrap();
            assert!(check_interpolation(&h, 100, 1).unwrap().pass);
        }
        assert!(check_interpolation(&FunctionOracle::l1(1, 1.0).unwrap(), 1, 0).is_err());
    }
}
