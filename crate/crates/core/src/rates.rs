//! Closed-form convergence bounds and their parameter windows.
//!
//! Every [`BoundSpec`] evaluates to the scalar constant that multiplies the
//! squared initial distance (or, for the error-bound variants, to a rate or
//! an error-bound modulus). Conjectured bounds are labelled as such via
//! [`BoundSpec::is_conjecture`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Result, SplitError, SILVER_RATIO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum BoundSpec {
    /// `λ(N−1)^{N−1} / ((2−λ)N^N)` for relaxed Douglas-Rachford.
    KmSublinear {
        n: usize,
        lambda: f64,
    },
    /// `(N−1)^{N−1} / N^N`, the unit-relaxation case.
    KmSublinearLambda1 {
        n: usize,
    },
    /// `√(1 − (2/λ − 1)/μ²)`, per-step contraction under an error bound.
    LinearErrorBound {
        mu: f64,
        lambda: f64,
    },
    /// Error-bound modulus `1/(1−r)` implied by linear rate `r`.
    ErrorBoundFromRate {
        r: f64,
    },
    /// Error-bound modulus under restricted strong monotonicity and
    /// cocoercivity.
    RsmErrorBound {
        gamma: f64,
        beta: f64,
        mu_f: f64,
        lambda: f64,
    },
    /// `L/(4ρ^k − 2)` for gradient descent with the silver schedule.
    SilverGd {
        k: u32,
        l: f64,
    },
    ConjCocoercive {
        n: usize,
        lambda: f64,
        beta: f64,
        gamma: f64,
    },
    ConjComposite {
        n: usize,
        lambda: f64,
        gamma: f64,
        l: f64,
    },
    ConjSilverDrs {
        k: u32,
        gamma: f64,
        l: f64,
    },
    ConjAccelerated {
        n: usize,
        lambda: f64,
        gamma: f64,
        l: f64,
    },
}

/// Stable string identifiers used on the command line and in CSV output.
pub const BOUND_IDS: [&str; 10] = [
    "km-sublinear",
    "km-sublinear-l1",
    "linear-eb",
    "eb-from-rate",
    "rsm-eb",
    "silver-gd",
    "conj-cocoercive",
    "conj-composite",
    "conj-silver-drs",
    "conj-accel",
];

/// Result of an applicability check.
#[derive(Clone, Debug, PartialEq)]
pub struct Applicability {
    pub applicable: bool,
    pub reason: String,
}

impl Applicability {
    fn ok() -> Self {
        Self {
            applicable: true,
            reason: "all parameter ranges hold".into(),
        }
    }
}

/// `(N−1)^{N−1} / N^N` with `0⁰ = 1`, evaluated as `((N−1)/N)^{N−1} / N`.
pub fn km_constant(n: usize) -> f64 {
    match n {
        0 => f64::NAN,
        1 => 1.0,
        _ => {
            let nf = n as f64;
            ((nf - 1.0) / nf).powi(n as i32 - 1) / nf
        }
    }
}

impl BoundSpec {
    pub fn id(&self) -> &'static str {
        match self {
            BoundSpec::KmSublinear { .. } => "km-sublinear",
            BoundSpec::KmSublinearLambda1 { .. } => "km-sublinear-l1",
            BoundSpec::LinearErrorBound { .. } => "linear-eb",
            BoundSpec::ErrorBoundFromRate { .. } => "eb-from-rate",
            BoundSpec::RsmErrorBound { .. } => "rsm-eb",
            BoundSpec::SilverGd { .. } => "silver-gd",
            BoundSpec::ConjCocoercive { .. } => "conj-cocoercive",
            BoundSpec::ConjComposite { .. } => "conj-composite",
            BoundSpec::ConjSilverDrs { .. } => "conj-silver-drs",
            BoundSpec::ConjAccelerated { .. } => "conj-accel",
        }
    }

    pub fn is_conjecture(&self) -> bool {
        matches!(
            self,
            BoundSpec::ConjCocoercive { .. }
                | BoundSpec::ConjComposite { .. }
                | BoundSpec::ConjSilverDrs { .. }
                | BoundSpec::ConjAccelerated { .. }
        )
    }

    /// Label printed next to the bound in reports.
    pub fn label(&self) -> &'static str {
        if self.is_conjecture() {
            "CONJECTURE"
        } else {
            "THEOREM"
        }
    }

    /// Checks every stated parameter range, honoring open and closed ends.
    pub fn applicable(&self) -> Applicability {
        let mut failures = Vec::new();
        let mut need = |cond: bool, what: String| {
            if !cond {
                failures.push(what);
            }
        };
        match *self {
            BoundSpec::KmSublinear { n, lambda } => {
                need(n >= 1, format!("N = {n} must be >= 1"));
                let window = km_lambda_window(n.max(1));
                need(
                    window.contains(lambda),
                    format!(
                        "lambda = {lambda} outside [1, {}) (window variable read as N)",
                        window.upper
                    ),
                );
            }
            BoundSpec::KmSublinearLambda1 { n } => need(n >= 1, format!("N = {n} must be >= 1")),
            BoundSpec::LinearErrorBound { mu, lambda } => {
                need(
                    lambda > 0.0 && lambda < 2.0,
                    format!("lambda = {lambda} outside (0, 2)"),
                );
                need(
                    mu > 0.0 && mu.is_finite(),
                    format!("mu = {mu} must be positive and finite"),
                );
                if lambda > 0.0 {
                    let floor = 2.0 / lambda - 1.0;
                    need(
                        mu * mu > floor,
                        format!("mu^2 = {} must exceed 2/lambda - 1 = {floor}", mu * mu),
                    );
                }
            }
            BoundSpec::ErrorBoundFromRate { r } => {
                need(r > 0.0 && r < 1.0, format!("rate r = {r} outside (0, 1)"))
            }
            BoundSpec::RsmErrorBound {
                gamma,
                beta,
                mu_f,
                lambda,
            } => {
                need(beta > 0.0, format!("beta = {beta} must be positive"));
                need(mu_f > 0.0, format!("mu_f = {mu_f} must be positive"));
                need(
                    lambda > 0.0 && lambda < 2.0,
                    format!("lambda = {lambda} outside (0, 2)"),
                );
                need(
                    gamma > 0.0 && gamma <= beta,
                    format!("gamma = {gamma} outside (0, beta = {beta}]"),
                );
            }
            BoundSpec::SilverGd { k, l } => {
                need(k >= 1, format!("k = {k} must be >= 1"));
                need(l > 0.0, format!("L = {l} must be positive"));
            }
            BoundSpec::ConjCocoercive {
                n,
                lambda,
                beta,
                gamma,
            } => {
                need(n >= 1, format!("N = {n} must be >= 1"));
                need(beta > 0.0, format!("beta = {beta} must be positive"));
                need(
                    gamma > 0.0 && gamma < beta,
                    format!("gamma = {gamma} outside (0, beta = {beta})"),
                );
                need(
                    lambda > 0.0 && lambda < 2.0,
                    format!("lambda = {lambda} outside (0, 2)"),
                );
            }
            BoundSpec::ConjComposite {
                n,
                lambda,
                gamma,
                l,
            } => {
                need(n >= 1, format!("N = {n} must be >= 1"));
                need(l > 0.0, format!("L = {l} must be positive"));
                let gmax = (2.0 * std::f64::consts::SQRT_2 - 1.0) / l;
                need(
                    gamma > 0.0 && gamma < gmax,
                    format!("gamma = {gamma} outside (0, {gmax})"),
                );
                let lmax = (1.0 + 5f64.sqrt()) / 2.0;
                need(
                    lambda > 0.0 && lambda < lmax,
                    format!("lambda = {lambda} outside (0, {lmax})"),
                );
            }
            BoundSpec::ConjSilverDrs { k, gamma, l } => {
                need(k >= 1, format!("k = {k} must be >= 1"));
                need(l > 0.0, format!("L = {l} must be positive"));
                let gmax = (2.0 * std::f64::consts::SQRT_2 - 1.0) / l;
                need(
                    gamma > 0.0 && gamma < gmax,
                    format!("gamma = {gamma} outside (0, {gmax})"),
                );
            }
            BoundSpec::ConjAccelerated {
                n,
                lambda,
                gamma,
                l,
            } => {
                need(n >= 1, format!("N = {n} must be >= 1"));
                need(l > 0.0, format!("L = {l} must be positive"));
                need(
                    gamma > 0.0 && gamma <= 1.0 / l,
                    format!("gamma = {gamma} outside (0, 1/L = {}]", 1.0 / l),
                );
                need(
                    lambda > 0.0 && lambda <= 1.0,
                    format!("lambda = {lambda} outside (0, 1]"),
                );
            }
        }
        if failures.is_empty() {
            Applicability::ok()
        } else {
            Applicability {
                applicable: false,
                reason: failures.join("; "),
            }
        }
    }

    /// Evaluates the bound; parameters must be applicable unless `force`.
    pub fn evaluate(&self, force: bool) -> Result<f64> {
        if !force {
            let check = self.applicable();
            if !check.applicable {
                return Err(SplitError::NotApplicable(format!(
                    "{}: {}",
                    self.id(),
                    check.reason
                )));
            }
        }
        Ok(self.formula())
    }

    fn formula(&self) -> f64 {
        match *self {
            BoundSpec::KmSublinear { n, lambda } => lambda * km_constant(n) / (2.0 - lambda),
            BoundSpec::KmSublinearLambda1 { n } => km_constant(n),
            BoundSpec::LinearErrorBound { mu, lambda } => {
                (1.0 - (2.0 / lambda - 1.0) / (mu * mu)).sqrt()
            }
            BoundSpec::ErrorBoundFromRate { r } => 1.0 / (1.0 - r),
            BoundSpec::RsmErrorBound {
                gamma,
                beta,
                mu_f,
                lambda,
            } => {
                let m = (mu_f * beta).min(1.0);
                (gamma + gamma * m + beta) / (lambda * gamma * m)
            }
            BoundSpec::SilverGd { k, l } => l / (4.0 * SILVER_RATIO.powi(k as i32) - 2.0),
            BoundSpec::ConjCocoercive { n, lambda, .. } => {
                let d = (n as f64 - 1.0) * lambda + 1.0;
                lambda * lambda / (d * d)
            }
            BoundSpec::ConjComposite {
                n, lambda, gamma, ..
            } => 1.0 / (4.0 * gamma * ((n as f64 - 1.0) * lambda + 1.0)),
            BoundSpec::ConjSilverDrs { k, gamma, .. } => {
                1.0 / (4.0 * gamma * SILVER_RATIO.powi(k as i32))
            }
            BoundSpec::ConjAccelerated {
                n, lambda, gamma, ..
            } => {
                let nf = n as f64;
                2.0 / (gamma * ((nf * nf + 7.0 * nf - 8.0) * lambda + 8.0))
            }
        }
    }
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.id(), self.label())
    }
}

/// Parameters from which any bound can be assembled by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundParams {
    pub n: Option<usize>,
    pub k: Option<u32>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub r: Option<f64>,
    pub beta: Option<f64>,
    pub mu_f: Option<f64>,
    pub l: Option<f64>,
}

fn req<T: Copy>(v: Option<T>, name: &str, id: &str) -> Result<T> {
    v.ok_or_else(|| SplitError::Usage(format!("bound {id} requires parameter `{name}`")))
}

impl BoundParams {
    /// Builds the bound named `id` from these parameters.
    pub fn build(&self, id: &str) -> Result<BoundSpec> {
        Ok(match id {
            "km-sublinear" => BoundSpec::KmSublinear {
                n: req(self.n, "N", id)?,
                lambda: req(self.lambda, "lambda", id)?,
            },
            "km-sublinear-l1" => BoundSpec::KmSublinearLambda1 {
                n: req(self.n, "N", id)?,
            },
            "linear-eb" => BoundSpec::LinearErrorBound {
                mu: req(self.mu, "mu", id)?,
                lambda: req(self.lambda, "lambda", id)?,
            },
            "eb-from-rate" => BoundSpec::ErrorBoundFromRate {
                r: req(self.r, "r", id)?,
            },
            "rsm-eb" => BoundSpec::RsmErrorBound {
                gamma: req(self.gamma, "gamma", id)?,
                beta: req(self.beta, "beta", id)?,
                mu_f: req(self.mu_f, "mu_f", id)?,
                lambda: req(self.lambda, "lambda", id)?,
            },
            "silver-gd" => BoundSpec::SilverGd {
                k: req(self.k, "k", id)?,
                l: self.l.unwrap_or(1.0),
            },
            "conj-cocoercive" => BoundSpec::ConjCocoercive {
                n: req(self.n, "N", id)?,
                lambda: req(self.lambda, "lambda", id)?,
                beta: req(self.beta, "beta", id)?,
                gamma: req(self.gamma, "gamma", id)?,
            },
            "conj-composite" => BoundSpec::ConjComposite {
                n: req(self.n, "N", id)?,
                lambda: req(self.lambda, "lambda", id)?,
                gamma: req(self.gamma, "gamma", id)?,
                l: req(self.l, "L", id)?,
            },
            "conj-silver-drs" => BoundSpec::ConjSilverDrs {
                k: req(self.k, "k", id)?,
                gamma: req(self.gamma, "gamma", id)?,
                l: req(self.l, "L", id)?,
            },
            "conj-accel" => BoundSpec::ConjAccelerated {
                n: req(self.n, "N", id)?,
                lambda: req(self.lambda, "lambda", id)?,
                gamma: req(self.gamma, "gamma", id)?,
                l: req(self.l, "L", id)?,
            },
            other => {
                return Err(SplitError::Usage(format!(
                    "unknown bound id `{other}` (expected one of {})",
                    BOUND_IDS.join(", ")
                )))
            }
        })
    }
}

/// Half-open relaxation window `[lower, upper)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaWindow {
    pub lower: f64,
    pub upper: f64,
    pub note: &'static str,
}

impl LambdaWindow {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lower && lambda < self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.upper <= self.lower
    }
}

pub const KM_WINDOW_NOTE: &str =
    "interpretation: the window variable of the relaxed sublinear rate is read as the iteration count N";

/// `[1, 1 + √((N−1)/N))`, the relaxation window of the relaxed sublinear rate.
pub fn km_lambda_window(n: usize) -> LambdaWindow {
    let nf = n.max(1) as f64;
    LambdaWindow {
        lower: 1.0,
        upper: 1.0 + ((nf - 1.0) / nf).sqrt(),
        note: KM_WINDOW_NOTE,
    }
}

impl FromStr for BoundSpec {
    type Err = SplitError;

    /// Parses `id:key=value,key=value`, e.g. `km-sublinear-l1:n=4`.
    fn from_str(s: &str) -> Result<Self> {
        let (id, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut p = BoundParams::default();
        for kv in rest.split(',').filter(|t| !t.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| SplitError::Usage(format!("expected key=value, got `{kv}`")))?;
            p.set(key.trim(), value.trim())?;
        }
        p.build(id)
    }
}

impl BoundParams {
    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || {
            value.parse::<f64>().map_err(|_| {
                SplitError::Usage(format!("parameter `{key}`: `{value}` is not a number"))
            })
        };
        let int = || {
            value.parse::<usize>().map_err(|_| {
                SplitError::Usage(format!("parameter `{key}`: `{value}` is not an integer"))
            })
        };
        match key {
            "n" | "N" | "iters" => self.n = Some(int()?),
            "k" => self.k = Some(int()? as u32),
            "lambda" => self.lambda = Some(float()?),
            "gamma" => self.gamma = Some(float()?),
            "mu" => self.mu = Some(float()?),
            "r" => self.r = Some(float()?),
            "beta" => self.beta = Some(float()?),
            "mu_f" | "mu-f" => self.mu_f = Some(float()?),
            "l" | "L" => self.l = Some(float()?),
            _ => {
                return Err(SplitError::Usage(format!(
                    "unknown bound parameter `{key}`"
                )))
            }
        }
        Ok(())
    }
}
