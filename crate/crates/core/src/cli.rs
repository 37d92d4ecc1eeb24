//! Command-line front end of the `splitlab` binary.
//!
//! Exit codes: 0 success, 1 a bound check or certificate failed, 2 usage
//! error, 3 a conjecture search found a violation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::algorithms::silver_schedule;
use crate::certificates::{
    check_interpolation, check_lemma51_base, check_lemma51_trajectory, check_prop44,
    check_thm31_identity, prop44_sign_grid, CertificateReport, CERTIFICATE_IDS,
};
use crate::harness::{
    algorithm_for, bound_for, conjecture_search, huber_tightness_sweep, run_experiment,
    smooth_case, two_subspace_extras, verify_bound, AlgorithmId, ExperimentConfig, HuberGrid,
    RunParams, BOUND_CSV_HEADER, SEARCH_TARGETS,
};
use crate::instances::build_instance;
use crate::operators::FunctionOracle;
use crate::rates::BoundParams;
use crate::{Result, SplitError, Vector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "splitlab",
    version,
    about = "Douglas-Rachford splitting laboratory"
)]
struct Cli {
    /// JSON document with a "command" field and the flags of that command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the silver stepsize schedule, one value per line.
    Silver(SilverArgs),
    /// Run an algorithm on an instance and write the trace CSV.
    Run(RunArgs),
    /// Compare one run against a bound.
    Check(CheckArgs),
    /// Evaluate proof certificates.
    Certify(CertifyArgs),
    /// Search random instances for conjecture violations.
    Search(SearchArgs),
    /// Sweep Huber thresholds against the silver gradient-descent bound.
    HuberSweep(HuberSweepArgs),
}

#[derive(Args, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SilverArgs {
    #[arg(skip)]
    #[serde(default)]
    #[serde(rename = "command")]
    _command: Option<String>,
    #[arg(long)]
    k: u32,
}

#[derive(Args, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunArgs {
    #[arg(skip)]
    #[serde(default)]
    #[serde(rename = "command")]
    _command: Option<String>,
    #[arg(long)]
    instance: String,
    /// Instance parameter `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    #[serde(default, deserialize_with = "params_from_map")]
    params: Vec<String>,
    #[arg(long)]
    gamma: f64,
    #[arg(long, conflicts_with = "lambda_schedule")]
    #[serde(default)]
    lambda: Option<f64>,
    /// Per-iterate relaxation, e.g. `silver:3`.
    #[arg(long = "lambda-schedule")]
    #[serde(default, rename = "lambda-schedule", alias = "lambda_schedule")]
    lambda_schedule: Option<String>,
    #[arg(long)]
    iters: usize,
    /// Comma-separated starting point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    w1: Option<Vec<f64>>,
    /// `drs` or `accel`.
    #[arg(long)]
    #[serde(default)]
    algorithm: Option<String>,
    #[arg(long)]
    #[serde(default)]
    out: Option<PathBuf>,
    /// Also print dist_P(y^N) next to both closed forms (two-subspace only).
    #[arg(long)]
    #[serde(default)]
    extras: bool,
}

#[derive(Args, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckArgs {
    #[arg(skip)]
    #[serde(default)]
    #[serde(rename = "command")]
    _command: Option<String>,
    #[arg(long)]
    bound: String,
    #[arg(long)]
    instance: String,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    #[serde(default, deserialize_with = "params_from_map")]
    params: Vec<String>,
    /// Bound parameter override `key=value` (mu, r, k, beta, mu_f, L); repeatable.
    #[arg(long = "bound-param", value_name = "KEY=VALUE")]
    #[serde(
        default,
        rename = "bound-params",
        alias = "bound_params",
        deserialize_with = "params_from_map"
    )]
    bound_params: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    lambda: f64,
    #[arg(long)]
    iters: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    w1: Option<Vec<f64>>,
    /// Print the report as a CSV row under its header.
    #[arg(long)]
    #[serde(default)]
    csv: bool,
}

#[derive(Args, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertifyArgs {
    #[arg(skip)]
    #[serde(default)]
    #[serde(rename = "command")]
    _command: Option<String>,
    /// thm31, prop44, lemma51-base, lemma51-traj, interp or all.
    #[arg(long, default_value = "all")]
    #[serde(default = "all")]
    which: String,
    #[arg(long, default_value_t = 100)]
    #[serde(default = "hundred")]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    seed: u64,
}

#[derive(Args, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchArgs {
    #[arg(skip)]
    #[serde(default)]
    #[serde(rename = "command")]
    _command: Option<String>,
    /// A conjecture id or `all`.
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1000)]
    #[serde(default = "thousand")]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    #[serde(default = "five")]
    dim: usize,
}

#[derive(Args, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HuberSweepArgs {
    #[arg(skip)]
    #[serde(default)]
    #[serde(rename = "command")]
    _command: Option<String>,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 4001)]
    #[serde(default = "grid_points")]
    points: usize,
}

fn one() -> f64 {
    1.0
}
fn all() -> String {
    "all".into()
}
fn hundred() -> usize {
    100
}
fn thousand() -> usize {
    1000
}
fn five() -> usize {
    5
}
fn grid_points() -> usize {
    HuberGrid::default().points
}

/// Accepts `{"key": value}` in JSON and turns it into `key=value` strings.
fn params_from_map<'de, D>(de: D) -> std::result::Result<Vec<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let map = BTreeMap::<String, serde_json::Value>::deserialize(de)?;
    Ok(map
        .into_iter()
        .map(|(k, v)| match v {
            serde_json::Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect())
}

#[derive(Deserialize)]
struct ConfigHead {
    command: String,
}

fn command_from_config(text: &str) -> std::result::Result<Command, serde_json::Error> {
    let head: ConfigHead = serde_json::from_str(text)?;
    Ok(match head.command.as_str() {
        "silver" => Command::Silver(serde_json::from_str(text)?),
        "run" => Command::Run(serde_json::from_str(text)?),
        "check" => Command::Check(serde_json::from_str(text)?),
        "certify" => Command::Certify(serde_json::from_str(text)?),
        "search" => Command::Search(serde_json::from_str(text)?),
        "huber-sweep" => Command::HuberSweep(serde_json::from_str(text)?),
        other => {
            return Err(serde::de::Error::custom(format!(
                "unknown command `{other}` (expected silver, run, check, certify, search or huber-sweep)"
            )))
        }
    })
}

/// Parses a configuration document; errors carry line and column.
pub fn parse_config(text: &str) -> Result<()> {
    command_from_config(text)
        .map(|_| ())
        .map_err(|e| SplitError::Usage(format!("config: {e}")))
}

fn load_config(path: &PathBuf) -> Result<Command> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SplitError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    command_from_config(&text)
        .map_err(|e| SplitError::Usage(format!("config {}: {e}", path.display())))
}

fn parse_pairs(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    pairs
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| SplitError::Usage(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

/// Formats `v` with 17 significant digits in positional notation.
pub fn seventeen_digits(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.16}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Runs the command line `args` (program name first), writing to `out` and
/// `err`; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let command = match (cli.config, cli.command) {
        (Some(_), Some(_)) => Err(SplitError::Usage(
            "give either --config or a subcommand, not both".into(),
        )),
        (Some(path), None) => load_config(&path),
        (None, Some(c)) => Ok(c),
        (None, None) => Err(SplitError::Usage("missing subcommand (try --help)".into())),
    };
    let result = command.and_then(|c| dispatch(c, out));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                SplitError::Usage(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn io<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| SplitError::Usage(format!("output error: {e}")))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Silver(a) => {
            for v in silver_schedule(a.k)?.values {
                io(writeln!(out, "{}", seventeen_digits(v)))?;
            }
            Ok(EXIT_OK)
        }
        Command::Run(a) => cmd_run(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Search(a) => cmd_search(a, out),
        Command::HuberSweep(a) => {
            let grid = HuberGrid {
                points: a.points,
                ..HuberGrid::default()
            };
            let report = huber_tightness_sweep(a.k, &grid)?;
            io(writeln!(out, "{report}"))?;
            Ok(if report.violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            })
        }
    }
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Result<i32> {
    let config = ExperimentConfig {
        instance: a.instance,
        params: parse_pairs(&a.params)?,
        gamma: a.gamma,
        lambda: a.lambda,
        lambda_schedule: a.lambda_schedule,
        iters: a.iters,
        w1: a.w1,
        algorithm: a.algorithm,
    };
    let output = run_experiment(&config)?;
    match &a.out {
        Some(path) => std::fs::write(path, &output.csv)
            .map_err(|e| SplitError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => io(out.write_all(output.csv.as_bytes()))?,
    }
    if a.extras {
        if output.instance.id != "two-subspace" {
            return Err(SplitError::Usage(
                "--extras applies to the two-subspace instance".into(),
            ));
        }
        let n: usize = config
            .params
            .get("N")
            .map_or(Ok(2), |v| v.parse())
            .map_err(|_| SplitError::Usage("instance parameter N is not an integer".into()))?;
        io(writeln!(out, "{}", two_subspace_extras(n, &output.trace)?))?;
    }
    Ok(EXIT_OK)
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let instance = build_instance(&a.instance, &parse_pairs(&a.params)?)?;
    let mut overrides = BoundParams::default();
    for (k, v) in parse_pairs(&a.bound_params)? {
        overrides.set(&k, &v)?;
    }
    let bound = bound_for(&a.bound, &instance, a.gamma, a.lambda, a.iters, &overrides)?;
    let mut params = RunParams::new(a.gamma, a.lambda);
    if let Some(w) = a.w1 {
        params = params.with_start(Vector::from_vec(w));
    }
    let report = verify_bound(&instance, algorithm_for(&bound), &bound, &params, a.iters)?;
    if a.csv {
        io(writeln!(out, "{BOUND_CSV_HEADER}\n{}", report.csv_row()))?;
    } else {
        io(writeln!(out, "{report}"))?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

/// Runs the certificate suite named `which` (`all` for every certificate).
pub fn certificate_suite(which: &str, trials: usize, seed: u64) -> Result<Vec<CertificateReport>> {
    let ids: Vec<&str> = if which == "all" {
        CERTIFICATE_IDS.to_vec()
    } else if CERTIFICATE_IDS.contains(&which) {
        vec![which]
    } else {
        return Err(SplitError::Usage(format!(
            "unknown certificate `{which}` (expected one of {}, all)",
            CERTIFICATE_IDS.join(", ")
        )));
    };
    let mut reports = Vec::new();
    for id in ids {
        match id {
            "thm31" => {
                for n in 2..=10 {
                    for dim in 1..=5 {
                        let mut r = check_thm31_identity(n, dim, trials, seed)?;
                        r.id = format!("thm31[N={n},dim={dim}]");
                        reports.push(r);
                    }
                }
            }
            "prop44" => {
                let points = 20;
                for i in 1..=points {
                    for j in 1..=points {
                        let (g, m) = (i as f64 / points as f64, j as f64 / points as f64);
                        let mut r = check_prop44(g, m, trials, seed)?;
                        r.id = format!("prop44[gamma={g},mu={m}]");
                        reports.push(r);
                    }
                }
                let signs = prop44_sign_grid(points)?;
                let mut r = CertificateReport {
                    id: "prop44-signs[20x20]".into(),
                    trials: points * points,
                    max_abs_residual: 0.0,
                    max_rel_residual: None,
                    tolerance: 0.0,
                    pass: signs.is_empty(),
                    sign_violations: signs,
                    outcome: crate::certificates::Outcome::Checked,
                    detail: String::new(),
                };
                r.detail = "D >= 0, E >= 0, P2 >= 0 on the grid".into();
                reports.push(r);
            }
            "lemma51-base" => reports.push(check_lemma51_base(trials, seed)?),
            "lemma51-traj" => {
                for k in 1..=4 {
                    let mut worst: Option<CertificateReport> = None;
                    for i in 0..trials as u64 {
                        let (f, x_star, x0) = smooth_case(i, seed)?;
                        let r = check_lemma51_trajectory(k, &f, &x0, &x_star)?;
                        if worst
                            .as_ref()
                            .is_none_or(|w| r.max_abs_residual > w.max_abs_residual || !r.pass)
                        {
                            worst = Some(r);
                        }
                    }
                    if let Some(mut w) = worst {
                        w.id = format!("lemma51-traj[k={k}]");
                        w.trials = trials;
                        reports.push(w);
                    }
                }
            }
            "interp" => {
                let mut fs = vec![("half-square", FunctionOracle::half_squared_norm(3))];
                for delta in [1e-3, 0.1, 1.0, 10.0] {
                    fs.push(("huber", FunctionOracle::huber(3, delta)?));
                }
                for (name, f) in fs {
                    let mut r = check_interpolation(&f, trials, seed)?;
                    r.id = format!("interp[{name}]");
                    reports.push(r);
                }
            }
            _ => unreachable!("filtered above"),
        }
    }
    Ok(reports)
}

fn cmd_certify(a: CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let reports = certificate_suite(&a.which, a.trials, a.seed)?;
    let mut all_pass = true;
    for r in &reports {
        all_pass &= r.pass;
        io(writeln!(out, "{r}"))?;
    }
    io(writeln!(
        out,
        "{}: {} of {} certificate checks passed",
        if all_pass { "PASS" } else { "FAIL" },
        reports.iter().filter(|r| r.pass).count(),
        reports.len()
    ))?;
    Ok(if all_pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_search(a: SearchArgs, out: &mut dyn Write) -> Result<i32> {
    let targets: Vec<&str> = if a.target == "all" {
        SEARCH_TARGETS.to_vec()
    } else {
        vec![a.target.as_str()]
    };
    let mut violated = false;
    for t in targets {
        let report = conjecture_search(t, a.budget, a.seed, a.dim)?;
        violated |= !report.violations.is_empty();
        io(writeln!(out, "{report}"))?;
    }
    Ok(if violated { EXIT_VIOLATION } else { EXIT_OK })
}

/// Algorithm name accepted by `run --algorithm`.
pub fn parse_algorithm(s: &str) -> Result<AlgorithmId> {
    s.parse()
}
