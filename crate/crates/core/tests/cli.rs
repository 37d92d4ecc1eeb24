use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn splitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name),
    )
    .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const TRACE_ARGS: [&str; 13] = [
    "run",
    "--instance",
    "two-subspace",
    "--param",
    "N=2",
    "--gamma",
    "1",
    "--lambda",
    "1",
    "--iters",
    "2",
    "--w1",
    "1,0",
];

#[test]
fn silver_k3_matches_golden() {
    let o = splitlab(&["silver", "--k", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), golden("silver_k3.txt"));
}

#[test]
fn trace_file_matches_golden_and_is_reproducible() {
    let (a, b) = (scratch("trace_a.csv"), scratch("trace_b.csv"));
    for path in [&a, &b] {
        let mut args = TRACE_ARGS.to_vec();
        args.extend(["--out", path.to_str().unwrap()]);
        let o = splitlab(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(
        String::from_utf8(ta).unwrap(),
        golden("two_subspace_n2.csv")
    );
}

#[test]
fn config_file_mirrors_flags() {
    let path = scratch("run.json");
    std::fs::write(
        &path,
        r#"{
  "command": "run",
  "instance": "two-subspace",
  "params": {"N": 2},
  "gamma": 1.0,
  "lambda": 1.0,
  "iters": 2,
  "w1": [1.0, 0.0]
}"#,
    )
    .unwrap();
    let o = splitlab(&["--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), golden("two_subspace_n2.csv"));
}

#[test]
fn config_errors_name_the_line() {
    let path = scratch("bad.json");
    std::fs::write(
        &path,
        "{\n  \"command\": \"run\",\n  \"instance\": \"two-subspace\",\n  \"gama\": 1\n}",
    )
    .unwrap();
    let o = splitlab(&["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("gama") && err.contains("line 4"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let mut args = TRACE_ARGS.to_vec();
    args[10] = "0";
    assert_eq!(splitlab(&args).status.code(), Some(2));
    assert_eq!(
        splitlab(&["run", "--instance", "nope", "--gamma", "1", "--iters", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(splitlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn check_passes_and_fails_with_exit_codes() {
    let pass = splitlab(&[
        "check",
        "--bound",
        "km-sublinear-l1",
        "--instance",
        "two-subspace",
        "--param",
        "N=5",
        "--iters",
        "5",
        "--csv",
    ]);
    assert_eq!(pass.status.code(), Some(0), "{}", stdout(&pass));
    let text = stdout(&pass);
    assert!(text.starts_with("bound_id,instance_id,gamma,lambda,N,lhs,rhs,ratio,pass\n"));
    assert!(text.trim_end().ends_with(",true"), "{text}");
    let fail = splitlab(&[
        "check",
        "--bound",
        "linear-eb",
        "--bound-param",
        "mu=1.01",
        "--instance",
        "two-subspace",
        "--param",
        "N=5",
        "--iters",
        "10",
    ]);
    assert_eq!(fail.status.code(), Some(1), "{}", stdout(&fail));
}

#[test]
fn certify_thm31_passes() {
    let o = splitlab(&[
        "certify", "--which", "thm31", "--trials", "5", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().last().unwrap().starts_with("PASS"));
}

#[test]
fn search_exit_codes_follow_findings() {
    let clean = splitlab(&[
        "search",
        "--target",
        "conj-composite",
        "--budget",
        "50",
        "--seed",
        "1",
        "--dim",
        "3",
    ]);
    assert_eq!(clean.status.code(), Some(0), "{}", stdout(&clean));
    let found = splitlab(&[
        "search",
        "--target",
        "conj-cocoercive",
        "--budget",
        "1000",
        "--seed",
        "0",
        "--dim",
        "5",
    ]);
    assert_eq!(found.status.code(), Some(3));
    assert!(stdout(&found).contains("replay with target=conj-cocoercive seed=0 cell="));
}

#[test]
fn extras_report_both_closed_forms() {
    let o = splitlab(&[
        "run",
        "--instance",
        "two-subspace",
        "--param",
        "N=4",
        "--gamma",
        "1",
        "--lambda",
        "1",
        "--iters",
        "4",
        "--extras",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let last = stdout(&o).lines().last().unwrap().to_string();
    let field = |key: &str| -> f64 {
        let start = last.find(key).unwrap() + key.len();
        last[start..]
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    let aligned = field("aligned_run=");
    let b = field("sqrt((N-1)^N/N^(N+1))=");
    assert!((aligned - b).abs() < 1e-12, "{last}");
}
