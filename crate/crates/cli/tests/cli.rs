use std::path::PathBuf;
use std::process::{Command, Output};

use meanineq_cli::report::{to_json, Report};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn meanineq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanineq")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn analyze_machine(config: &str, extra: &[&str]) -> Output {
    let path = fixture(config);
    let mut args = vec!["analyze", "--format", "machine", "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    meanineq(&args)
}

fn without_timings(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

/// Structural equality with floats compared to a relative `1e-9`, so that
/// last-bit libm differences between platforms do not break goldens.
fn assert_close(actual: &Value, expected: &Value, path: &str) {
    match (actual, expected) {
        (Value::Number(a), Value::Number(b)) if a.is_f64() || b.is_f64() => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300), "{path}: {a} vs {b}");
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: length");
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(x, y, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>(), "{path}: keys");
            for (k, x) in a {
                assert_close(x, &b[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(actual, expected, "{path}"),
    }
}

#[test]
fn golden_reports() {
    for (config, code) in [
        ("minkowski_p2.toml", 0),
        ("minkowski_half.toml", 1),
        ("hoelder_conjugate.toml", 0),
        ("gamma_sum.toml", 0),
        ("unequal_weights.toml", 1),
    ] {
        let out = analyze_machine(config, &[]);
        assert_eq!(out.status.code(), Some(code), "{config}: {}", String::from_utf8_lossy(&out.stderr));
        let actual = without_timings(&stdout(&out));
        let golden = fixture(&config.replace(".toml", ".golden.json"));
        if std::env::var_os("MEANINEQ_BLESS").is_some() {
            std::fs::write(&golden, serde_json::to_string_pretty(&actual).unwrap() + "\n").unwrap();
        }
        let expected: Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
        assert_close(&actual, &expected, config);
    }
}

#[test]
fn spec_level_verdicts() {
    let report = |config: &str| -> Report { serde_json::from_str(&stdout(&analyze_machine(config, &[]))).unwrap() };
    let p2 = report("minkowski_p2.toml");
    assert!(p2.counterexample.is_none());
    assert!(p2.global.iter().any(|g| g.exact && g.verdict.holds()));
    let half = report("minkowski_half.toml");
    let w = half.counterexample.expect("witness");
    assert!(w.witness.gap < -1e-9 && w.found.gap < -1e-9);
    assert_eq!(w.witness.x.rows(), 2);
    let holder = report("hoelder_conjugate.toml");
    assert_eq!(holder.basis, "Hölder characterization for all n");
    assert_eq!(holder.local.unwrap().class, meanineq::local::LocalClass::Boundary);
}

#[test]
fn report_round_trip_is_byte_identical() {
    for config in ["minkowski_p2.toml", "minkowski_half.toml", "unequal_weights.toml"] {
        let text = stdout(&analyze_machine(config, &[]));
        let parsed: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(to_json(&parsed), text, "{config}");
    }
}

#[test]
fn witnesses_revalidate_through_eval() {
    let text = stdout(&analyze_machine("minkowski_half.toml", &[]));
    let report: Report = serde_json::from_str(&text).unwrap();
    let path = fixture("minkowski_half.toml");
    for w in [&report.counterexample.as_ref().unwrap().witness, &report.counterexample.as_ref().unwrap().found] {
        let x = w
            .x
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";");
        let side = |q: &str| -> f64 {
            let out = meanineq(&[
                "eval",
                q,
                "--format",
                "machine",
                "--config",
                path.to_str().unwrap(),
                &format!("x={x}"),
            ]);
            assert_eq!(out.status.code(), Some(0));
            serde_json::from_str::<Value>(&stdout(&out)).unwrap()["value"].as_f64().unwrap()
        };
        let (lhs, rhs) = (side("lhs"), side("rhs"));
        assert_eq!(lhs, w.lhs);
        assert_eq!(rhs, w.rhs);
        assert!(rhs - lhs < -1e-9);
    }
}

#[test]
fn eval_examples() {
    assert_eq!(stdout(&meanineq(&["eval", "gini", "r=2", "s=1", "w=0.5,0.5", "x=1,3"])), "2.5\n");
    assert_eq!(stdout(&meanineq(&["eval", "chi", "r=2", "s=1", "t=1"])), "0\n");
    let path = fixture("gamma_sum.toml");
    let out = meanineq(&["eval", "gamma", "--config", path.to_str().unwrap(), "y=1,1"]);
    assert_eq!(stdout(&out), "[[1.5, -0.5], [-0.5, 1.5]]\n");
    let out = meanineq(&["eval", "gamma", "--format", "machine", "--config", path.to_str().unwrap(), "y=1,1"]);
    assert_eq!(stdout(&out), "{\"quantity\":\"gamma\",\"value\":[[1.5,-0.5],[-0.5,1.5]]}\n");
}

#[test]
fn exit_statuses() {
    let code = |o: Output| o.status.code();
    assert_eq!(code(analyze_machine("minkowski_p2.toml", &[])), Some(0));
    assert_eq!(code(analyze_machine("minkowski_half.toml", &[])), Some(1));
    // no budget left to confirm the predicted failure
    assert_eq!(code(analyze_machine("minkowski_half.toml", &["--budget", "0"])), Some(2));
    assert_eq!(code(meanineq(&["analyze"])), Some(64));
    assert_eq!(code(meanineq(&["analyze", "--config", "/nonexistent.toml"])), Some(64));
    assert_eq!(code(meanineq(&["frobnicate"])), Some(64));
    assert_eq!(code(meanineq(&["eval", "gini", "r=2", "s=1", "x=1,-3"])), Some(65));
    assert_eq!(code(meanineq(&["eval", "gini", "r=2", "x=1,3"])), Some(64));
    assert_eq!(code(meanineq(&["--help"])), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(fixture("minkowski_p2.toml")).unwrap();
    std::fs::write(&bad, format!("{text}\nunexpected = true\n")).unwrap();
    assert_eq!(code(meanineq(&["analyze", "--config", bad.to_str().unwrap()])), Some(64));
    let path = fixture("gamma_sum.toml");
    let outside = meanineq(&["eval", "lhs", "--config", path.to_str().unwrap(), "x=1,1;3,1"]);
    assert_eq!(code(outside), Some(65));
}

#[test]
fn selftest_gate() {
    let a = meanineq(&["selftest", "--seed", "3", "--format", "machine"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let b = meanineq(&["selftest", "--seed", "3", "--format", "machine"]);
    assert_eq!(stdout(&a), stdout(&b));
    let faulty = meanineq(&["selftest", "--inject-fault"]);
    assert_eq!(faulty.status.code(), Some(1));
    assert!(stdout(&faulty).contains("FAILED"));
}

#[test]
fn thread_count_does_not_change_reports() {
    let run = |threads: &str| {
        let path = fixture("minkowski_half.toml");
        let out = Command::new(env!("CARGO_BIN_EXE_meanineq"))
            .args(["analyze", "--format", "machine", "--config", path.to_str().unwrap()])
            .env("MEANINEQ_THREADS", threads)
            .output()
            .unwrap();
        (out.status.code(), without_timings(&stdout(&out)))
    };
    assert_eq!(run("1"), run("4"));
    let bad = Command::new(env!("CARGO_BIN_EXE_meanineq"))
        .args(["selftest"])
        .env("MEANINEQ_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}
