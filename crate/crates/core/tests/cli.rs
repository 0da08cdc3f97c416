//! The binary against direct library calls, plus exit codes and config handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sublinear::catalog::FnSpec;
use sublinear::envelope::{EnvelopeConfig, EnvelopeReport, TimeSeries};
use sublinear::lln_sim::{self, MeanPolicy, NoiseSpec, SimConfig};
use sublinear::mle::{mle_estimate, SampleSet};
use sublinear::{GridSpec, MaximalDist, ScenarioFamily};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sublinear"))
        .args(args)
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn eval_matches_library() {
    let out = json(&[
        "eval",
        "--mu-lo=-1",
        "--mu-hi=2",
        "--phi=sin",
        "--step=0.01",
        "--convolve=1,0.5",
    ]);
    let d = MaximalDist::new(-1.0, 2.0).unwrap();
    let g = GridSpec::new(0.01).unwrap();
    let phi = FnSpec::Sin.build(3.0).unwrap();
    let direct = d.eval_maximal(&phi, &g).unwrap();
    assert_eq!(f(&out["value"]), direct.value);
    assert_eq!(f(&out["argmax"]), direct.argmax);
    assert_eq!(f(&out["error_bound"]), direct.error_bound);
    let conv = d.convolve_scaled(1.0, 0.5, &phi, &g).unwrap();
    assert_eq!(f(&out["convolution"]["value"]), conv.value);
    assert_eq!(
        f(&out["scaled"]["value"]),
        d.eval_maximal(&phi.compose_scale(1.5), &g).unwrap().value
    );
    assert_eq!(out["meta"]["tool"], "sublinear");
    assert_eq!(out["meta"]["command"], "eval");
    assert_eq!(out["meta"]["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn family_eval_matches_library() {
    let dir = TempDir::new().unwrap();
    let text = r#"[{"atoms":[[-1,0.5],[1,0.5]]},{"atoms":[[0,1]]}]"#;
    let path = write(&dir, "fam.json", text);
    let out = json(&["eval", "--family", &path, "--phi=square"]);
    let fam = ScenarioFamily::from_json(text).unwrap();
    let r = fam
        .sublinear_expect(&FnSpec::Square.build(1.0).unwrap())
        .unwrap();
    assert_eq!(
        (f(&out["value"]), out["argmax_index"].as_u64().unwrap()),
        (r.value, r.argmax_index as u64)
    );
    assert_eq!(r.value, 1.0);
}

#[test]
fn simulations_match_library() {
    let out = json(&[
        "--seed=5",
        "rate",
        "--mu-lo=-1",
        "--mu-hi=1",
        "--noise=uniform:0.3",
        "--n-max=100",
        "--reps=30",
        "--policies=constant:-1,periodic:-1;1",
    ]);
    let d = MaximalDist::new(-1.0, 1.0).unwrap();
    let policies = [
        MeanPolicy::Constant(-1.0),
        MeanPolicy::Periodic(vec![-1.0, 1.0]),
    ];
    let cfg = SimConfig::new(100, 30, 5).unwrap();
    let direct = lln_sim::rate_check(
        &d,
        &policies,
        &NoiseSpec::uniform(0.3).unwrap(),
        &cfg,
        &lln_sim::log_schedule(100),
    )
    .unwrap();
    let rows = out["rows"].as_array().unwrap();
    assert_eq!(rows.len(), direct.rows.len());
    for (a, b) in rows.iter().zip(&direct.rows) {
        assert_eq!(a["policy_id"], b.policy_id.as_str());
        assert_eq!(f(&a["estimate"]), b.estimate);
        assert_eq!(f(&a["stderr"]), b.stderr);
        assert_eq!(f(&a["target_or_bound"]), b.target_or_bound);
    }
    assert_eq!(out["generator"], lln_sim::GENERATOR);

    let out = json(&[
        "--seed=9",
        "lln",
        "--mu-lo=0",
        "--mu-hi=1",
        "--phi=neg-square",
        "--n-max=50",
        "--reps=10",
    ]);
    let d = MaximalDist::new(0.0, 1.0).unwrap();
    let direct = lln_sim::empirical_lln(
        &d,
        &FnSpec::NegSquare.build(1.0).unwrap(),
        &[MeanPolicy::Constant(0.0), MeanPolicy::Constant(1.0)],
        &NoiseSpec::None,
        &SimConfig::new(50, 10, 9).unwrap(),
        &GridSpec::new(1e-3).unwrap(),
        None,
    )
    .unwrap();
    let est: Vec<f64> = out["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| f(&r["estimate"]))
        .collect();
    assert_eq!(
        est,
        direct.rows.iter().map(|r| r.estimate).collect::<Vec<_>>()
    );
}

#[test]
fn estimate_and_envelope_match_library() {
    let dir = TempDir::new().unwrap();
    let values: Vec<f64> = (0..40)
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0)
        .collect();
    let mut text = String::from("time,ret\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("2024-{:02}-{:02},{v}\n", 1 + i / 28, 1 + i % 28));
    }
    let path = write(&dir, "z.csv", &text);

    let out = json(&["estimate", "--input", &path, "--header", "--column=ret"]);
    let m = mle_estimate(&SampleSet::new(values.clone()).unwrap());
    assert_eq!(
        (f(&out["mu_lo_hat"]), f(&out["mu_hi_hat"]), f(&out["delta"])),
        (m.mu_lo_hat, m.mu_hi_hat, m.delta)
    );
    assert_eq!(out["n"].as_u64(), Some(40));

    let out = json(&[
        "envelope",
        "--input",
        &path,
        "--header",
        "--column=1",
        "--timestamp-column=time",
        "--window=8",
        "--num-windows=5",
        "--t-index=30",
    ]);
    let cfg = EnvelopeConfig::new(8, 5, true).unwrap();
    let r = EnvelopeReport::compute(
        &TimeSeries::new(values.clone(), None).unwrap(),
        &cfg,
        Some(30),
    )
    .unwrap();
    assert_eq!(
        (f(&out["sigma_lo_sq"]), f(&out["sigma_hi_sq"])),
        (r.sigma_lo_sq, r.sigma_hi_sq)
    );
    assert_eq!((out["L"].as_u64(), out["K"].as_u64()), (Some(8), Some(5)));

    let out = json(&[
        "envelope",
        "--input",
        &path,
        "--header",
        "--column=ret",
        "--window=8",
        "--num-windows=5",
        "--raw",
    ]);
    let cfg = EnvelopeConfig::new(8, 5, false).unwrap();
    let r = EnvelopeReport::compute(&TimeSeries::new(values, None).unwrap(), &cfg, None).unwrap();
    assert_eq!(f(&out["sigma_hi_sq"]), r.sigma_hi_sq);
    assert_eq!(out["demean"], false);
}

#[test]
fn csv_output_has_header_comment() {
    let out = run(&["--format=csv", "verify-axioms", "--cases=50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# sublinear version="));
    assert!(meta.contains("seed=42") && meta.contains("config_digest="));
    assert_eq!(lines.next(), Some("axiom,cases,violations,max_error"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| run(args).status.code();

    assert_eq!(code(&["eval", "--mu-lo=1", "--mu-hi=0"]), Some(2));
    assert_eq!(code(&["eval", "--mu-lo=0"]), Some(2));
    assert_eq!(
        code(&["rate", "--mu-lo=-1", "--mu-hi=1", "--noise=gaussian:1"]),
        Some(2)
    );
    assert_eq!(
        code(&["lln", "--mu-lo=-1", "--mu-hi=1", "--policies=constant:2"]),
        Some(2)
    );
    assert_eq!(
        code(&["envelope", "--input=x.csv", "--window=1", "--num-windows=2"]),
        Some(2)
    );
    assert_eq!(code(&["no-such-command"]), Some(2));

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&["estimate", "--input", missing.to_str().unwrap()]),
        Some(3)
    );
    let bad = write(&dir, "bad.csv", "0.1\nabc\n");
    let out = run(&["estimate", "--input", &bad]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: code=3 kind=data"), "{err}");
    assert!(err.contains("row 2"), "{err}");

    let short = write(&dir, "short.csv", "1\n2\n3\n");
    assert_eq!(
        code(&[
            "envelope",
            "--input",
            &short,
            "--window=3",
            "--num-windows=3"
        ]),
        Some(3)
    );
    let unsorted = write(&dir, "unsorted.csv", "2,0.1\n1,0.2\n");
    assert_eq!(
        code(&["estimate", "--input", &unsorted, "--column=1"]),
        Some(0)
    );
    assert_eq!(
        code(&[
            "envelope",
            "--input",
            &unsorted,
            "--column=1",
            "--timestamp-column=0",
            "--window=2",
            "--num-windows=1"
        ]),
        Some(3)
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "run.cfg",
        "# comment\nmu-lo = -2\nmu-hi = 1\nphi = square\nrefine = true\nseed = 3\n",
    );
    let out = json(&["--config", &cfg, "eval"]);
    assert_eq!(f(&out["value"]), 4.0);
    assert_eq!(out["meta"]["seed"], 3);
    let out = json(&["--config", &cfg, "eval", "--mu-lo=-1", "--seed=8"]);
    assert_eq!(f(&out["value"]), 1.0);
    assert_eq!(out["meta"]["seed"], 8);

    let broken = write(&dir, "broken.cfg", "mu-lo\n");
    assert_eq!(run(&["--config", &broken, "eval"]).status.code(), Some(2));
}

#[test]
fn digest_tracks_config_but_not_output_path() {
    let dir = TempDir::new().unwrap();
    let digest = |args: &[&str]| {
        json(args)["meta"]["config_digest"]
            .as_str()
            .unwrap()
            .to_string()
    };
    let a = digest(&["eval", "--mu-lo=0", "--mu-hi=1"]);
    assert_eq!(a, digest(&["eval", "--mu-hi=1", "--mu-lo=0"]));
    assert_ne!(a, digest(&["eval", "--mu-lo=0", "--mu-hi=1.5"]));
    assert_ne!(a, digest(&["--seed=1", "eval", "--mu-lo=0", "--mu-hi=1"]));

    let out_path = dir.path().join("o.json");
    let st = run(&[
        "--output",
        out_path.to_str().unwrap(),
        "eval",
        "--mu-lo=0",
        "--mu-hi=1",
    ]);
    assert!(st.status.success() && st.stdout.is_empty());
    let written: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(written["meta"]["config_digest"].as_str().unwrap(), a);
}

#[test]
fn failed_runs_leave_no_output() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("never.json");
    let st = run(&[
        "--output",
        out_path.to_str().unwrap(),
        "eval",
        "--mu-lo=1",
        "--mu-hi=0",
    ]);
    assert_eq!(st.status.code(), Some(2));
    assert!(!Path::new(&out_path).exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}
