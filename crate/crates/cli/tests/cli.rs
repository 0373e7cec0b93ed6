use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn mbqc(args: &[&str]) -> Output {
    mbqc_env(args, None)
}

fn mbqc_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mbqc"));
    cmd.args(args).env_remove("MBQC_SEED");
    if let Some(s) = seed {
        cmd.env("MBQC_SEED", s);
    }
    cmd.output().expect("spawn mbqc")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_all_on_single_teleport_passes_with_two_branches() {
    let out = mbqc(&[
        "run",
        "--circuit",
        path(&data("single_teleport.json")),
        "--branches",
        "all",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["branches"].as_array().unwrap().len(), 2);
    assert_eq!(r["aggregate"]["branch_count"], 2);
    for b in r["branches"].as_array().unwrap() {
        assert!((b["probability"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        assert!(b["fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    }
}

#[test]
fn report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = mbqc(&[
        "run",
        "--circuit",
        path(&data("single_teleport.json")),
        "--branches",
        "all",
        "--seed",
        "0",
        "--report",
        path(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "report went to the file, not stdout");
    assert_eq!(
        std::fs::read(&report).unwrap(),
        std::fs::read(data("single_teleport.report.json")).unwrap()
    );
}

#[test]
fn report_field_order_is_fixed() {
    let out = mbqc(&[
        "run",
        "--circuit",
        path(&data("h_branch.json")),
        "--seed",
        "3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys = [
        "\"seed\"",
        "\"circuit_digest\"",
        "\"mode\"",
        "\"tolerance\"",
        "\"branches\"",
        "\"aggregate\"",
        "\"verdict\"",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
}

#[test]
fn sampled_runs_are_deterministic() {
    let circuit = data("h_branch.json");
    let args = [
        "run",
        "--circuit",
        path(&circuit),
        "--branches",
        "sample",
        "100",
        "--seed",
        "7",
    ];
    let (a, b) = (mbqc(&args), mbqc(&args));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["mode"], "sample");
    assert_eq!(r["branches"].as_array().unwrap().len(), 100);
    assert!(r["aggregate"]["probability_sum"].is_null());

    let other = mbqc(&[
        "run",
        "--circuit",
        path(&data("h_branch.json")),
        "--branches",
        "sample",
        "100",
        "--seed",
        "8",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn seed_env_var_is_the_default() {
    let circuit = data("h_branch.json");
    let args = [
        "run",
        "--circuit",
        path(&circuit),
        "--branches",
        "sample",
        "5",
    ];
    let from_env = mbqc_env(&args, Some("11"));
    assert_eq!(json(&from_env)["seed"], 11);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "11"]);
    assert_eq!(from_env.stdout, mbqc(&with_flag).stdout);
    let flag_wins = mbqc_env(&[&args[..], &["--seed", "2"]].concat(), Some("11"));
    assert_eq!(json(&flag_wins)["seed"], 2);
}

#[test]
fn digest_tracks_file_bytes() {
    let r = json(&mbqc(&[
        "run",
        "--circuit",
        path(&data("single_teleport.json")),
    ]));
    let bytes = std::fs::read(data("single_teleport.json")).unwrap();
    assert_eq!(r["circuit_digest"], mbqc_cli::digest(&bytes));
}

#[test]
fn junction_spacing_violation_names_both_ops() {
    let out = mbqc(&["run", "--circuit", path(&data("spacing_violation.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("junction ops 2 and 3"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn parse_errors_report_line_and_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"wires\": [\n    {\"id\": \"a\"}\n  ],\n  \"ops\": []\n}\n",
    )
    .unwrap();
    let out = mbqc(&["run", "--circuit", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("input") && err.contains("line 3"), "{err}");
}

#[test]
fn renormalized_input_warns_on_stderr_only() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c.json");
    std::fs::write(
        &f,
        r#"{"wires": [{"id": "a", "input": {"amplitudes": [[0.6000004, 0], [0, 0.8]]}}],
            "ops": [{"type": "rot", "wire": "a", "alpha": 0.3}]}"#,
    )
    .unwrap();
    let out = mbqc(&["run", "--circuit", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("renormalized"));
    assert_eq!(json(&out)["verdict"], "pass");

    std::fs::write(
        &f,
        r#"{"wires": [{"id": "a", "input": {"amplitudes": [[0.7, 0], [0, 0.8]]}}], "ops": []}"#,
    )
    .unwrap();
    assert_eq!(mbqc(&["run", "--circuit", path(&f)]).status.code(), Some(1));
}

#[test]
fn enumeration_bound_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("long.json");
    let ops: Vec<String> = (0..21)
        .map(|i| {
            format!(
                r#"{{"type": "rot", "wire": "a", "alpha": {}}}"#,
                0.1 * i as f64
            )
        })
        .collect();
    std::fs::write(
        &f,
        format!(r#"{{"wires": [{{"id": "a", "input": {{"amplitudes": [[1, 0], [0, 0]]}}}}], "ops": [{}]}}"#, ops.join(",")),
    )
    .unwrap();
    let out = mbqc(&["run", "--circuit", path(&f), "--branches", "all"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("21"), "{}", stderr(&out));
    // sampling is not bounded by enumeration
    let out = mbqc(&["run", "--circuit", path(&f), "--branches", "sample", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(mbqc(&[]).status.code(), Some(1));
    assert_eq!(mbqc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mbqc(&["run"]).status.code(), Some(1));
    assert_eq!(
        mbqc(&["run", "--circuit", "x.json", "--branches", "sample"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mbqc(&["run", "--circuit", "x.json", "--seed", "-4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mbqc(&["run", "--circuit", "/nonexistent/c.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        mbqc(&["verify", "--suite", "everything"]).status.code(),
        Some(1)
    );
    assert_eq!(mbqc(&["--help"]).status.code(), Some(0));
    assert_eq!(mbqc(&["--version"]).status.code(), Some(0));
}

#[test]
fn verify_suites_pass() {
    let out = mbqc(&["verify", "--suite", "identities"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["worst"].as_f64().unwrap() <= 1e-12);

    let out = mbqc(&["verify", "--suite", "uniformity", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["trials"], 50);
    assert!(r["worst"].as_f64().unwrap() <= 1e-9);

    let out = mbqc(&["verify", "--suite", "ablation"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["failures"].as_array().unwrap().is_empty());
    assert!(r["worst"].as_f64().unwrap() < 0.99);
}

#[test]
fn export_dot_matches_goldens() {
    let dir = tempfile::tempdir().unwrap();
    for g in ["single_teleport", "three_stage_chain", "h_branch"] {
        let out = dir.path().join(format!("{g}.dot"));
        let st = mbqc(&[
            "export-dot",
            "--circuit",
            path(&data(&format!("{g}.json"))),
            "--out",
            path(&out),
        ]);
        assert_eq!(st.status.code(), Some(0), "{}", stderr(&st));
        assert_eq!(
            std::fs::read_to_string(&out).unwrap(),
            std::fs::read_to_string(data(&format!("{g}.dot"))).unwrap(),
            "{g}"
        );
    }
}

#[test]
fn dot_edges_follow_the_signal_flow() {
    let teleport = std::fs::read_to_string(data("single_teleport.dot")).unwrap();
    assert_eq!(teleport.matches("[label=\"q").count(), 2);
    assert_eq!(teleport.matches("dir=none").count(), 1);
    let dashed: Vec<&str> = teleport.lines().filter(|l| l.contains("dashed")).collect();
    assert_eq!(dashed, ["  q0 -> q1 [style=dashed, label=\"X\"];"]);

    let chain = std::fs::read_to_string(data("three_stage_chain.dot")).unwrap();
    let edges: Vec<String> = chain
        .lines()
        .filter(|l| l.contains("dashed"))
        .map(|l| {
            let (ends, rest) = l.trim().split_once(" [").unwrap();
            let label = rest.split('"').nth(1).unwrap();
            format!("{ends} {label}")
        })
        .collect();
    assert_eq!(
        edges,
        [
            "q0 -> q1 sign",
            "q0 -> q2 flip",
            "q1 -> q2 sign",
            "q1 -> q3 Z",
            "q2 -> q3 X"
        ]
    );

    // the junction qubit on the top wire is flipped by the bottom wire's first outcome
    let h = std::fs::read_to_string(data("h_branch.dot")).unwrap();
    assert!(h.contains("q3 -> q1 [style=dashed, label=\"flip\"];"));
    assert!(h.contains("q0 -> q4 [style=dashed, label=\"flip\"];"));
    assert!(h.contains("q1 -> q4 [dir=none, style=bold];"));
}

#[test]
fn export_dot_reports_io_failure() {
    let out = mbqc(&[
        "export-dot",
        "--circuit",
        path(&data("h_branch.json")),
        "--out",
        "/nonexistent/dir/x.dot",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/dir/x.dot"));
}

#[test]
fn decompose_identity_and_hadamard() {
    let out = mbqc(&["decompose", "--inline", "1,0,0,0,0,0,1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    for a in r["chain_angles"].as_array().unwrap() {
        assert!((a.as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
    assert!(r["chain_reconstruction_error"].as_f64().unwrap() <= 1e-10);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("h.json");
    std::fs::write(
        &m,
        format!("[[[{s}, 0], [{s}, 0]], [[{s}, 0], [{}, 0]]]", -s),
    )
    .unwrap();
    let r = json(&mbqc(&["decompose", "--matrix", path(&m)]));
    let e = &r["euler"];
    for k in ["global_phase", "a", "b", "c"] {
        assert!(
            (e[k].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12,
            "{k}: {e}"
        );
    }
    assert!(r["euler_reconstruction_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn decompose_rejects_non_unitary() {
    let out = mbqc(&["decompose", "--inline", "1,0,1,0,0,0,1,0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("not unitary") && err.contains("1e0"), "{err}");
    assert_eq!(
        mbqc(&["decompose", "--inline", "1,0,0"]).status.code(),
        Some(1)
    );
    assert_eq!(mbqc(&["decompose"]).status.code(), Some(1));
}
