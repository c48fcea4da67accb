use std::io::Write;
use std::process::{Command, Stdio};

use mumford_cli::{example, run_args, EXAMPLES, EXIT_OK, EXIT_REFUSAL, EXIT_VALIDATION};
use mumford_core::mumford::MumfordData;
use serde_json::Value;

fn run(args: &[&str], stdin: &str) -> mumford_cli::Outcome {
    run_args(args.iter().copied(), &mut stdin.as_bytes())
}

fn ok(args: &[&str], stdin: &str) -> String {
    let o = run(args, stdin);
    assert_eq!(o.code, EXIT_OK, "{args:?}: {}", o.stderr);
    o.stdout
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn bin(args: &[&str], stdin: &str, env: &[(&str, &str)]) -> (i32, String, String) {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mumford"));
    c.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    for (k, v) in env {
        c.env(k, v);
    }
    let mut child = c.spawn().unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn tate_theta_six_monomials() {
    let tate = ok(&["example", "tate"], "");
    let out = ok(&["theta", "--class", "0/1", "--weight", "1", "--trunc", "3", "--format", "text"], &tate);
    assert_eq!(out, golden("tate-theta-0-1.txt"));
    let terms: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(
        terms,
        ["z^(-2) u^(3) * 1", "z^(-1) u^(1) * 1", "z^(0) u^(0) * 1", "z^(1) u^(0) * 1", "z^(2) u^(1) * 1", "z^(3) u^(3) * 1"]
    );
}

#[test]
fn theta_json_golden() {
    let tate = example("tate").unwrap();
    assert_eq!(ok(&["theta", "--class", "1/2", "--trunc", "4"], tate), golden("tate-theta-1-2.json"));
    let v: Value = serde_json::from_str(&golden("tate-theta-1-2.json")).unwrap();
    assert_eq!(v["terms"].as_array().unwrap().len(), 5);
}

#[test]
fn theta3_full_stratum_is_two_triangles() {
    let out = ok(&["strata", "--I", "1,2,3"], example("theta3").unwrap());
    assert_eq!(out, golden("theta3-strata-123.json"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["summary"].as_str().unwrap().starts_with("2 compact 2-cells"));
    for c in v["cells"].as_array().unwrap() {
        assert_eq!(c["vertices"].as_array().unwrap().len(), 3);
    }
    let text = ok(&["strata", "--I", "1,2,3", "--format", "text"], example("theta3").unwrap());
    assert_eq!(text, "2 compact 2-cells (P2)\n");
}

#[test]
fn nodal_cubic_relation_and_strict_refusal() {
    let tate = example("tate").unwrap();
    let out = ok(&["relations", "--weight", "3", "--degree", "3"], tate);
    assert_eq!(out, golden("tate-relations-3-3.json"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["readable"][0], "T0/3*T1/3*T2/3 - T1/3^3 - T2/3^3 = 0");
    let o = run(&["relations", "--weight", "3", "--degree", "3", "--strict"], tate);
    assert_eq!(o.code, EXIT_REFUSAL);
    assert!(o.stderr.starts_with("refused:"), "{}", o.stderr);
}

#[test]
fn delaunay_and_voronoi() {
    assert_eq!(ok(&["delaunay", "--form", "[[4,1],[1,3]]"], ""), golden("delaunay-41-13.json"));
    let v: Value = serde_json::from_str(&ok(&["voronoi-cell", "--form", "[[4,1],[1,3]]"], "")).unwrap();
    assert_eq!(v["shape"], "hexagon");
    assert_eq!(v["facets"], 6);
    let o = run(&["delaunay", "--form", "[[1,2],[2,1]]"], "");
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn invalid_json_reports_location() {
    let o = run(&["describe"], "{\n  \"g\": 2,\n  \"sections\": [\n}");
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.stderr.contains("line 4"), "{}", o.stderr);
    let o = run(&["describe"], "");
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn validation_errors_exit_two() {
    let o = run(&["example", "nope"], "");
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = run(&["strata", "--I", "4"], example("theta3").unwrap());
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = run(&["theta", "--class", "1/3", "--weight", "2"], example("tate").unwrap());
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = run(&["frobnicate"], "");
    assert_eq!(o.code, EXIT_VALIDATION);
    let o = run(&["describe"], r#"{"g": 1, "sections": [{"normal": [1], "offsets": ["0"], "params": ["-1"]}]}"#);
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn describe_shifted_theta() {
    let out = ok(&["describe"], example("shifted-theta").unwrap());
    assert_eq!(out, golden("shifted-theta-describe.json"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["singularities"]["smooth"], true);
    assert_eq!(v["singularities"]["classification"], "nodal");
    assert_eq!(v["k_trivial"], true);
    assert_eq!(v["dual_complex"]["h1_rank"], 2);
}

#[test]
fn toml_input() {
    let toml = "name = \"t\"\ng = 1\n\n[[sections]]\nnormal = [1]\noffsets = [\"0\"]\n";
    let v: Value = serde_json::from_str(&ok(&["describe"], toml)).unwrap();
    assert_eq!(v["singularities"]["classification"], "nodal");
    let o = run(&["describe"], "g = = 1");
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn inline_data_and_file_input() {
    let v: Value = serde_json::from_str(&ok(&["describe", "--data", example("tate").unwrap()], "")).unwrap();
    assert_eq!(v["dual_complex"]["h1_rank"], 1);
    let path = format!("{}/../../data/examples/theta3.json", env!("CARGO_MANIFEST_DIR"));
    let v: Value = serde_json::from_str(&ok(&["describe", "--input", &path], "")).unwrap();
    assert_eq!(v["singularities"]["smooth"], false);
}

#[test]
fn examples_round_trip() {
    for (name, text) in EXAMPLES {
        let v: Value = serde_json::from_str(text).unwrap();
        let d = MumfordData::from_json(&v).unwrap();
        let again = MumfordData::from_json(&d.to_json()).unwrap();
        assert_eq!(d, again, "{name}");
        assert_eq!(d.name, name);
        let printed: Value = serde_json::from_str(&ok(&["example", name], "")).unwrap();
        assert_eq!(printed, v);
    }
}

#[test]
fn svg_figures() {
    let tate = ok(&["svg"], example("tate").unwrap());
    assert_eq!(tate, golden("tate.svg"));
    assert_eq!(tate.matches("class=\"wall").count(), 1);
    let theta3 = ok(&["svg"], example("theta3").unwrap());
    assert_eq!(theta3, golden("theta3.svg"));
    for c in ["#d62728", "#2ca02c", "#1f77b4"] {
        assert!(theta3.contains(c));
    }
    let g3 = r#"{"g": 3, "sections": [{"normal": [1,0,0], "offsets": ["0"]}, {"normal": [0,1,0], "offsets": ["0"]}, {"normal": [0,0,1], "offsets": ["0"]}]}"#;
    let o = run(&["svg"], g3);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.stderr.contains("dimension"), "{}", o.stderr);
    let theta1 = ok(&["describe", "--format", "svg"], example("theta1").unwrap());
    for w in [">3<", ">2<", ">1<"] {
        assert!(theta1.contains(w), "{w}");
    }
}

#[test]
fn weights_match_dual_complex() {
    for (name, rank) in [("tate", 1), ("theta3", 2), ("shifted-theta", 2)] {
        let v: Value = serde_json::from_str(&ok(&["weights"], example(name).unwrap())).unwrap();
        assert_eq!(v["filtration"]["gr0_rank"], rank, "{name}");
        assert_eq!(v["consistent"], true, "{name}");
    }
    let graph = r#"{"graph": {"vertices": 2, "edges": [[0,1],[0,1],[1,0]]}, "forest": [2]}"#;
    let v: Value = serde_json::from_str(&ok(&["weights"], graph)).unwrap();
    assert_eq!(v["forms"], serde_json::json!([[[1, 0], [0, 0]], [[0, 0], [0, 1]], [[1, 1], [1, 1]]]));
    let mono = r#"{"monodromy": [[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]]}"#;
    assert_eq!(run(&["weights"], mono).code, EXIT_VALIDATION);
}

#[test]
fn basechange_then_resolve() {
    let bc = ok(&["basechange"], example("mon-sep").unwrap());
    let v: Value = serde_json::from_str(&bc).unwrap();
    assert_eq!(v["base_changed"]["data"]["k"], 2);
    let r: Value = serde_json::from_str(&ok(&["resolve"], &bc)).unwrap();
    assert_eq!(r["plan"]["N"], 4);
    assert_eq!(r["nearly_nodal"]["form"], "nearly-nodal");
    assert_eq!(r["nearly_nodal"]["routes_agree"], true);
    assert_eq!(r["semistable"]["form"], "semistable");
    assert_eq!(r["semistable"]["standard_affine"], true);
    assert_eq!(r["coherent"], true);
    let swapped: Value = serde_json::from_str(&ok(&["resolve", "--order", "2,1"], &bc)).unwrap();
    assert_eq!(swapped["plan"]["divisor_order"], serde_json::json!([2, 1]));
    let o = run(&["resolve", "--matrix", "[[1],[1],[1]]"], example("theta3").unwrap());
    assert_eq!(o.code, EXIT_REFUSAL);
    let o = run(&["resolve", "--matrix", "[[3]]", "--N", "2"], example("tate").unwrap());
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn binary_pipeline_and_exit_codes() {
    let (c, tate, _) = bin(&["example", "tate"], "", &[]);
    assert_eq!(c, 0);
    let (c, out, _) = bin(&["theta", "--class", "0/1", "--weight", "1", "--trunc", "3", "--format", "text"], &tate, &[]);
    assert_eq!((c, out), (0, golden("tate-theta-0-1.txt")));
    let (c, _, err) = bin(&["describe"], "{", &[]);
    assert_eq!(c, 2);
    assert!(err.contains("line 1"), "{err}");
    let (c, _, _) = bin(&["relations", "--weight", "3", "--degree", "3", "--strict"], &tate, &[]);
    assert_eq!(c, 3);
    let (c, _, err) = bin(&["delaunay", "--form", "[[2]]"], "", &[("MUMFORD_WINDOW_SCALE", "-1")]);
    assert_eq!(c, 2, "{err}");
    let (c, out, _) = bin(&["delaunay", "--form", "[[4,1],[1,3]]"], "", &[("MUMFORD_WINDOW_SCALE", "3/2")]);
    assert_eq!((c, out), (0, golden("delaunay-41-13.json")));
}

#[test]
fn output_independent_of_parallelism() {
    let cases: [(&[&str], &str); 3] = [
        (&["describe"], example("shifted-theta").unwrap()),
        (&["theta", "--class", "(0,1)/2", "--trunc", "6"], example("shifted-theta").unwrap()),
        (&["svg"], example("theta3").unwrap()),
    ];
    let first: Vec<String> = cases.iter().map(|(a, s)| ok(a, s)).collect();
    mumford_core::par::set_sequential(true);
    let seq: Vec<String> = cases.iter().map(|(a, s)| ok(a, s)).collect();
    mumford_core::par::set_sequential(false);
    let again: Vec<String> = cases.iter().map(|(a, s)| ok(a, s)).collect();
    assert_eq!(first, seq);
    assert_eq!(first, again);
}
