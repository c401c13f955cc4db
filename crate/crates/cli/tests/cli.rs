use std::path::PathBuf;
use std::process::{Command, Output};

fn nbspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbspec")).args(args).output().expect("binary runs")
}

fn edge_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nbspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_k4() {
    let p = edge_file("k4.edges", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let o = nbspec(&["validate", "--graph", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("4 vertices, 6 edges, regular q=2"), "{}", stdout(&o));
}

#[test]
fn invalid_graphs_have_distinct_exit_codes() {
    let cases = [
        ("path.edges", "0 1\n1 2\n", 2, "terminal vertex"),
        ("split.edges", "0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n", 3, "disconnected"),
        ("loop.edges", "0 0\n0 1\n", 4, "loop"),
        ("dup.edges", "0 1\n1 2\n2 0\n1 0\n", 5, "duplicate"),
        ("junk.edges", "0 one\n", 6, "line 1"),
        ("empty.edges", "# nothing\n", 8, "empty"),
    ];
    for (name, body, code, msg) in cases {
        let p = edge_file(name, body);
        let o = nbspec(&["validate", "--graph", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(code), "{name}");
        assert!(stderr(&o).contains(msg), "{name}: {}", stderr(&o));
    }
    let o = nbspec(&["validate", "--graph", "/nonexistent/graph.edges"]);
    assert_eq!(o.status.code(), Some(7));
}

#[test]
fn config_errors() {
    assert_eq!(nbspec(&["spectrum", "--corpus", "c3", "--theta", "1.5"]).status.code(), Some(9));
    assert_eq!(nbspec(&["spectrum", "--corpus", "c3", "--z", "0,0"]).status.code(), Some(9));
    assert_eq!(nbspec(&["run", "--suite", "nope", "--corpus", "c3"]).status.code(), Some(9));
    assert_eq!(nbspec(&["spectrum", "--corpus", "nope"]).status.code(), Some(9));
}

#[test]
fn json_is_versioned_and_deterministic() {
    let args = ["run", "--suite", "spectrum", "--suite", "dual", "--corpus", "k23", "--z", "1.5,-0.5", "--format", "json"];
    let a = nbspec(&args);
    let b = nbspec(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["schema"], "nbspec/1");
    assert_eq!(v["command"], "run");
    assert_eq!(v["passed"], true);
    assert_eq!(v["config"]["z_values"][0][1], -0.5);
    let g = &v["graphs"][0];
    assert_eq!(g["name"], "k23");
    let r = g["suites"]["spectrum"]["details"]["regularity"]["spectral_radius"].as_f64().unwrap();
    assert!((r - 2f64.sqrt()).abs() < 1e-10);
    assert!(g["suites"]["dual"]["details"]["sample_measure"]["entries"].is_array());
}

#[test]
fn spectrum_marks_resonance_region() {
    let o = nbspec(&["spectrum", "--corpus", "k4", "--theta", "0.4"]);
    let s = stdout(&o);
    assert!(s.contains("12 eigenvalues, 12 with |z| > θR = 0.8000"), "{s}");
    let o = nbspec(&["spectrum", "--corpus", "c3"]);
    assert!(stdout(&o).contains("R = 1.000000000000"));
}

#[test]
fn correspond_k4_has_twelve_rows() {
    let o = nbspec(&["correspond", "--corpus", "k4"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let rows = s.lines().filter(|l| l.contains("matched") || l.ends_with("excluded")).count();
    assert_eq!(rows, 12, "{s}");
    assert!(!s.contains("MISMATCH"));
}

#[test]
fn csv_output_to_file() {
    let dir = std::env::temp_dir().join(format!("nbspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("spectrum.csv");
    let o = nbspec(&["spectrum", "--corpus", "c4", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("graph,suite,check,value,bound,passed"));
    assert!(lines.all(|l| l.starts_with("c4,spectrum,") && l.ends_with(",true")));
}

#[test]
fn list_names_every_suite() {
    let s = stdout(&nbspec(&["list"]));
    for name in ["identity", "spectrum", "correspond", "locconst", "bounds", "dual", "degeneracy", "cover"] {
        assert!(s.contains(name));
    }
}
