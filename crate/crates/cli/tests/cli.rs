use netboot::harness::{preset, run_coverage};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netboot"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn netboot")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn error_of(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

fn sample(dir: &Path, n: usize) -> PathBuf {
    let p = dir.join("g.edges");
    ok(&["generate", "--graphon", "sbm-g", "--n", &n.to_string(), "--seed", "5", "--output", p.to_str().unwrap()]);
    p
}

#[test]
fn count_k4_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let k4 = write(dir.path(), "k4.edges", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let v: Value = serde_json::from_str(&ok(&["count", "--motif", "triangle", "--input", k4.to_str().unwrap()])).unwrap();
    assert_eq!(v["t_hat"], 1.0);
    assert_eq!(v["n"], 4);
    assert_eq!(v["h1"].as_array().unwrap().len(), 4);
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["meta"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn pairwise_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let k4 = write(dir.path(), "k4.edges", "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let h2 = dir.path().join("h2.bin");
    ok(&["count", "--motif", "triangle", "--input", k4.to_str().unwrap(), "--h2", h2.to_str().unwrap()]);
    let bytes = std::fs::read(&h2).unwrap();
    assert_eq!(bytes.len(), 16 * 8);
    let vals: Vec<f64> = bytes.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(vals[i * 4 + j], if i == j { 0.0 } else { 1.0 });
        }
    }
}

#[test]
fn header_keeps_isolated_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.edges", "# n=6\n0 1\n1 2\n0 2\n");
    let v: Value = serde_json::from_str(&ok(&["count", "--motif", "triangle", "--input", g.to_str().unwrap()])).unwrap();
    assert_eq!(v["n"], 6);
    assert_eq!(v["t_hat"], 0.05);
}

#[test]
fn bootstrap_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 40);
    let args = ["bootstrap", "--method", "mbl", "--motif", "triangle", "--B", "1000", "--seed", "7", "--input", g.to_str().unwrap()];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a, b);
    assert!(a.starts_with("# netboot "));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[1], "u,ecdf");
    assert_eq!(lines.len(), 2 + 61);
    let mut one = vec!["--workers", "1"];
    one.extend_from_slice(&args);
    let mut two = vec!["--workers", "2"];
    two.extend_from_slice(&args);
    assert_eq!(ok(&one), ok(&two));
}

#[test]
fn bootstrap_metadata_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 40);
    let out = dir.path().join("boot.csv");
    ok(&["bootstrap", "--method", "mbq", "--motif", "twostar", "--B", "300", "--seed", "3", "--input", g.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("boot.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["meta"]["seed"], 3);
    assert_eq!(meta["run"]["method"], "MB-Q");
    assert_eq!(meta["run"]["B"], 300);
}

#[test]
fn every_bootstrap_method_runs() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 30);
    for m in ["mbm", "mbq", "mbl", "mbl-apx", "eg", "ss"] {
        let csv = ok(&["bootstrap", "--method", m, "--motif", "triangle", "--B", "100", "--seed", "1", "--grid", "-1:1:0.5", "--input", g.to_str().unwrap()]);
        assert_eq!(csv.lines().count(), 2 + 5, "{m}");
    }
}

#[test]
fn generated_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 30);
    let csv = ok(&["bootstrap", "--method", "mbl", "--motif", "edge", "--B", "100", "--input", g.to_str().unwrap()]);
    let seed = csv.lines().next().unwrap().rsplit("seed=").next().unwrap();
    assert!(seed.parse::<u64>().is_ok());
}

#[test]
fn edgeworth_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 50);
    let csv = ok(&["edgeworth", "--motif", "triangle", "--input", g.to_str().unwrap()]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "u,gn_hat,phi");
    assert_eq!(lines.len(), 2 + 61);
    let mid: Vec<f64> = lines[2 + 30].split(',').map(|t| t.parse().unwrap()).collect();
    assert_eq!(mid[0], 0.0);
    assert_eq!(mid[2], 0.5);
    let pop = ok(&["edgeworth", "--motif", "triangle", "--graphon", "sbm-g", "--n", "160"]);
    assert_eq!(pop.lines().count(), 2 + 61);
}

#[test]
fn smooth_coefficient_block() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 50);
    let out = dir.path().join("s.csv");
    ok(&["smooth", "--function", "3T/V", "--B", "200", "--seed", "4", "--input", g.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.csv.json")).unwrap()).unwrap();
    let c = &meta["coefficients"];
    for k in ["f_hat", "sigma_f", "a1", "a2", "b1", "b2"] {
        assert!(c[k].is_f64(), "{k}");
    }
    let tv = dir.path().join("tv.csv");
    ok(&["smooth", "--function", "TV", "--B", "200", "--seed", "4", "--input", g.to_str().unwrap(), "--output", tv.to_str().unwrap()]);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("tv.csv.json")).unwrap()).unwrap();
    assert!(meta["coefficients"]["sigma_f"].as_f64().unwrap() > 0.0);
}

#[test]
fn ci_reports_both_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 60);
    let v: Value = serde_json::from_str(&ok(&["ci", "--motif", "triangle", "--B", "500", "--seed", "2", "--input", g.to_str().unwrap()])).unwrap();
    let (pl, pu) = (v["percentile"]["lower"].as_f64().unwrap(), v["percentile"]["upper"].as_f64().unwrap());
    let (cl, cu) = (v["corrected"]["lower"].as_f64().unwrap(), v["corrected"]["upper"].as_f64().unwrap());
    assert!(pl < pu && cl < cu);
    let t = &v["corrected"]["terms"];
    assert!((cl - pl - t[0]["shift"].as_f64().unwrap()).abs() < 1e-12);
    assert!((cu - pu - t[1]["shift"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(v["method"], "mbq");
    let f: Value = serde_json::from_str(&ok(&["ci", "--function", "3T/V", "--B", "500", "--seed", "2", "--input", g.to_str().unwrap()])).unwrap();
    assert!(f["corrected"]["lower"].as_f64().unwrap() < f["corrected"]["upper"].as_f64().unwrap());
    assert_eq!(f["target"], "3T/V");
    let b: Value = serde_json::from_str(&ok(&["ci", "--motif", "triangle", "--B", "500", "--seed", "2", "--family", "32", "--input", g.to_str().unwrap()])).unwrap();
    assert!((b["level"].as_f64().unwrap() - (1.0 - 0.05 / 32.0)).abs() < 1e-15);
}

#[test]
fn ingest_rollcall_and_edges() {
    let dir = tempfile::tempdir().unwrap();
    let rc = write(dir.path(), "votes.csv", "member,party,b1,b2,b3\na,D,Y,Y,N\nb,D,Y,Y,N\nc,R,N,N,Y\nd,R,N,Y,Y\n");
    let out = dir.path().join("rc.edges");
    ok(&["ingest", "--rollcall", rc.to_str().unwrap(), "--threshold", "1", "--output", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    let edges: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(edges, vec!["0 1", "2 3"]);
    let messy = write(dir.path(), "m.edges", "2 1\n1 2\n3 3\n1 3\n");
    let canon = ok(&["ingest", "--input", messy.to_str().unwrap(), "--one-based"]);
    let edges: Vec<&str> = canon.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(edges, vec!["0 1", "0 2"]);
}

#[test]
fn validation_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample(dir.path(), 20);
    let e = error_of(&run(&["count", "--motif", "pentagon", "--input", g.to_str().unwrap()]));
    assert_eq!(e["error"], "invalid_argument");
    let e = error_of(&run(&["frobnicate"]));
    assert_eq!(e["error"], "usage");
    let e = error_of(&run(&["bootstrap", "--method", "mbl", "--motif", "triangle", "--B", "many", "--input", g.to_str().unwrap()]));
    assert_eq!(e["error"], "usage");
    let e = error_of(&run(&["count", "--motif", "triangle", "--input", "/nonexistent/file"]));
    assert_eq!(e["error"], "io");
    let bad = write(dir.path(), "bad.edges", "0 x\n");
    let e = error_of(&run(&["count", "--motif", "triangle", "--input", bad.to_str().unwrap()]));
    assert_eq!(e["error"], "parse");
}

#[test]
fn help_lists_formats() {
    let out = ok(&["--help"]);
    for word in ["edge list", "roll-call", "grid", "h2 file"] {
        assert!(out.contains(word), "{word}");
    }
}

#[test]
fn experiment_config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["experiment", "--preset", "tableA1", "--m", "50", "--print-config"]);
    let cfg = write(dir.path(), "exp.toml", &text);
    let csv = ok(&["experiment", "--config", cfg.to_str().unwrap()]);
    let again = ok(&["experiment", "--preset", "tableA1", "--m", "50"]);
    assert_eq!(csv, again);
    assert!(csv.lines().nth(1).unwrap().starts_with("target,method"));
}

#[test]
fn coverage_preset_matches_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("cov.jsonl");
    let csv = ok(&["experiment", "--preset", "fig2-coverage", "--json", json.to_str().unwrap()]);
    let lib = run_coverage(&preset("fig2-coverage").unwrap(), None).unwrap().to_csv().unwrap();
    let body: String = csv.lines().skip(1).map(|l| format!("{l}\n")).collect();
    assert_eq!(body, lib);
    let lines = std::fs::read_to_string(&json).unwrap();
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["meta"]["command"], "experiment");
    assert_eq!(lines.lines().count(), 1 + 2);
}
