use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use disperse::harness::CSV_COLUMNS;

fn disperse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disperse")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn run_example_writes_one_record_per_replica() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.ndjson");
    let o = disperse(&[
        "run", "--family", "complete", "--n", "1000", "--particles", "400", "--replicas", "100", "--seed", "7", "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 100);
    for (i, l) in lines.iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["schema"], "disperse/1");
        assert_eq!(v["replica"], i);
        assert_eq!(v["config"]["experiment"]["seed"], "7");
        assert_eq!(v["config"]["topology"]["n"], 1000);
    }
}

#[test]
fn tree_ruin_oracle_prints_value() {
    let o = disperse(&["oracle", "tree-ruin", "--k", "3", "--d", "10"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"].as_f64(), Some(0.0009765625));
    assert_eq!(v["name"], "tree-ruin");
    assert_eq!(v["inputs"]["k"], 3);
}

#[test]
fn line_pmf_oracle_reports_exact_fraction() {
    let o = disperse(&["oracle", "line-pmf", "--t", "2", "--r", "1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exact"], "3/8");
    assert_eq!(v["value"].as_f64(), Some(0.375));
}

#[test]
fn oracle_missing_input_is_a_usage_error() {
    let o = disperse(&["oracle", "tree-ruin", "--k", "3"]);
    assert_eq!(code(&o), 2);
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn corrupted_validation_exits_one() {
    let o = disperse(&["validate", "--quick", "--corrupt-oracle"]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("FAIL kn-expected-changes-monte-carlo"));
}

#[test]
fn quick_validation_exits_zero() {
    let o = disperse(&["validate", "--quick"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn argument_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = disperse(&["run", "--no-such-flag"]);
    assert_eq!(code(&o), 2);
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[topology]\nfamily = \"complete\"\nn = \n").unwrap();
    let o = disperse(&["run", "--config", path_str(&bad)]);
    assert_eq!(code(&o), 2);
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "[topology]\nfamily = \"complete\"\nn = 5\ncolour = 3\n").unwrap();
    assert_eq!(code(&disperse(&["run", "--config", path_str(&unknown), "--particles", "2"])), 2);

    let o = disperse(&["run", "--family", "complete", "--n", "10", "--particles", "2", "--out", "/no/such/dir/x.csv"]);
    assert_eq!(code(&o), 2);

    let o = disperse(&["validate", "--format", "svg-summary"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&disperse(&["--help"])), 0);
    assert_eq!(code(&disperse(&["--version"])), 0);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "[topology]\nfamily = \"cycle\"\nn = 40\n[experiment]\nparticles = 10\nreplicas = 3\nseed = 1\n",
    )
    .unwrap();
    let o = disperse(&["run", "--config", path_str(&cfg), "--replicas", "5", "--particles", "12"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(v["config"]["experiment"]["particles"], 12);
    assert_eq!(v["config"]["experiment"]["seed"], "1");
    assert_eq!(v["config"]["topology"]["n"], 40);
}

#[test]
fn headers_reproduce_the_run_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let first = p("a.ndjson");
    let o = disperse(&[
        "run", "--family", "grid", "--dim", "2", "--particles", "6", "--replicas", "8", "--seed", "11", "--lazy-p", "0.75",
        "--out", path_str(&first),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reference = fs::read_to_string(&first).unwrap();

    let mut source = first.clone();
    for (name, format) in [("b.csv", "csv"), ("c.svg", "svg-summary"), ("d.json", "json"), ("e.ndjson", "ndjson")] {
        let o = disperse(&["run", "--config", path_str(&source), "--format", format, "--out", path_str(&p(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        source = p(name);
    }
    assert_eq!(fs::read_to_string(p("e.ndjson")).unwrap(), reference);
}

#[test]
fn header_round_trip_for_trees_with_default_depth() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = ["run", "--family", "tree", "--k", "3", "--particles", "64", "--replicas", "4", "--seed", "2"];
    let o = disperse(&[&args[..], &["--out", path_str(&a)]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&a).unwrap().contains("# leaf_depth = 23"));
    assert_eq!(code(&disperse(&["run", "--config", path_str(&a), "--out", path_str(&b)])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn scan_header_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let o = disperse(&[
        "scan", "--family", "complete", "--n", "60", "--axis", "density", "--grid", "0.1,0.3,0.5", "--replicas", "6",
        "--budget", "3000", "--out", path_str(&a),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&fs::read_to_string(&a).unwrap());
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "density");
    assert_eq!(rows[1][2], "18");
    assert_eq!(code(&disperse(&["scan", "--config", path_str(&a), "--out", path_str(&b)])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn svg_texts(svg: &str) -> Vec<String> {
    svg.lines()
        .filter_map(|l| l.strip_prefix("<text "))
        .filter_map(|l| l.split_once('>'))
        .filter_map(|(_, rest)| rest.strip_suffix("</text>"))
        .map(String::from)
        .collect()
}

#[test]
fn svg_labels_equal_csv_cells() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let svg = dir.path().join("r.svg");
    let common = ["run", "--family", "path", "--particles", "15", "--replicas", "30", "--seed", "5"];
    assert_eq!(code(&disperse(&[&common[..], &["--out", path_str(&csv)]].concat())), 0);
    assert_eq!(code(&disperse(&[&common[..], &["--out", path_str(&svg)]].concat())), 0);
    let row = &csv_rows(&fs::read_to_string(&csv).unwrap())[0];
    let texts = svg_texts(&fs::read_to_string(&svg).unwrap());
    let cell = |name: &str| row[CSV_COLUMNS.iter().position(|c| *c == name).unwrap()].clone();
    for q in ["min", "p25", "p50", "p75", "p95", "max"] {
        for prefix in ["t_disp", "d_disp"] {
            let v = cell(&format!("{prefix}_{q}"));
            assert!(texts.contains(&v), "{prefix}_{q} = {v} missing from SVG labels");
        }
    }
    let line = texts.iter().find(|t| t.starts_with("dispersal_fraction")).unwrap();
    assert!(line.contains(&cell("dispersal_fraction")));
    assert!(line.contains(&cell("ci_lo")));
    assert!(line.contains(&cell("ci_hi")));
}

#[test]
fn recorded_trajectories_appear_in_ndjson() {
    let o = disperse(&[
        "run", "--family", "cycle", "--n", "30", "--particles", "5", "--replicas", "2", "--record-trajectories",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["trajectories"].as_array().unwrap().len(), 5);
        assert_eq!(v["config"]["experiment"]["record_trajectories"], true);
    }
}
