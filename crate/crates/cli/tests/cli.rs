use std::path::Path;
use std::process::{Command, Output};

use mittag_cli::{emit_plot_data, parse_axis, RunRecord};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mittag")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

/// Data rows of an emitted CSV, header excluded.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn sweep(dir: &Path, name: &str, spec: serde_json::Value) -> std::path::PathBuf {
    let spec_path = dir.join(format!("{name}.json"));
    std::fs::write(&spec_path, spec.to_string()).unwrap();
    let out = dir.join(format!("{name}.csv"));
    let o = run(&["sweep", "--spec", spec_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn exit_codes() {
    let o = run(&["eval", "--alpha", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("2.718281828"));

    let o = run(&["eval", "--alpha", "-1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alpha out of range") && err.lines().count() == 1, "{err}");

    assert_eq!(run(&["eval", "--alpha"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--alpha", "0.5", "--x", "1", "--method", "guess"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn crossing_json_reports_certified_root() {
    let o = run(&["crossing", "--alpha", "0.3", "--beta", "0.7"]);
    assert!(o.status.success());
    let v = json(&o);
    // same frozen value as the library's crossing oracle
    assert!((v["result"]["root"].as_f64().unwrap() - 0.6549094531083811).abs() < 1e-10);
    assert_eq!(v["result"]["certified"], true);
    assert!(v["result"]["bracket_lo"].as_f64().unwrap() < 0.6549);
    let m = json(&run(&["crossing", "--alpha", "0.5", "--kind", "mode"]));
    assert!(m["result"]["root"].as_f64().unwrap() < 1.0);
    assert_eq!(run(&["crossing", "--alpha", "0.3"]).status.code(), Some(2));
}

#[test]
fn decreasing_in_alpha_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep(
        dir.path(),
        "a",
        serde_json::json!({"task": "eval", "alpha": {"start": 0.1, "stop": 1.9, "count": 19}, "x": 5.0, "transform": "power"}),
    );
    let (h, rows) = csv_rows(&out);
    assert_eq!(h, ["alpha", "beta", "x", "value", "method"]);
    let v = column(&h, &rows, "value");
    assert_eq!(v.len(), 19);
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}

#[test]
fn increasing_in_beta_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep(
        dir.path(),
        "d",
        serde_json::json!({"task": "eval", "alpha": 0.5, "beta": {"start": 0.5, "stop": 200.0, "count": 25, "scale": "geometric"},
            "x": 0.5, "transform": "rescaled-beta"}),
    );
    let (h, rows) = csv_rows(&out);
    let v = column(&h, &rows, "value");
    assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
    assert!(v[v.len() - 1] < 2.0 && v[v.len() - 1] > 1.9);
}

#[test]
fn single_point_sweep_and_header_only_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep(dir.path(), "one", serde_json::json!({"task": "eval", "alpha": {"start": 0.5, "stop": 0.9, "count": 1}, "x": 1.0}));
    assert_eq!(csv_rows(&out).1.len(), 1);

    let empty = RunRecord::new(serde_json::json!({"task": "eval"}), &["alpha", "value"]);
    let p = dir.path().join("empty.csv");
    emit_plot_data(&empty, &p).unwrap();
    let (h, rows) = csv_rows(&p);
    assert_eq!(h, ["alpha", "value"]);
    assert!(rows.is_empty());
}

#[test]
fn reruns_are_identical_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({"task": "sample", "generator": "pillai", "alpha": [0.3, 0.6], "n": 2000, "seed": 9});
    let a = std::fs::read_to_string(sweep(dir.path(), "r1", spec.clone())).unwrap();
    let b = std::fs::read_to_string(sweep(dir.path(), "r2", spec)).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("# timestamp")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    assert!(a.contains("# spec: {") && a.contains("# tool: mittag"));
    assert!(!a.contains('\r'));
}

#[test]
fn interpolation_table_between_lorentzian_and_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let xs: Vec<f64> = (0..=30).map(|i| 0.1 * i as f64).collect();
    let neg_sq: Vec<f64> = xs.iter().map(|x| -x * x).collect();
    let out = sweep(
        dir.path(),
        "u",
        serde_json::json!({"task": "eval", "alpha": {"start": 0.1, "stop": 0.9, "count": 9}, "x": neg_sq, "transform": "rescaled-gamma"}),
    );
    let (h, rows) = csv_rows(&out);
    let v = column(&h, &rows, "value");
    let n = xs.len();
    for (j, x) in xs.iter().enumerate() {
        let col: Vec<f64> = (0..9).map(|i| v[i * n + j]).collect();
        let (lo, hi) = ((-x * x).exp(), 1.0 / (1.0 + x * x));
        assert!(col.iter().all(|c| *c >= lo - 1e-12 && *c <= hi + 1e-12), "x = {x}");
        if *x > 0.0 {
            assert!(col.windows(2).all(|w| w[1] < w[0]), "x = {x}: {col:?}");
        }
    }
}

#[test]
fn crossing_locus_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let grid = serde_json::json!({"start": 0.1, "stop": 0.9, "count": 5});
    let out = sweep(dir.path(), "c", serde_json::json!({"task": "crossing", "alpha": grid, "beta": grid}));
    let (h, rows) = csv_rows(&out);
    assert_eq!(h, ["alpha", "beta", "lambda", "root", "lo", "hi"]);
    assert_eq!(rows.len(), 10);
    assert!(column(&h, &rows, "root").iter().all(|r| *r < 1.0));
}

#[test]
fn bounds_subcommand_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("unif.csv");
    let o = run(&["bounds", "--kind", "Unif", "--alpha", "0.1:0.9:9", "--x", "0.01:100:13:geom", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["points"], 117);
    assert!(v["violations"].as_array().unwrap().is_empty());
    let (h, rows) = csv_rows(&p);
    assert_eq!(&h[..7], ["kind", "alpha", "beta", "x", "lo", "value", "hi"]);
    assert_eq!(rows.len(), 117);

    let out = sweep(dir.path(), "b2", serde_json::json!({"task": "bounds", "kind": "Bind2", "alpha": [0.3, 0.7], "x": {"start": -50.0, "stop": 0.0, "count": 11}}));
    let (h, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 22);
    assert!(rows.iter().all(|r| r[h.len() - 1] == "true"));
    assert_eq!(run(&["bounds", "--kind", "Nope", "--alpha", "0.5"]).status.code(), Some(2));
}

#[test]
fn sample_abel_and_probe() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("draws.csv");
    let o = run(&["sample", "--generator", "pillai", "--alpha", "0.5", "--n", "500", "--seed", "3", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(json(&o)["log_mean"].is_number());
    assert_eq!(csv_rows(&p).1.len(), 500);
    assert_eq!(run(&["sample", "--generator", "mtilde", "--alpha", "0.5"]).status.code(), Some(2));

    // forcing from file, one value per node
    let f = dir.path().join("g.csv");
    let nodes = 17;
    let body: String = (0..nodes).map(|i| format!("{},1\n", i as f64 / 16.0)).collect();
    std::fs::write(&f, format!("x,g\n{body}")).unwrap();
    let o = run(&["abel", "--alpha", "0.5", "--lambda", "1", "--nodes", "17", "--forcing", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = json(&o);
    let last = t["values"].as_array().unwrap().last().unwrap().as_f64().unwrap();
    // E_{1/2}(1) = e erfc(-1)
    assert!((last - 5.00898008076228).abs() < 1e-9, "{last}");
    assert_eq!(run(&["abel", "--alpha", "0.5", "--lambda", "1", "--nodes", "5"]).status.code(), Some(1));

    let o = run(&["probe", "--id", "alpha_dec_Ea_minus1"]);
    assert!(o.status.success());
    assert!(json(&o)["violations"].as_array().unwrap().is_empty());
    assert_eq!(run(&["probe", "--id", "nope"]).status.code(), Some(2));
}

#[test]
fn failed_sweeps_leave_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, r#"{"task": "eval", "alpha": -1, "x": 1}"#).unwrap();
    let out = dir.path().join("out.csv");
    let o = run(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());

    std::fs::write(&spec, r#"{"task": "eval", "alpha": 0.5, "x": 1, "colour": "red"}"#).unwrap();
    assert_eq!(run(&["sweep", "--spec", spec.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&spec, r#"{"task": "eval", "alpha": {"start": 0.1, "stop": 0.5, "count": 0}, "x": 1}"#).unwrap();
    assert_eq!(run(&["sweep", "--spec", spec.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("no/such/dir/out.csv");
    std::fs::write(&spec, r#"{"task": "eval", "alpha": 0.5, "x": 1}"#).unwrap();
    assert_eq!(run(&["sweep", "--spec", spec.to_str().unwrap(), "--out", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn axis_parsing() {
    assert_eq!(parse_axis("1,2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
    assert_eq!(parse_axis("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
    let g = parse_axis("1:100:3:geom").unwrap();
    assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
    assert!(parse_axis("1,2,x").is_err());
    assert!(parse_axis("0:1").is_err());
    assert!(parse_axis("-1:1:3:geom").is_err());
    assert!(parse_axis("1,5e-1").unwrap()[1] == 0.5);
}
