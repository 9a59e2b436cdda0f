use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn frd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frd"))
        .args(args)
        .output()
        .expect("spawn frd")
}

fn stderr_line(out: &Output) -> String {
    let s = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(s.trim_end().lines().count(), 1, "stderr: {s:?}");
    s.trim_end().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write_sample(dir: &Path, design: &str) -> String {
    let path = dir.join(format!("d{design}.csv"));
    let p = path.to_str().unwrap().to_string();
    let out = frd(&["dgp-sample", "--design", design, "--n", "500", "--seed", "3", "--output", &p]);
    assert!(out.status.success());
    p
}

#[test]
fn help_lists_defaults() {
    let out = frd(&["simulate", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["[default: 500]", "[default: 1000]", "[default: 42]", "[default: triangular]", "[default: mmse-f]", "--full"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let out = frd(&["select", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[default: fuzzy]") && text.contains("[default: 0]"));
}

#[test]
fn usage_error_is_one_line_and_exit_two() {
    let out = frd(&["estimate", "--input", "nowhere.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error: UsageError: "));

    let out = frd(&["simulate", "--design", "5"]);
    assert_eq!(out.status.code(), Some(2));
    stderr_line(&out);
}

#[test]
fn validation_error_names_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x,y,d\n-0.5,1,0\n0.5,2,1\n-0.2,1,0\n0.3,2,2\n0.4,1,1\n").unwrap();
    let out = frd(&["select", "--input", path.to_str().unwrap(), "--cutoff", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.starts_with("error: ValidationError: "), "{line}");
    assert!(line.contains("row 5"), "{line}");
}

#[test]
fn missing_file_and_empty_side() {
    let out = frd(&["select", "--input", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: "));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    fs::write(&path, "x,y,d\n0.1,1,1\n0.2,1,1\n0.3,2,0\n").unwrap();
    let out = frd(&["select", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: ValidationError: "));
}

#[test]
fn select_then_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(dir.path(), "2");

    let sel = json(&frd(&["select", "--input", &data, "--cutoff", "0"]));
    let hp = sel["h_plus"].as_f64().unwrap();
    let hm = sel["h_minus"].as_f64().unwrap();
    assert!(hp > 0.0 && hm > 0.0);
    assert!(sel["regime"].is_string());
    assert!(sel["pilots"]["tauD"].as_f64().unwrap() > 0.3);
    assert!(sel["coefficients"]["omega_plus"].as_f64().unwrap() >= 0.0);

    let auto = json(&frd(&["estimate", "--input", &data, "--auto"]));
    let fixed = json(&frd(&[
        "estimate", "--input", &data, "--h-plus", &hp.to_string(), "--h-minus", &hm.to_string(),
    ]));
    // serde_json's default float parser may be off by one ulp.
    let (ta, tf) = (auto["tau"].as_f64().unwrap(), fixed["tau"].as_f64().unwrap());
    assert!((ta - tf).abs() <= 1e-12 * tf.abs().max(1.0));
    assert_eq!(auto["selection"]["h_plus"], sel["h_plus"]);
    let tau = fixed["tau"].as_f64().unwrap();
    let ratio = fixed["tauY"].as_f64().unwrap() / fixed["tauD"].as_f64().unwrap();
    assert!((tau - ratio).abs() < 1e-12);
}

#[test]
fn dgp_sample_is_reproducible() {
    let a = frd(&["dgp-sample", "--design", "1", "--n", "100", "--seed", "9"]);
    let b = frd(&["dgp-sample", "--design", "1", "--n", "100", "--seed", "9"]);
    let c = frd(&["dgp-sample", "--design", "1", "--n", "100", "--seed", "9", "--rep", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,d"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn simulate_writes_outputs_and_assembles_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let f = json(&frd(&["simulate", "--design", "2", "--reps", "20", "--out-dir", d]));
    assert_eq!(f["reps_total"], 20);
    assert_eq!(f["method"], "mmse_f");
    let s = json(&frd(&["simulate", "--design", "2", "--method", "mmse-s", "--reps", "20", "--out-dir", d]));
    assert_eq!(s["method"], "mmse_s");

    let cdf = fs::read_to_string(dir.path().join("cdf.csv")).unwrap();
    assert_eq!(cdf.lines().next(), Some("threshold,fraction"));
    assert_eq!(cdf.lines().count(), 201);

    let mut rdr = csv::Reader::from_path(dir.path().join("table.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][1], "mmse-f");
    assert_eq!(&rows[0][10], "1");
    let eff: f64 = rows[1][10].parse().unwrap();
    let expected = f["rmse_trimmed"].as_f64().unwrap() / s["rmse_trimmed"].as_f64().unwrap();
    assert!((eff - expected).abs() < 1e-12);

    // Rerunning replaces the row instead of appending.
    json(&frd(&["simulate", "--design", "2", "--reps", "20", "--out-dir", d]));
    let n = csv::Reader::from_path(dir.path().join("table.csv")).unwrap().records().count();
    assert_eq!(n, 2);
}
