use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cvmbqc(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvmbqc"))
        .args(args)
        .env("CVMBQC_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn fourier_preset_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvmbqc(dir.path(), &["run", "fourier_paper"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("fourier_paper.json"));
    let angles: Vec<f64> = report["gate"]["angles_deg"].as_array().unwrap().iter().map(as_f64).collect();
    assert_eq!(angles, [90.0, 0.0, 90.0, 90.0]);
    let f = as_f64(&report["fidelity"]["fidelity"]);
    assert!((f - 1.0 / (1.0 + 1.5 * 10f64.powf(-0.55))).abs() < 1e-11);
    assert!((f - 0.703).abs() < 1e-3);
}

#[test]
fn squeeze_presets() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cvmbqc(dir.path(), &["run", "squeeze6_paper"]).status.success());
    let report = json(&dir.path().join("squeeze6_paper.json"));
    let angles: Vec<f64> = report["gate"]["angles_deg"].as_array().unwrap().iter().map(as_f64).collect();
    for (a, want) in angles.iter().zip([-41.4, 72.2, 41.9, 74.4]) {
        assert!((a - want).abs() < 0.05, "{angles:?}");
    }
    assert!(report["fidelity"]["fidelity"].is_null());

    assert!(cvmbqc(dir.path(), &["run", "squeeze10_vacuum"]).status.success());
    let report = json(&dir.path().join("squeeze10_vacuum.json"));
    let db = as_f64(&report["output"]["variance_db_x"]);
    assert!(db < 0.0 && (db + 0.7).abs() < 0.1, "{db}");
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = cvmbqc(dir.path(), &["run", "fourier_monte_carlo"]);
        assert!(out.status.success());
    }
    for file in ["fourier_monte_carlo.json", "fourier_monte_carlo_raw_outcomes.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between runs");
    }
    let report = json(&a.path().join("fourier_monte_carlo.json"));
    assert_eq!(report["monte_carlo"]["shots"], 100_000);
    assert_eq!(csv_rows(&a.path().join("fourier_monte_carlo_raw_outcomes.csv")).len(), 100_000);
}

#[test]
fn json_and_csv_phase_scans_agree() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cvmbqc(dir.path(), &["run", "fourier_paper"]).status.success());
    let report = json(&dir.path().join("fourier_paper.json"));
    let scan = report["phase_scan"].as_array().unwrap();
    let rows = csv_rows(&dir.path().join("fourier_paper_phase_scan.csv"));
    assert_eq!(scan.len(), rows.len());
    for (j, c) in scan.iter().zip(&rows) {
        assert_eq!(as_f64(&j["theta_deg"]), c[0].parse::<f64>().unwrap());
        assert_eq!(as_f64(&j["power_db"]), c[1].parse::<f64>().unwrap());
    }
    // Fourier moves the x-peak to 90° (the trace repeats every 180°).
    let peak = scan
        .iter()
        .max_by(|a, b| as_f64(&a["power_db"]).total_cmp(&as_f64(&b["power_db"])))
        .unwrap();
    assert!((as_f64(&peak["theta_deg"]).rem_euclid(180.0) - 90.0).abs() < 1e-9);
}

#[test]
fn sweep_tables_agree_and_follow_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvmbqc(dir.path(), &["sweep", "squeeze10_vacuum", "--param", "a_db", "--values", "3,6,10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("squeeze10_vacuum_sweep_a_db.csv"));
    let table = json(&dir.path().join("squeeze10_vacuum_sweep_a_db.json"));
    assert_eq!(rows.len(), 12);
    for (c, j) in rows.iter().zip(table.as_array().unwrap()) {
        assert_eq!(c[1].parse::<f64>().unwrap(), as_f64(&j["value"]));
        assert_eq!(c[4].parse::<f64>().unwrap(), as_f64(&j["level_db"]));
    }
    let level = |input: &str, quad: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| &r[2] == input && &r[3] == quad)
            .map(|r| r[4].parse().unwrap())
            .collect()
    };
    let vx = level("vacuum", "x");
    assert!(vx[0] > vx[1] && vx[1] > vx[2]);
    let pp = level("p_coherent", "p");
    for (l, a) in pp.iter().zip([3.0, 6.0, 10.0]) {
        assert!((l - (14.7 + a)).abs() < 0.2, "{l} vs {}", 14.7 + a);
    }
    let bad = cvmbqc(dir.path(), &["sweep", "squeeze10_vacuum", "--param", "a_db", "--values", "0"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("singular.toml");
    std::fs::write(
        &cfg,
        "schema = 1\nname = \"singular\"\nresource_squeezing_db = -5.5\n\
         [input]\nkind = \"vacuum\"\n[gate]\nkind = \"explicit_angles\"\ndegrees = [90.0, 0.0, 0.0, 90.0]\n",
    )
    .unwrap();
    let out = cvmbqc(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sin(theta_2)"));

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "schema = 2\nname = \"x\"\n").unwrap();
    assert_eq!(cvmbqc(dir.path(), &["run", broken.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(cvmbqc(dir.path(), &["run", "no_such_preset"]).status.code(), Some(1));
}

#[test]
fn compile_and_analyze_print_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvmbqc(dir.path(), &["compile", "--target", "xsq:10", "--r-db", "-5.5"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((as_f64(&v["excess_var_x"]) - 0.186).abs() < 1e-3);
    assert!((as_f64(&v["excess_var_p"]) - 0.810).abs() < 1e-3);

    let out = cvmbqc(dir.path(), &["compile", "--target", "custom:0,-1,1,0"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((as_f64(&v["gate"][0][1]) + 1.0).abs() < 1e-8);

    let out = cvmbqc(dir.path(), &["analyze", "--fidelity", "--r-db", "-12.7", "--steps", "4"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["max_steps_at_fidelity"], 73);
}
