use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_zonal-sobolev");

fn run(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("ZONAL_SOBOLEV_OUT");
    if let Some(dir) = env_out {
        cmd.env("ZONAL_SOBOLEV_OUT", dir);
    }
    cmd.output().unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn multiplier_table_has_one_row_per_degree_and_radius() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["multiplier", "--d", "3", "--ell", "1..3", "--t-grid", "lin:0.1:1:4", "--out", out], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("multiplier_cap_average.csv")).unwrap();
    assert!(text.contains("# config_hash:"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 12);
    for row in rows {
        let f: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        let (ell, t, m) = (f[0] as usize, f[1], f[2]);
        // d = 3: m = (P_{ℓ-1} - P_{ℓ+1}) / ((2ℓ+1)(1 - cos t)), written out for ℓ ≤ 3
        let x = t.cos();
        let p = [1.0, x, 1.5 * x * x - 0.5, 2.5 * x * x * x - 1.5 * x, (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0];
        let want = (p[ell - 1] - p[ell + 1]) / ((2 * ell + 1) as f64 * (1.0 - x));
        assert!((m - want).abs() < 1e-12, "ell {ell} t {t}: {m} vs {want}");
    }
}

#[test]
fn empty_degree_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["multiplier", "--ell", "", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("multiplier_cap_average.csv")).unwrap();
    assert!(data_rows(&text).is_empty());
    assert!(text.lines().any(|l| l == "ell,t,value"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec!["profile".to_string(), "--d".into(), "3".into(), "--alpha".into(), "1.5,2".into(), "--ell".into(), "1..12".into(), "--out".into(), d.to_str().unwrap().into()]
    };
    for d in [a.path(), b.path()] {
        let v = args(d);
        let v: Vec<&str> = v.iter().map(String::as_str).collect();
        assert_eq!(run(&v, None).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn environment_sets_output_directory_and_flag_wins() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["multiplier", "--ell", "1", "--t-grid", "0.5"], Some(env_dir.path())).status.code(), Some(0));
    assert!(env_dir.path().join("multiplier_cap_average.csv").exists());
    let o = run(&["multiplier", "--ell", "1", "--t-grid", "0.5", "--out", flag_dir.path().to_str().unwrap()], Some(env_dir.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.path().join("multiplier_cap_average.csv").exists());
}

#[test]
fn config_file_values_are_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"d": 2, "ell": "1..2", "t_grid": "0.25", "format": "json"}"#).unwrap();
    let o = run(&["multiplier", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("multiplier_cap_average.json")).unwrap()).unwrap();
    assert!(v.to_string().contains("0.25"));
}

#[test]
fn configuration_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"d": 3, "colour": "blue"}"#).unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["multiplier", "--config", bad.to_str().unwrap(), "--out", out],
        vec!["multiplier", "--band-limit", "2048", "--out", out],
        vec!["multiplier", "--d", "1", "--out", out],
        vec!["profile", "--alpha", "-1", "--out", out],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args, None).status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("certify"));
}

#[test]
fn field_norms_reads_a_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("f.json");
    fs::write(&field, r#"{"d": 3, "coeffs": [0.0, 1.0, 0.5]}"#).unwrap();
    let o = run(
        &["field-norms", "--field", field.to_str().unwrap(), "--band-limit", "2", "--alpha", "1", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("field_norms_d3.csv").exists());
}

#[test]
fn certify_reports_failing_cells_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--d", "4", "--alpha", "3.5", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("certify_d4_summary.csv")).unwrap();
    assert_eq!(data_rows(&text).len(), 1);
}
