use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lab(cmd: &str, config: &Path, out: &Path, seed: u64) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obstacle-lab"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--seed", &seed.to_string()])
        .output()
        .expect("run obstacle-lab")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// `quantity,value` rows of a diagnostics or summary file.
fn quantity(path: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{key},"))).unwrap_or_else(|| panic!("{key} missing"));
    line.split(',').nth(1).unwrap().parse().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn poiseuille_preset_is_exact() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "p.cfg", "preset = poiseuille\nh = 0.1\n");
    let out = dir.path().join("out");
    let o = lab("solve", &cfg, &out, 0);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = out.join("diagnostics.csv");
    assert!(quantity(&diag, "velocity_l2_error") <= 1e-8);
    assert!(quantity(&diag, "projected_divergence") <= 1e-10);
    assert!(out.join("mesh.txt").exists() && out.join("field.txt").exists());
    let first = fs::read_to_string(&diag).unwrap().lines().next().unwrap().to_string();
    assert!(first.starts_with("# obstacle-lab ") && first.contains("config_sha256=") && first.ends_with("seed=0"));
}

#[test]
fn zero_preset_gives_zero_field_and_cauchy_data() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "z.cfg", "preset = zero\nh = 0.0625\nobstacle = circle 0 0 0.3\n");
    let out = dir.path().join("out");
    let o = lab("solve", &cfg, &out, 0);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(quantity(&out.join("diagnostics.csv"), "velocity_l2"), 0.0);
    let rows = data_rows(&out.join("cauchy.csv"));
    assert!(!rows.is_empty());
    for r in rows {
        assert!(r[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0), "{r:?}");
    }
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    for (text, key) in [
        ("preset = poiseuille\nmesh_size = 0.1\n", "mesh_size"),
        ("h = 0.1\nh = 0.2\n", "h"),
        ("preset = bump\nh = 0.1\nobstacle = circle 0 0 0.3\n", "h"),
        ("preset = teapot\n", "preset"),
    ] {
        let cfg = write_config(dir.path(), "bad.cfg", text);
        let o = lab("solve", &cfg, &out, 0);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("\"error\":\"config\""), "{err}");
        assert!(err.contains(&format!("\"key\":\"{key}\"")), "{err}");
    }
    let o = lab("solve", &dir.path().join("missing.cfg"), &out, 0);
    assert_eq!(o.status.code(), Some(2));
}

const EXPERIMENT: &str = "\
family = DILATE
d_targets = 0, 0.02, 0.05, 0.08, 0.1, 0.12
h = 0.0625
bump_amplitude = 0.2
";

#[test]
fn experiment_writes_records_fits_and_resumes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "e.cfg", EXPERIMENT);
    let out = dir.path().join("out");
    let o = lab("experiment", &cfg, &out, 1);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = data_rows(&out.join("records.csv"));
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.last().unwrap() == "ok"));
    assert_eq!(records[0][0], "dilate-00");
    assert_eq!(data_rows(&out.join("fits.csv")).len(), 2);
    assert!(quantity(&out.join("summary.csv"), "spearman_d_epsilon") >= 0.9);
    assert_eq!(data_rows(&out.join("d_epsilon.csv")).len(), 6);

    // A truncated file is completed; the kept rows are not recomputed.
    let full = fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines: Vec<String> = full.lines().take(5).map(str::to_string).collect();
    let mut marker: Vec<&str> = lines[2].split(',').collect();
    marker[2] = "1.00000000000000e-1";
    lines[2] = marker.join(",");
    fs::write(out.join("records.csv"), lines.join("\n") + "\n").unwrap();
    let o = lab("experiment", &cfg, &out, 1);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resumed = data_rows(&out.join("records.csv"));
    assert_eq!(resumed.len(), 6);
    assert_eq!(resumed[0][2], "1.00000000000000e-1");
    assert_eq!(resumed[5], records[5]);

    // Another seed does not resume but reproduces every epsilon.
    let other = dir.path().join("other");
    let o = lab("experiment", &cfg, &other, 2);
    assert!(o.status.success());
    let again = data_rows(&other.join("records.csv"));
    for (a, b) in again.iter().zip(&records) {
        assert_eq!(a[2], b[2]);
        assert_eq!(a[7], "2");
    }
}

#[test]
fn unreachable_family_target_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "e.cfg", "family = DILATE\nd_targets = 0.05, 0.9\nh = 0.0625\n");
    let o = lab("experiment", &cfg, &dir.path().join("out"), 0);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"key\":\"d_targets\""));
}

#[test]
fn inequalities_on_synthetic_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "i.cfg",
        "h = 0.1\nkinds = THREE_SPHERES, THREE_SPHERES_GRAD\ntriples = 0 0 0.8; 0.9 0 0.5\n",
    );
    let out = dir.path().join("out");
    let o = lab("inequalities", &cfg, &out, 0);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let delta_star = (8.0f64 / 3.0).ln() / 8.0f64.ln();
    for kind in ["three_spheres", "three_spheres_grad"] {
        let rows = data_rows(&out.join(format!("inequalities_{kind}.csv")));
        assert_eq!(rows.len(), 2);
        let delta: f64 = rows[0][9].parse().unwrap();
        let c: f64 = rows[0][10].parse().unwrap();
        assert!((delta - delta_star).abs() <= 1e-12 && (c - 1.0).abs() <= 1e-3, "{rows:?}");
        assert_eq!(rows[1][11], "outside_domain");
    }
    let fit = data_rows(&out.join("inequalities_fit.csv"));
    assert_eq!(fit.len(), 2);
    assert_eq!(fit[0][4], "1");
}

#[test]
fn inequalities_with_no_triples_write_headers_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "i.cfg", "h = 0.1\nkinds = THREE_SPHERES\n");
    let out = dir.path().join("out");
    let o = lab("inequalities", &cfg, &out, 0);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(data_rows(&out.join("inequalities_three_spheres.csv")).is_empty());
    assert!(data_rows(&out.join("inequalities_fit.csv")).is_empty());
}

#[test]
fn difference_kind_needs_field_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "i.cfg", "kinds = THREE_SPHERES_DIFF\n");
    let o = lab("inequalities", &cfg, &dir.path().join("out"), 0);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "j.cfg", "source = field\nmesh_file = nope.txt\nfield_file = nope.txt\n");
    let o = lab("inequalities", &cfg, &dir.path().join("out"), 0);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"key\":\"mesh_file\""));
}
