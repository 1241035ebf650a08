use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn medzisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medzisc"))
        .args(args)
        .env_remove("MEDZISC_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, config: &str) -> Output {
    let cfg = dir.join("scenario.toml");
    fs::write(&cfg, config).unwrap();
    medzisc(&["simulate", "--config", p(&cfg), "--out", p(&dir.join("sim"))])
}

#[test]
fn simulate_minimal_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), "n = 4\ncells = 5\ngenes = 3\nseed = 7\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let sim = dir.path().join("sim");
    assert_eq!(fs::read_dir(sim.join("counts")).unwrap().count(), 4);
    for f in ["metadata.tsv", "truth.tsv", "manifest.json"] {
        assert!(sim.join(f).is_file(), "{f}");
    }
    let truth = fs::read_to_string(sim.join("truth.tsv")).unwrap();
    assert_eq!(truth.lines().count(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(sim.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["n_true"], 3);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(simulate(d.path(), "n = 6\ncells = 8\ngenes = 5\nseed = 7\n").status.success());
    }
    for f in ["metadata.tsv", "truth.tsv", "m.tsv", "f.tsv", "counts/subject1.tsv"] {
        let x = fs::read(a.path().join("sim").join(f)).unwrap();
        let y = fs::read(b.path().join("sim").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn simulate_rejects_bad_split() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), "[split]\nboth = 0.5\nm_only = 0.5\nf_only = 0.5\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("split"), "{}", stderr(&o));
}

/// Simulated planted-signal data shared by the analyze tests.
fn planted(dir: &Path) -> std::path::PathBuf {
    let o = simulate(dir, "n = 100\ncells = 60\ngenes = 30\nseed = 3\n");
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("sim")
}

#[test]
fn analyze_finds_planted_mediators() {
    let dir = tempfile::tempdir().unwrap();
    let sim = planted(dir.path());
    let out = dir.path().join("out");
    let o = medzisc(&[
        "analyze",
        "--metadata",
        p(&sim.join("metadata.tsv")),
        "--counts",
        p(&sim.join("counts")),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("medzisc.json")).unwrap()).unwrap();
    let hits = report["m_results"].as_array().unwrap().iter().filter(|r| r["significant"] == true).count();
    assert!(hits >= 1);
    let tsv = fs::read_to_string(out.join("medzisc.tsv")).unwrap();
    assert!(tsv.starts_with("gene\tpathway\t"));
    assert!(!out.join("naive.json").exists());

    // Precomputed matrices give the same table as raw counts.
    let out2 = dir.path().join("out2");
    let o = medzisc(&[
        "analyze",
        "--metadata",
        p(&sim.join("metadata.tsv")),
        "--m",
        p(&sim.join("m.tsv")),
        "--f",
        p(&sim.join("f.tsv")),
        "--out",
        p(&out2),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(tsv, fs::read_to_string(out2.join("medzisc.tsv")).unwrap());
}

#[test]
fn analyze_naive_flag() {
    let dir = tempfile::tempdir().unwrap();
    let sim = planted(dir.path());
    let out = dir.path().join("out");
    let o = medzisc(&[
        "analyze",
        "--metadata",
        p(&sim.join("metadata.tsv")),
        "--m",
        p(&sim.join("m.tsv")),
        "--f",
        p(&sim.join("f.tsv")),
        "--method",
        "naive",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("naive.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "naive");
    assert!(!out.join("medzisc.json").exists());
}

#[test]
fn analyze_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sim = planted(dir.path());

    let meta = fs::read_to_string(sim.join("metadata.tsv")).unwrap();
    let no_y: String = meta
        .lines()
        .map(|l| l.rsplit_once('\t').unwrap().0.to_string() + "\n")
        .collect();
    let no_y_path = dir.path().join("no_y.tsv");
    fs::write(&no_y_path, no_y).unwrap();
    let o = medzisc(&["analyze", "--metadata", p(&no_y_path), "--counts", p(&sim.join("counts")), "--out", p(&dir.path().join("o1"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`Y`"), "{}", stderr(&o));

    fs::remove_file(sim.join("counts/subject007.tsv")).unwrap();
    let o = medzisc(&["analyze", "--metadata", p(&sim.join("metadata.tsv")), "--counts", p(&sim.join("counts")), "--out", p(&dir.path().join("o2"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("subject007"), "{}", stderr(&o));
}

fn write_grid(dir: &Path, body: &str) -> std::path::PathBuf {
    let g = dir.join("grid.toml");
    fs::write(&g, body).unwrap();
    g
}

const SMALL_GRID: &str = "n = 60\ncells = 30\ngenes = 15\nn_true = 4\nreplicates = 2\nseed = 9\n";

#[test]
fn benchmark_one_cell() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path(), SMALL_GRID);
    let out = dir.path().join("bench");
    let o = medzisc(&["benchmark", "--grid", p(&grid), "--out", p(&out), "--per-replicate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("table.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("60\t30\t15\tmedzisc\t2\t0\t"));
    assert!(rows[1].starts_with("60\t30\t15\tnaive\t2\t0\t"));
    assert_eq!(fs::read_to_string(out.join("replicates.csv")).unwrap().lines().count(), 5);
    for f in ["table.json", "timing.tsv", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn benchmark_thresholds_gate_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid(dir.path(), &format!("{SMALL_GRID}methods = [\"medzisc\"]\n[thresholds.medzisc]\nmax_fdr_m = 1.0\nmin_power_m = 1.01\n"));
    let o = medzisc(&["benchmark", "--grid", p(&grid), "--out", p(&dir.path().join("b"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("power_m"), "{}", stderr(&o));
    assert!(dir.path().join("b/table.tsv").is_file());
}

#[test]
fn benchmark_unreadable_grid_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = medzisc(&["benchmark", "--grid", p(&dir.path().join("missing.toml")), "--out", p(&dir.path().join("b"))]);
    assert_eq!(o.status.code(), Some(2));
    let grid = write_grid(dir.path(), "n = [100\n");
    let o = medzisc(&["benchmark", "--grid", p(&grid), "--out", p(&dir.path().join("b"))]);
    assert_eq!(o.status.code(), Some(2));
}
