mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{copy_dir, fixture};
use descimg::fetch::tree_listing;

fn descimg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_descimg"))
        .args(args)
        .output()
        .expect("run descimg")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn version_and_help() {
    let v = descimg(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout(&v), format!("descimg {}\n", env!("CARGO_PKG_VERSION")));
    let h = descimg(&["evaluate", "--help"]);
    assert_eq!(h.status.code(), Some(0));
    for flag in ["--manifest", "--scores", "--mode", "--workers", "--format", "--out", "--baselines", "--config"] {
        assert!(stdout(&h).contains(flag), "{flag}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let o = descimg(&["evaluate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let o = descimg(&["classify", "--scores", "x", "--site", "s", "--metric", "Z07"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(descimg(&[]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let o = descimg(&["evaluate", "--manifest", "/nonexistent/m.csv", "--scores", "/nonexistent"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: /nonexistent/m.csv"), "{}", stderr(&o));
}

#[test]
fn classify_sample_site() {
    let scores = fixture("sample_site/s1.json");
    let o = descimg(&["classify", "--scores", s(&scores), "--site", "s1", "--metric", "A15"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("A15")).unwrap();
    assert_eq!(row.split_whitespace().nth(1), Some("machinery"));
    assert_eq!(row.split_whitespace().nth(2), Some("9"));

    let dir = fixture("sample_site");
    let o = descimg(&["classify", "--scores", s(&dir), "--site", "s1", "--format", "json", "--manifest", s(&dir.join("manifest.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let metrics = doc["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), 12);
    assert!(metrics.iter().all(|m| m["decision"] == "machinery"));
}

#[test]
fn evaluate_table_and_config_file() {
    let manifest = fixture("mini/manifest.csv");
    let scores = fixture("mini/scores");
    let o = descimg(&["evaluate", "--manifest", s(&manifest), "--scores", s(&scores), "--format", "table"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    let h_row = table.lines().find(|l| l.starts_with('H')).unwrap();
    assert_eq!(h_row.split_whitespace().collect::<Vec<_>>(), ["H", "66.67%", "75.00%", "83.33%", "91.67%"]);
    assert!(table.contains("PerImage    40.00%"));

    let work = tempfile::tempdir().unwrap();
    let config = work.path().join("run.toml");
    std::fs::write(
        &config,
        format!("manifest = {:?}\n[evaluate]\nscores = {:?}\nformat = \"json\"\n", s(&manifest), s(&scores)),
    )
    .unwrap();
    let out = work.path().join("report.csv");
    let o = descimg(&["--config", s(&config), "evaluate", "--format", "csv", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("metric,accuracy,correct,total\n"), "flag overrides file");

    std::fs::write(&config, "manifest = \"m.csv\"\ncolour = \"red\"\n").unwrap();
    let o = descimg(&["evaluate", "--config", s(&config)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn report_reserves_baseline_cells() {
    let work = tempfile::tempdir().unwrap();
    let json = work.path().join("report.json");
    let o = descimg(&[
        "evaluate", "--manifest", s(&fixture("mini/manifest.csv")), "--scores", s(&fixture("mini/scores")),
        "--format", "json", "--out", s(&json),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let baselines = work.path().join("baselines.csv");
    std::fs::write(&baselines, "row,column,accuracy\nScreenshots,BoVW,0.4695\nGoogle10,BoVW,\n").unwrap();
    let o = descimg(&[
        "report", "--input", s(&json), "--baselines", s(&baselines), "--row", "Google10", "--column", "Ours",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let google = out.lines().find(|l| l.starts_with("Google10")).unwrap();
    assert_eq!(google.split_whitespace().collect::<Vec<_>>(), ["Google10", "-", "91.67%"]);
    let shots = out.lines().find(|l| l.starts_with("Screenshots")).unwrap();
    assert_eq!(shots.split_whitespace().collect::<Vec<_>>(), ["Screenshots", "46.95%", "-"]);

    let o = descimg(&["report", "--input", s(&json), "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_plot_series() {
    let work = tempfile::tempdir().unwrap();
    for epoch in ["epoch_005", "epoch_010"] {
        copy_dir(&fixture("mini/scores"), &work.path().join("snaps").join(epoch));
    }
    let o = descimg(&[
        "sweep", "--manifest", s(&fixture("mini/manifest.csv")), "--snapshots", s(&work.path().join("snaps")),
        "--format", "plot-series",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("epoch,metric,accuracy\n5,S05,"));
    assert_eq!(out.lines().count(), 27);
}

#[test]
fn synth_is_deterministic() {
    let work = tempfile::tempdir().unwrap();
    let a = work.path().join("a");
    let b = work.path().join("b");
    for out in [&a, &b] {
        let o = descimg(&["synth", "--sites", "500", "--classes", "4", "--images", "20", "--p", "0.6", "--seed", "7", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let tree = tree_listing(&a).unwrap();
    assert_eq!(tree.len(), 500 * 20 + 500 + 2);
    assert!(tree == tree_listing(&b).unwrap(), "trees differ");
}

#[test]
fn fetch_score_stats_pipeline() {
    let work = tempfile::tempdir().unwrap();
    let manifest = work.path().join("manifest.csv");
    std::fs::write(&manifest, common::mock_server::manifest_csv()).unwrap();
    let images = work.path().join("images");
    let report = work.path().join("fetch.json");
    let o = descimg(&[
        "fetch", "--manifest", s(&manifest), "--out", s(&images), "--mock-seed", "11", "--query-mode", "domain",
        "--report", s(&report),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(images.join("site_01/meta.json")).unwrap()).unwrap();
    assert_eq!(meta["query"], "site-01.example");
    assert_eq!(meta["query_mode"], "domain");

    let scores = work.path().join("scores");
    let o = descimg(&[
        "score", "--manifest", s(&manifest), "--images", s(&images), "--out", s(&scores), "--seed", "2", "--p", "0.8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = descimg(&["evaluate", "--manifest", s(&manifest), "--scores", s(&scores), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let stats = work.path().join("stats");
    let o = descimg(&["stats", "--manifest", s(&manifest), "--images", s(&images), "--out", s(&stats)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hist = std::fs::read_to_string(stats.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("bin_base_percent,count\n0,"));
    assert!(stats.join("stats.json").is_file());
}
