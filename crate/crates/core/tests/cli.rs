use std::path::Path;
use std::process::{Command, Output};

fn hotspot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hotspot")).args(args).env("RUST_LOG", "info").output().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr is empty");
    serde_json::from_str(last).unwrap_or_else(|e| panic!("last stderr line is not JSON ({e}): {last}"))
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const RAW: &str = "\
dc_dist,dispatch_date_time,location_block,lat,lng
1,2015-03-01 10:00:00,100 BLOCK A ST,39.95,-75.16
4,2015-03-01 11:00:00,200 BLOCK B ST,39.96,-75.17
23,2015-03-02 11:00:00,300 BLOCK C ST,39.97,-75.18
2,2015-03-03 11:00:00,400 BLOCK D ST,NA,NA
2,not a date,500 BLOCK E ST,39.98,-75.19
2,2016-01-01 00:00:00,600 BLOCK F ST,39.99,-75.20
";

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(hotspot(&["--help"]).status.code(), Some(0));
    assert_eq!(hotspot(&["--version"]).status.code(), Some(0));
    assert_eq!(hotspot(&["nsi", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one_with_json() {
    let out = hotspot(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["exit_code"], 1);

    let out = hotspot(&["--year-start", "2020", "--year-end", "2010", "nsi"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "config");

    let out = hotspot(&["nsi"]);
    assert_eq!(out.status.code(), Some(1), "missing input is a config error");

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("bad.toml"), "no_such_key = 3\n");
    let out = hotspot(&["--config", &cfg, "nsi"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = hotspot(&["--input", "/definitely/not/here.csv", "nsi"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "io");

    let bad = write(&dir.path().join("bad.csv"), "a,b\n1,2\n");
    let out = hotspot(&["--input", &bad, "--output-dir", dir.path().to_str().unwrap(), "clean"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"], "missing_column");
    assert!(err["message"].as_str().unwrap().contains("dispatch_date_time"));
}

#[test]
fn clean_reports_and_removed_district_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(&dir.path().join("raw.csv"), RAW);
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();

    let out = hotspot(&["--input", &input, "--output-dir", o, "clean"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("clean_report.json")).unwrap()).unwrap();
    assert_eq!(report["input_rows"], 6);
    assert_eq!(report["kept"], 2);
    assert_eq!(report["dropped_na_location"], 1);
    assert_eq!(report["dropped_invalid_fields"], 1);
    assert_eq!(report["dropped_removed_districts"], 2);

    let out = hotspot(&["--input", &input, "--output-dir", o, "--removed-districts", "", "clean"]);
    assert!(out.status.success());
    let cleaned = std::fs::read_to_string(out_dir.join("cleaned.csv")).unwrap();
    assert!(cleaned.lines().any(|l| l.starts_with("4,")));
    assert!(cleaned.lines().any(|l| l.starts_with("23,")));
    assert_eq!(cleaned.lines().count(), 5);
}

#[test]
fn column_mapping_from_config_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(&dir.path().join("raw.csv"), &RAW.replacen("lat,lng", "latitude,longitude", 1));
    let o = dir.path().join("out");
    let cfg =
        write(&dir.path().join("run.toml"), &format!("output_dir = \"{}\"\n[columns]\nlat = \"latitude\"\nlon = \"wrong\"\n", o.display()));
    let out = hotspot(&["--config", &cfg, "--input", &input, "clean"]);
    assert_eq!(out.status.code(), Some(2), "config maps lon to a missing column");
    let out = hotspot(&["--config", &cfg, "--col-lon", "longitude", "--input", &input, "clean"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(o.join("cleaned.csv").exists());
}

#[test]
fn cluster_eps_override_and_skip_notice() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let csv = format!("{d}/city.csv");
    let out = hotspot(&["--seed", "3", "synth", "--kind", "city", "--output", &csv]);
    assert!(out.status.success());
    // Add a district with a single incident; it must be skipped, not fail.
    let mut text = std::fs::read_to_string(&csv).unwrap();
    text.push_str("77,2015-05-05 12:00:00,1 BLOCK X ST,39.95,-75.16\n");
    std::fs::write(&csv, text).unwrap();

    let out = hotspot(&["--input", &csv, "--output-dir", d, "--eps", "0.0015", "cluster"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipping district 77 year 2015"));
    let log = std::fs::read_to_string(dir.path().join("eps_log.csv")).unwrap();
    let rows: Vec<&str> = log.lines().skip(1).collect();
    assert_eq!(rows.len(), 21 * 11);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("0.0015") && r.split(',').nth(4) == Some("override")));
    assert!(!rows.iter().any(|r| r.starts_with("77,")));

    let geo: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("clusters.geojson")).unwrap()).unwrap();
    assert_eq!(geo["type"], "FeatureCollection");
    let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().next().unwrap(), "district,year,point_id,lat,lon,cluster_id,role");
}

#[test]
fn nsi_median_threshold_and_redline_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let csv = format!("{d}/city.csv");
    assert!(hotspot(&["synth", "--kind", "city", "--output", &csv]).status.success());
    let out = hotspot(&["--input", &csv, "--output-dir", d, "--threshold", "median", "nsi"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let nsi = std::fs::read_to_string(dir.path().join("nsi.csv")).unwrap();
    let systemic = nsi.lines().filter(|l| l.contains(",systemic,")).count();
    assert_eq!(systemic, 10);
    assert!(dir.path().join("matrices/district_19.csv").exists());

    let red = format!("{d}/red.csv");
    let holc = format!("{d}/holc.geojson");
    assert!(hotspot(&["synth", "--kind", "redline-uniform", "--output", &red, "--holc-output", &holc]).status.success());
    let out = hotspot(&["--input", &red, "--holc", &holc, "--output-dir", d, "redline", "--district", "19"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("redline_19.json")).unwrap()).unwrap();
    assert!(rep["chi_square"]["p_value"].as_f64().unwrap() > 0.1);
    assert!(std::fs::read_to_string(dir.path().join("redline_19.txt")).unwrap().contains("Other Clusters"));

    let out = hotspot(&["--input", &red, "--output-dir", d, "redline", "--district", "19"]);
    assert_eq!(out.status.code(), Some(1), "missing HOLC layer is a config error");
    let out = hotspot(&["--input", &red, "--holc", &holc, "--output-dir", d, "redline", "--district", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_synth_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = hotspot(&[
        "--year-start",
        "2014",
        "--year-end",
        "2016",
        "synth",
        "--kind",
        "scenario",
        "--mode",
        "stationary",
        "--centers",
        "39.95,-75.16;39.97,-75.12;39.93,-75.10",
        "--points-per-cluster",
        "30",
        "--background-fraction",
        "0.1",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // 90 blob points plus round(0.1 / 0.9 * 90) = 10 background, per year.
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 3 * 100);

    let out = hotspot(&["synth", "--kind", "scenario", "--points-per-cluster", "2", "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
