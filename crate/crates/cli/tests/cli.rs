//! End-to-end subprocess tests for the `ulrisk` binary.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ulrisk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code plus the parsed JSON error line from stderr.
fn run_err(dir: &Path, args: &[&str]) -> (i32, serde_json::Value) {
    let out = run(dir, args);
    assert!(!out.status.success(), "command {args:?} unexpectedly passed");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().next().unwrap_or("");
    let doc: serde_json::Value =
        serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr not JSON: {stderr}"));
    (out.status.code().unwrap(), doc)
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap_or_else(|e| panic!("missing {rel}: {e}"))
}

/// Counts column of a risk-map CSV without a turbine mask.
fn riskmap_counts(dir: &Path, rel: &str) -> Vec<u32> {
    let text = String::from_utf8(read(dir, rel)).unwrap();
    text.lines()
        .skip(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn help_exists_for_every_subcommand() {
    let dir = TempDir::new().unwrap();
    for sub in [
        "ingest",
        "synth",
        "train",
        "cv",
        "importance",
        "match",
        "diagnose-grid",
        "riskmap",
    ] {
        let out = run(dir.path(), &[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("--out"), "{sub} help lacks --out");
        assert!(text.contains("--seed"), "{sub} help lacks --seed");
    }
}

#[test]
fn unknown_flag_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (code, doc) = run_err(dir.path(), &["riskmap", "--no-such-flag"]);
    assert_eq!(code, 2);
    assert_eq!(doc["error"]["kind"], "config");
    assert_eq!(doc["error"]["code"], 2);
}

#[test]
fn missing_input_path_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (code, doc) = run_err(
        dir.path(),
        &["cv", "--data", "absent.csv", "--pool", "also-absent.csv"],
    );
    assert_eq!(code, 2);
    assert_eq!(doc["error"]["kind"], "config");
}

#[test]
fn malformed_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "not,a,real,header\n1,2,3,4\n").unwrap();
    let (code, doc) = run_err(dir.path(), &["ingest", "--features", "bad.csv"]);
    assert_eq!(code, 3);
    assert_eq!(doc["error"]["kind"], "data");
}

#[test]
fn synth_is_deterministic_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let base = [
        "synth", "--kind", "tower", "--event-days", "5", "--seed", "11",
    ];
    run_ok(dir.path(), &[&base[..], &["--out", "a"]].concat());
    run_ok(dir.path(), &[&base[..], &["--out", "b"]].concat());
    assert_eq!(read(dir.path(), "a/events.csv"), read(dir.path(), "b/events.csv"));
    assert_eq!(
        read(dir.path(), "a/events_truth.csv"),
        read(dir.path(), "b/events_truth.csv")
    );
    run_ok(
        dir.path(),
        &[
            "synth", "--kind", "tower", "--event-days", "5", "--seed", "12", "--out", "c",
        ],
    );
    assert_ne!(read(dir.path(), "a/events.csv"), read(dir.path(), "c/events.csv"));
}

#[test]
fn config_file_fills_values_and_flags_win() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# synthetic pool settings\nkind = pool\nrows = 120\nseed = 9\nout = from_cfg\n",
    )
    .unwrap();
    run_ok(dir.path(), &["synth", "--config", "run.cfg"]);
    let pool = String::from_utf8(read(dir.path(), "from_cfg/pool.csv")).unwrap();
    assert_eq!(pool.lines().count(), 121, "header plus 120 rows");

    run_ok(
        dir.path(),
        &["synth", "--config", "run.cfg", "--rows", "60", "--out", "flag_wins"],
    );
    let pool = String::from_utf8(read(dir.path(), "flag_wins/pool.csv")).unwrap();
    assert_eq!(pool.lines().count(), 61);
}

#[test]
fn cv_runs_are_byte_identical_across_reruns_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    run_ok(
        dir.path(),
        &["synth", "--kind", "tower", "--event-days", "6", "--seed", "3", "--out", "ev"],
    );
    run_ok(
        dir.path(),
        &["synth", "--kind", "pool", "--rows", "300", "--seed", "3", "--out", "pl"],
    );
    let cv = [
        "cv", "--data", "ev/events.csv", "--pool", "pl/pool.csv", "--seed", "7", "--trees", "4",
        "--mtry", "35", "--min-split", "10", "--min-bucket", "3",
    ];
    run_ok(dir.path(), &[&cv[..], &["--workers", "1", "--out", "r1"]].concat());
    run_ok(dir.path(), &[&cv[..], &["--workers", "8", "--out", "r8"]].concat());
    run_ok(dir.path(), &[&cv[..], &["--out", "r2"]].concat());
    let first = read(dir.path(), "r1/cv_results.csv");
    assert_eq!(first, read(dir.path(), "r8/cv_results.csv"), "worker count changed results");
    assert_eq!(first, read(dir.path(), "r2/cv_results.csv"), "rerun changed results");
}

#[test]
fn grid_pipeline_produces_monotone_westward_riskmaps() {
    let dir = TempDir::new().unwrap();
    let grid = "50,51,6,8,0.25";
    run_ok(
        dir.path(),
        &[
            "synth", "--kind", "grid", "--pattern", "west-gradient", "--grid", grid, "--hours",
            "8", "--seed", "5", "--out", "g",
        ],
    );
    run_ok(
        dir.path(),
        &["synth", "--kind", "samples", "--rows", "500", "--seed", "5", "--out", "s"],
    );
    run_ok(
        dir.path(),
        &[
            "synth", "--kind", "pool", "--rows", "400", "--seed", "5", "--out", "p",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "train", "--events", "s/samples.csv", "--pool", "p/pool.csv", "--models", "3",
            "--trees", "8", "--mtry", "35", "--min-split", "10", "--min-bucket", "3", "--seed",
            "5", "--out", "t",
        ],
    );
    run_ok(
        dir.path(),
        &[
            "diagnose-grid", "--models", "t/ensemble", "--fields", "g/fields", "--all-hours",
            "--out", "d",
        ],
    );
    let summary = run_ok(
        dir.path(),
        &[
            "riskmap", "--rasters", "d/rasters.csv", "--thresholds", "0.5,0.8", "--out", "r",
        ],
    );
    assert!(summary.contains("threshold 0.5 over 8 hours"));
    let low = riskmap_counts(dir.path(), "r/riskmap_0.5.csv");
    let high = riskmap_counts(dir.path(), "r/riskmap_0.8.csv");
    assert_eq!(low.len(), 4 * 8);
    for (c5, c8) in low.iter().zip(&high) {
        assert!(c8 <= c5, "count at 0.8 exceeds count at 0.5");
    }
    // westernmost column sees more exceedance hours than the easternmost
    let cols = 8;
    let west: u32 = low.iter().step_by(cols).sum();
    let east: u32 = low.iter().skip(cols - 1).step_by(cols).sum();
    assert!(west > east, "west {west} !> east {east}");
    // GeoJSON artifact exists alongside and parses
    let geo: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "r/riskmap_0.5.geojson")).unwrap();
    assert_eq!(geo["features"].as_array().unwrap().len(), 4 * 8);
}

#[test]
fn cold_season_riskmap_reports_the_full_hour_count() {
    let dir = TempDir::new().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth", "--kind", "grid", "--grid", "47,47.5,9,10,0.5", "--cold-season",
            "--format", "binary", "--seed", "9", "--out", "g",
        ],
    );
    run_ok(
        dir.path(),
        &["synth", "--kind", "samples", "--rows", "200", "--seed", "9", "--out", "s"],
    );
    run_ok(
        dir.path(),
        &["synth", "--kind", "pool", "--rows", "200", "--seed", "9", "--out", "p"],
    );
    run_ok(
        dir.path(),
        &[
            "train", "--events", "s/samples.csv", "--pool", "p/pool.csv", "--models", "2",
            "--trees", "3", "--mtry", "35", "--min-split", "10", "--min-bucket", "3", "--seed",
            "9", "--out", "t",
        ],
    );
    let inputs_before = (
        read(dir.path(), "s/samples.csv"),
        read(dir.path(), "g/fields/cloud_base_height.bin"),
    );
    run_ok(
        dir.path(),
        &["diagnose-grid", "--models", "t/ensemble", "--fields", "g/fields", "--all-hours", "--out", "d"],
    );
    let summary = run_ok(
        dir.path(),
        &["riskmap", "--rasters", "d/rasters.csv", "--thresholds", "0.5", "--out", "r"],
    );
    assert!(
        summary.contains("over 12480 hours"),
        "summary missing the full cold-season hour count: {summary}"
    );
    // inputs are never mutated
    assert_eq!(inputs_before.0, read(dir.path(), "s/samples.csv"));
    assert_eq!(inputs_before.1, read(dir.path(), "g/fields/cloud_base_height.bin"));
}

#[test]
fn match_outputs_are_stable_and_inclusive() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("turbines.csv"),
        "id,lat,lon\nwt1,50.2,6.2\nwt2,50.7,6.4\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("strikes.csv"),
        "timestamp,lat,lon\n2019-06-01T12:07Z,50.2001,6.2001\n2019-06-01T13:30Z,50.7,6.4\n2019-06-01T14:40Z,50.7,6.4\n",
    )
    .unwrap();
    let args = [
        "match", "--strikes", "strikes.csv", "--turbines", "turbines.csv", "--radius", "0.003",
        "--flash-hours", "--grid", "50,51,6,8,0.5",
    ];
    run_ok(dir.path(), &[&args[..], &["--out", "a"]].concat());
    run_ok(dir.path(), &[&args[..], &["--out", "b"]].concat());
    assert_eq!(read(dir.path(), "a/matches.csv"), read(dir.path(), "b/matches.csv"));
    let matches = String::from_utf8(read(dir.path(), "a/matches.csv")).unwrap();
    assert_eq!(matches.lines().count(), 1 + 3, "one line per match");
    let flash = String::from_utf8(read(dir.path(), "a/flash_hours.csv")).unwrap();
    // wt2's two strikes fall in different hours, wt1's one strike in one
    let total: u32 = flash
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<u32>().unwrap())
        .sum();
    assert_eq!(total, 3);
}
