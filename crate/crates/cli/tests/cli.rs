use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn ridcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ridcov")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

#[test]
fn analytic_half_radius_values() {
    let start = std::time::Instant::now();
    let o = ridcov(&["analytic", "--rc", "0.5", "--re", "1"]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r_c,r_e,rho,ude,udm,delta"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[3] - 0.134).abs() <= 0.001, "{row:?}");
    assert!((row[4] - 0.088).abs() <= 0.001, "{row:?}");
}

#[test]
fn analytic_rho_sweep_rows() {
    let o = ridcov(&["analytic", "--rho-sweep", "0:1:0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 101);
    for row in [rows[0], rows[100]] {
        let delta: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(delta.abs() < 1e-6, "{row}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ridcov(&["analytic", "--rc", "2", "--re", "1"]).status.code(), Some(1));
    assert_eq!(ridcov(&["analytic", "--rc", "-1", "--re", "1"]).status.code(), Some(1));
    assert_eq!(ridcov(&["analytic"]).status.code(), Some(1));
    assert_eq!(ridcov(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(ridcov(&["analytic", "--rho-sweep", "1:0:0.1"]).status.code(), Some(1));
    assert_eq!(ridcov(&["--help"]).status.code(), Some(0));
}

#[test]
fn mc_verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = ridcov(&[
            "mc-verify", "--trials", "2000", "--seed", "9", "--re-grid", "1,2", "--fractions", "0.5,1",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("run_manifest.json").exists());
        std::fs::read_to_string(out.join("mc_verify.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("case,r_e,r_c,analytic,mc_mean,mc_std,mc_stderr,n_trials,within_4se"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn urban_one_building_city_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u");
    let o = ridcov(&["urban", "--config", &fixture("urban.json"), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("summary.json"));
    // The only candidate site is the building's centroid and an R2000 disk
    // there covers the whole 2 km square.
    assert_eq!(summary["achieved_mean"], 1.0);
    assert_eq!(summary["n_receivers"], 1);
    let csv = std::fs::read_to_string(out.join("running_means.csv")).unwrap();
    assert_eq!(csv.lines().count(), 301);
    let manifest = read_json(&out.join("run_manifest.json"));
    assert_eq!(manifest["subcommand"], "urban");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);

    let zero = dir.path().join("z");
    let o = ridcov(&["urban", "--config", &fixture("urban.json"), "--receivers", "0", "--out-dir", zero.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&zero.join("summary.json"))["achieved_mean"], 0.0);
}

#[test]
fn urban_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = ridcov(&[
            "--threads", threads, "urban", "--config", &fixture("urban.json"), "--tech", "R250",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        (
            std::fs::read_to_string(out.join("result.json")).unwrap(),
            std::fs::read_to_string(out.join("trajectories.jsonl")).unwrap(),
        )
    };
    assert_eq!(run("1", "a"), run("4", "b"));
}

#[test]
fn urban_search_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = ridcov(&["urban", "--config", &fixture("urban.json"), "--find-target", "0.75", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let search = read_json(&out.join("search.json"));
    assert_eq!(search[0]["target"], 0.75);
    assert_eq!(search[0]["n_receivers"], 1);
    assert!(search[0]["achieved_mean"].as_f64().unwrap() >= 0.75);
}

#[test]
fn unreachable_target_exits_three_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = ridcov(&[
        "urban", "--config", &fixture("urban.json"), "--tech", "R250", "--find-target", "0.9",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("best was n = 1"));
    assert!(!out.exists());
}

#[test]
fn urban_rrt_star_paths_avoid_the_building() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = ridcov(&["urban", "--config", &fixture("urban_rrt.json"), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("trajectories.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 8);
    for line in text.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["planner"], "rrt_star");
        assert_eq!(rec["altitude_ft"], 200.0);
        let pts: Vec<(f64, f64)> = rec["waypoints"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
            .collect();
        // The 100 m tower occupies roughly [-50, 50]^2; probes every meter.
        for w in pts.windows(2) {
            let n = 2000;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let (x, y) = (w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1));
                assert!(!(x.abs() < 45.0 && y.abs() < 45.0), "({x}, {y}) inside the tower");
            }
        }
    }
}

#[test]
fn invalid_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let mut v = read_json(&fixtures().join("urban.json"));
    v["scenario"]["n_recievers"] = 3.into();
    std::fs::write(&cfg, v.to_string()).unwrap();
    let o = ridcov(&["urban", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_recievers"));

    let o = ridcov(&["urban", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_city_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let mut v = read_json(&fixtures().join("urban.json"));
    for k in ["buildings", "vendors", "residential", "roi"] {
        v["city"][k] = fixtures().join(v["city"][k].as_str().unwrap()).display().to_string().into();
    }
    v["city"]["vendors"] = "nowhere.geojson".into();
    std::fs::write(&cfg, v.to_string()).unwrap();
    let o = ridcov(&["urban", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.geojson"));
}

fn check_schema(report: &Value) {
    let schema = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/hybrid_report.schema.json"));
    let obj = report.as_object().unwrap();
    for key in schema["required"].as_array().unwrap() {
        assert!(obj.contains_key(key.as_str().unwrap()), "missing {key}");
    }
    let props = schema["properties"].as_object().unwrap();
    for (k, v) in obj {
        let spec = props.get(k).unwrap_or_else(|| panic!("unexpected key {k}"));
        let ok = match spec["type"].as_str().unwrap() {
            "integer" => v.is_u64(),
            "number" => v.is_number(),
            "string" => v.is_string(),
            "array" => v.is_array(),
            other => panic!("schema type {other}"),
        };
        assert!(ok, "{k} = {v} is not {}", spec["type"]);
        if let (Some(x), Some(lo)) = (v.as_f64(), spec["minimum"].as_f64()) {
            assert!(x >= lo, "{k}");
        }
        if let (Some(x), Some(hi)) = (v.as_f64(), spec["maximum"].as_f64()) {
            assert!(x <= hi, "{k}");
        }
    }
}

#[test]
fn hybrid_disk_region_has_one_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h");
    let o = ridcov(&["hybrid", "--config", &fixture("hybrid_disk.json"), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("hybrid_report.json"));
    check_schema(&r);
    assert_eq!(r["K"], 1);
    assert!((r["estimate"].as_f64().unwrap() - 0.088).abs() < 5e-4);
    assert!(r["epsilon"].as_f64().unwrap() < 1e-12);
    assert!(out.join("run_manifest.json").exists());
}

#[test]
fn hybrid_trajectories_that_miss_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h");
    let o = ridcov(&["hybrid", "--config", &fixture("hybrid_outside.json"), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("hybrid_report.json"));
    check_schema(&r);
    assert_eq!(r["epsilon"], 1.0);
    assert_eq!(r["estimate"], 0.0);
    assert_eq!(r["residual_fraction_histogram"][9], 2);
}

#[test]
fn ingest_check_dumps_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i");
    let o = ridcov(&[
        "ingest-check",
        "--buildings", &fixture("buildings.geojson"),
        "--vendors", &fixture("vendors.geojson"),
        "--residential", &fixture("residential.geojson"),
        "--roi", &fixture("roi.geojson"),
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["buildings"], 1);
    assert_eq!(report["vendors"], 2);
    // The 100 m tower blocks at 200 ft (61 m) but not at 400 ft (122 m).
    assert!(report["grids"][0]["occupied_cells"].as_u64().unwrap() >= 100);
    assert_eq!(report["grids"][1]["occupied_cells"], 0);
    let pgm = std::fs::read_to_string(out.join("occupancy_200ft.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n"));
    assert!(pgm.split_whitespace().any(|t| t == "0"));
}
