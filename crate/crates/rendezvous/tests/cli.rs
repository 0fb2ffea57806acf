use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rendezvous::config::bundled;
use rendezvous::output::{EVENTS_COLUMNS, TRAJECTORY_COLUMNS};

const BIN: &str = env!("CARGO_BIN_EXE_rendezvous");

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn rendezvous(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn simulate(config: &Path, dir: &Path, subsystem: Option<&str>) -> i32 {
    let mut args = vec!["simulate", "--config", config.to_str().unwrap(), "--output", dir.to_str().unwrap()];
    if let Some(s) = subsystem {
        args.extend(["--subsystem", s]);
    }
    let (code, _, err) = rendezvous(&args);
    assert!(code == 0 || code == 3, "{err}");
    code
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn summary_totals_recompute_from_events() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&scenario("full_ref"), tmp.path(), None);
    let s = summary(tmp.path());
    let mut rdr = csv::Reader::from_path(tmp.path().join("events.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, EVENTS_COLUMNS);
    let (mut total, mut per) = (0.0f64, [0.0f64; 3]);
    let mut counts = [0u64; 3];
    let floor = s["budget"]["impulse_floor"].as_f64().unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let k = ["z", "beta", "alpha"].iter().position(|c| *c == &rec[3]).unwrap();
        let applied: f64 = rec[5].parse().unwrap();
        total += applied.abs();
        per[k] += applied.abs();
        counts[k] += u64::from(applied.abs() > floor);
    }
    assert_eq!(s["budget"]["total_delta_v"].as_f64().unwrap(), total);
    for (k, c) in ["z", "beta", "alpha"].iter().enumerate() {
        assert_eq!(s["budget"][c]["delta_v"].as_f64().unwrap(), per[k]);
        assert_eq!(s["budget"][c]["impulses"].as_u64().unwrap(), counts[k]);
    }
    assert_eq!(s["version"], 1);
}

#[test]
fn identical_configs_give_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(&scenario("z_fast"), a.path(), None);
    simulate(&scenario("z_fast"), b.path(), None);
    for f in ["trajectory.csv", "events.csv", "summary.json", "plot.gp"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn empty_horizon_writes_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t_max = 0.0\n");
    let out = tmp.path().join("out");
    assert_eq!(simulate(&cfg, &out, None), 0);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj, TRAJECTORY_COLUMNS.join(",") + "\n");
    let events = fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(events, EVENTS_COLUMNS.join(",") + "\n");
    assert_eq!(summary(&out)["events"], 0);
}

#[test]
fn flipped_alpha_input_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let text = bundled::INPLANE_LIVE.to_string() + "fault = \"flip-alpha-input\"\n";
    let cfg = write_config(tmp.path(), &text);
    let (code, out, _) = rendezvous(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 3, "{out}");
    let line = out.lines().find(|l| l.starts_with("jump decrease alpha")).unwrap();
    assert!(line.ends_with("FAIL"), "{line}");
}

#[test]
fn bundled_scenarios_verify() {
    for (name, _) in bundled::ALL {
        let (code, out, err) = rendezvous(&["verify", "--config", scenario(name).to_str().unwrap()]);
        assert_eq!(code, 0, "{name}: {out}{err}");
    }
}

#[test]
fn zero_state_passes_vacuously() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r_z = 0.0\norbits = 2.0\n");
    let (code, out, _) = rendezvous(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn config_errors_exit_with_usage_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "tau_z_m = 2.5\n");
    let (code, _, err) = rendezvous(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("tau_z_m"), "{err}");

    let cfg = write_config(tmp.path(), "umax = 0.2\nspeed = 3\n");
    let (code, _, err) = rendezvous(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("speed"), "{err}");

    let (code, _, _) = rendezvous(&["verify", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(code, 1);
    let (code, _, _) = rendezvous(&["simulate"]);
    assert_eq!(code, 1);
    let (code, _, _) = rendezvous(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "n", "--values", "1"]);
    assert_eq!(code, 1);
}

#[test]
fn single_value_sweep_matches_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate(&scenario("z_slow"), &sim, None);
    let sweep = tmp.path().join("sweep");
    let (code, _, err) = rendezvous(&[
        "sweep",
        "--config",
        scenario("z_slow").to_str().unwrap(),
        "--param",
        "tau_z_m",
        "--values",
        "0.25",
        "--output",
        sweep.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let mut rdr = csv::Reader::from_path(sweep.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let s = summary(&sim);
    assert_eq!(rows[0][5].parse::<u64>().unwrap(), s["budget"]["impulses"].as_u64().unwrap());
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), s["budget"]["total_delta_v"].as_f64().unwrap());
    assert_eq!(rows[0][8].parse::<f64>().unwrap(), s["convergence"]["time"]["t"].as_f64().unwrap());
    for f in ["trajectory.csv", "events.csv", "summary.json"] {
        assert_eq!(fs::read(sim.join(f)).unwrap(), fs::read(sweep.join("tau_z_m=0.25").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn larger_alpha_dwell_saves_impulses() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let (code, _, err) = rendezvous(&[
        "sweep",
        "--config",
        scenario("inplane_live").to_str().unwrap(),
        "--param",
        "tau_alpha_m",
        "--values",
        "0.01,0.3",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let alpha = |v: &str| summary(&out.join(format!("tau_alpha_m={v}")))["budget"]["alpha"]["impulses"].as_u64().unwrap();
    assert!(alpha("0.3") < alpha("0.01"), "{} vs {}", alpha("0.3"), alpha("0.01"));
}

#[test]
fn subsystem_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&scenario("full_ref"), tmp.path(), Some("z"));
    let s = summary(tmp.path());
    assert_eq!(s["subsystem"], "z");
    assert_eq!(s["budget"]["beta"]["firings"], 0);
}

#[test]
fn plot_script_names_existing_columns() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&scenario("full_ref"), tmp.path(), None);
    let script = fs::read_to_string(tmp.path().join("plot.gp")).unwrap();
    let mut known: Vec<&str> = TRAJECTORY_COLUMNS.to_vec();
    known.extend(EVENTS_COLUMNS);
    for part in script.split("column('").skip(1) {
        let name = &part[..part.find('\'').unwrap()];
        assert!(known.contains(&name), "{name}");
    }
}
