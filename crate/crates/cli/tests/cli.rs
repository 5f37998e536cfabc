mod support;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use support::*;

fn folflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_folflow")).args(args).output().unwrap()
}

fn folflow_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_folflow"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn run_config(config: &Path, out: &Path) -> Output {
    folflow(&["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn list_matches_the_golden_catalog() {
    let out = folflow(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let golden = golden_dir().join("list.txt");
    if std::env::var("FOLFLOW_BLESS").as_deref() == Ok("1") {
        std::fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, std::fs::read_to_string(golden).unwrap());
    for name in ["surface", "twisted", "normalized", "cole-hopf-check", "spectral-report"] {
        assert!(text.lines().any(|l| l == name), "{name} missing");
    }
}

#[test]
fn golden_configs_reproduce_their_outputs() {
    for name in GOLDEN_CONFIGS {
        let tmp = tempfile::tempdir().unwrap();
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        assert_eq!(run_config(&config_path(name), &a).status.code(), Some(0), "{name}");
        assert_eq!(run_config(&config_path(name), &b).status.code(), Some(0), "{name}");
        let (fa, fb) = (data_files(&a), data_files(&b));
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(canonical_bytes(x), canonical_bytes(y), "{name}: {} differs between runs", x.display());
        }
        bless_if_requested(name, &a);
        let bad = golden_mismatches(name, &a);
        assert!(bad.is_empty(), "{name}: {bad:#?}");
    }
}

#[test]
fn surface_golden_flattens_the_bump() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(&config_path("surface_bump"), tmp.path()).status.success());
    let s = summary(tmp.path());
    assert_eq!(s["status"], "ok");
    let fin = &s["results"]["final"];
    assert!(fin["sup_K"].as_f64().unwrap() <= 1e-3);
    assert!(fin["sup_dev_limit"].as_f64().unwrap() <= 1e-4);
    assert!(s["results"]["max_arc_length_residual"].as_f64().unwrap() <= 1e-8);
    assert!(s["metadata"]["wall_clock_seconds"].as_f64().is_some());
    assert!(tmp.path().join("plot.gp").exists());
}

#[test]
fn unknown_key_is_a_parse_error_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "scenario = \"spectral-report\"\n\n[grid]\ntopology = \"circle\"\nn_points = 64\nwidth = 3\n",
    );
    let out = run_config(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["status"], "failed");
    assert_eq!(err["kind"], "parse");
    assert_eq!(err["line"], 6);
    assert_eq!(err["field"], "width");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_values_list_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "scenario = \"normalized\"\nn_rank = 0\n\n[grid]\ntopology = \"circle\"\nn_points = 4\n\n[time]\nt_end = -1.0\n",
    );
    let out = run_config(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "validation");
    let v = err["violations"].as_array().unwrap();
    assert!(v.len() >= 3, "{v:?}");
    let all = serde_json::to_string(v).unwrap();
    for field in ["n_points", "n_rank", "t_end"] {
        assert!(all.contains(field), "{field} not reported: {all}");
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = folflow(&["run", "/nonexistent/folflow.toml", "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "io");
}

#[test]
fn numerical_failure_keeps_partial_artifacts() {
    // A steep Cole-Hopf velocity violates the advective bound of the explicit step
    // while the diffusive bound still holds, so it passes validation and fails at run time.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfl.toml",
        r#"scenario = "cole-hopf-check"
n_rank = 1
scheme = "explicit-euler"

[grid]
topology = "circle"
n_points = 256

[time]
dt = 2.5e-4
t_end = 0.1

[initial_data]
family = "cosine-perturbed"
base = 1.0
amplitude = 0.99995
mode = 1
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = run_config(&cfg, &out_dir);
    let code = out.status.code();
    assert_eq!(code, Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out_dir);
    assert_eq!(s["status"], "failed");
    assert_eq!(s["error"]["kind"], "cfl-violation");
    assert_eq!(stderr_json(&out)["kind"], "numerical");
    let traj = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(traj.lines().count() >= 2, "the initial record survives");
}

#[test]
fn tiny_spectral_gap_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "gap.toml",
        "scenario = \"normalized\"\nn_rank = 2\n\n[grid]\ntopology = \"circle\"\nlength = 1e5\nn_points = 16\n\n[time]\ndt = 1e-2\nt_end = 0.1\n\n[potential]\nfamily = \"constant\"\nvalue = 0.0\n",
    );
    let out_dir = tmp.path().join("out");
    let out = run_config(&cfg, &out_dir);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary(&out_dir)["status"], "failed");
    assert!(out_dir.join("trajectory.csv").exists());
}

#[test]
fn zero_end_time_records_only_the_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config_path("twisted_warping"))
        .unwrap()
        .replace("t_end = 1.0", "t_end = 0.0");
    assert!(text.contains("t_end = 0.0"));
    let cfg = write_config(tmp.path(), "zero.toml", &text);
    let out = run_config(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(0));
    let traj = std::fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2);
    assert!(traj.lines().nth(1).unwrap().starts_with("0.0,"));
}

#[test]
fn vanishing_potential_has_zero_ground_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "flat.toml",
        r#"scenario = "normalized"
n_rank = 2

[grid]
topology = "circle"
n_points = 128

[time]
dt = 1e-2
t_end = 15.0
record_every = 100

[initial_data]
family = "cosine-perturbed"
base = 1.0
amplitude = 0.2
mode = 1

[potential]
family = "constant"
value = 0.0
"#,
    );
    let out = run_config(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&tmp.path().join("out"));
    assert!(s["results"]["ground_state"]["lambda0"].as_f64().unwrap().abs() <= 1e-8);
    let dev = s["results"]["final"]["sup_dev_scmix"].as_f64().unwrap();
    assert!(dev <= 1e-6, "{dev}");
}

#[test]
fn seed_flag_overrides_the_config_and_keeps_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_path("spectral_cosine");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run_config(&cfg, &a).status.success());
    let out = folflow(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "12345", "--quiet"]);
    assert!(out.status.success());
    let (sa, sb) = (summary(&a), summary(&b));
    assert_eq!(sb["config"]["seed"], 12345);
    let (ea, eb) = (
        sa["results"]["eigenvalues"].as_array().unwrap(),
        sb["results"]["eigenvalues"].as_array().unwrap(),
    );
    for (x, y) in ea.iter().zip(eb) {
        assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn seed_beyond_toml_range_is_rejected() {
    let cfg = config_path("spectral_cosine");
    let out = folflow(&["run", cfg.to_str().unwrap(), "--seed", "18446744073709551615", "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_runs_a_directory_in_parallel() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgs = tmp.path().join("cfgs");
    std::fs::create_dir(&cfgs).unwrap();
    for name in ["cole_hopf", "spectral_cosine"] {
        std::fs::copy(config_path(name), cfgs.join(format!("{name}.toml"))).unwrap();
    }
    std::fs::write(cfgs.join("notes.txt"), "ignored").unwrap();
    let out = tmp.path().join("out");
    let res = folflow_env(
        &["sweep", cfgs.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"],
        "FOLFLOW_THREADS",
        "2",
    );
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["cole_hopf", "spectral_cosine"] {
        assert_eq!(summary(&out.join(name))["status"], "ok");
    }
}

#[test]
fn sweep_reports_the_worst_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::copy(config_path("spectral_cosine"), tmp.path().join("good.toml")).unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "scenario = \"nope\"\n").unwrap();
    let out = tmp.path().join("out");
    let res = folflow(&["sweep", tmp.path().to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(summary(&out.join("good"))["status"], "ok");
}

#[test]
fn config_from_csv_profile_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 64;
    let mut csv = String::from("value\n");
    for j in 0..n {
        let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        csv.push_str(&format!("{:?}\n", 0.5 * x.cos()));
    }
    std::fs::write(tmp.path().join("f.csv"), csv).unwrap();
    let cfg = write_config(
        tmp.path(),
        "csv.toml",
        "scenario = \"spectral-report\"\n\n[grid]\ntopology = \"circle\"\nn_points = 64\n\n[potential]\nfamily = \"from-csv\"\npath = \"f.csv\"\n\n[spectral]\nmodes = 4\n",
    );
    let out = run_config(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s["results"]["lower_bound_holds"], true);
    assert_eq!(s["results"]["ground_state_positive"], true);
}
