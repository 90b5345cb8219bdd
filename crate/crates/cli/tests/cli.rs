use std::process::Command;

use tonguelock_cli::config::{BaseKind, FiberKindName, Origin};
use tonguelock_cli::{execute, parse_config, ConfigError, RunConfig, Subcommand};
use tonguelock_core::base::GOLDEN_CONJUGATE;

fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn run_capture(cfg: &RunConfig) -> (i32, String) {
    let mut buf = Vec::new();
    let code = execute(cfg, &mut buf).unwrap();
    (code, String::from_utf8(buf).unwrap())
}

#[test]
fn minimal_file_uses_defaults() {
    let cfg = parse_config("fiber.kind=arnold", &[]).unwrap();
    assert_eq!(cfg.fiber_kind, Some(FiberKindName::Arnold));
    assert_eq!(cfg.base_kind, BaseKind::Rotation);
    assert_eq!(cfg.omega, vec![GOLDEN_CONJUGATE]);
    let d = RunConfig {
        fiber_kind: Some(FiberKindName::Arnold),
        ..RunConfig::default()
    };
    assert_eq!(cfg, d);
}

#[test]
fn flags_override_file() {
    let cfg = parse_config("fiber.kind=arnold\nfiber.tau=0.1\n", &ov(&[("fiber.tau", "0.2")])).unwrap();
    assert_eq!(cfg.tau, 0.2);
}

#[test]
fn alpha_out_of_range_names_key_and_line() {
    let err = parse_config("fiber.kind=arnold\nfiber.alpha=1.5\n", &[]).unwrap_err();
    match &err {
        ConfigError::Key { origin, key, .. } => {
            assert_eq!(key, "fiber.alpha");
            assert_eq!(*origin, Origin::Line(2));
        }
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("fiber.alpha"));
    let err = parse_config("", &ov(&[("fiber.alpha", "-0.1")])).unwrap_err();
    assert!(err.to_string().contains("fiber.alpha"));
}

#[test]
fn unknown_keys_and_bad_numbers_are_errors() {
    let err = parse_config("fiber.kind=arnold\nfiber.tua=0.1\n", &[]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("fiber.tua") && msg.contains("line 2"), "{msg}");
    let err = parse_config("command.n=lots\n", &[]).unwrap_err();
    assert!(err.to_string().contains("command.n"));
    assert!(parse_config("", &ov(&[("bogus", "1")])).is_err());
}

#[test]
fn export_round_trips() {
    let cfg = parse_config(
        "fiber.kind=triglift\nfiber.lift=0.1; 0,0.05 | 0.02 | 0; 0.01,0\nbase.kind=odometer\n\
         base.radices=2,3,5\nfiber.tau=0.1234567890123\ncommand.json=true\nclassify.deltas=0.003,1e-5\n\
         scan.tau_count=7\nprobe.modes=3\nselftest.only=2,4\nseed=99\n",
        &[],
    )
    .unwrap();
    let text = cfg.to_config_string();
    let back = parse_config(&text, &[]).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_config_string(), text);

    let plain = RunConfig::default();
    assert_eq!(parse_config(&plain.to_config_string(), &[]).unwrap(), plain);
}

#[test]
fn missing_output_directory_is_rejected_at_parse() {
    let err = parse_config("", &ov(&[("output.csv", "/nonexistent-dir-xyz/out.csv")])).unwrap_err();
    assert!(err.to_string().contains("output.csv"));
}

#[test]
fn rho_on_rigid_rotation() {
    let cfg = parse_config(
        "fiber.kind=arnold\nfiber.tau=0.3333333333333333\nfiber.alpha=0\ncommand.n=10000\n",
        &[],
    )
    .unwrap();
    let (code, out) = run_capture(&cfg);
    assert_eq!(code, 0);
    assert_eq!(out, "0.333333 0.333333 10000 rigorous\n");
}

#[test]
fn rho_requires_fiber_kind() {
    let cfg = parse_config("", &[]).unwrap();
    let mut sink = Vec::new();
    assert!(execute(&cfg, &mut sink).is_err());
}

#[test]
fn classify_exit_codes() {
    let mut cfg = parse_config("fiber.kind=arnold\nfiber.tau=0\nfiber.alpha=0.5\n", &[]).unwrap();
    cfg.command = Subcommand::Classify;
    let (code, out) = run_capture(&cfg);
    assert_eq!(code, 0);
    assert!(out.starts_with("LOCKED delta="), "{out}");

    let cfg = parse_config(
        "command.name=classify\nfiber.kind=arnold\nfiber.tau=0.1\nfiber.alpha=0.05\nfiber.beta=1\n\
         classify.n_list=4\nclassify.eps_list=0.0001\nclassify.radii=0.2\nclassify.strip_steps=1\n\
         classify.deltas=0.05\nclassify.transient=0\nclassify.x_nodes=8\n",
        &[],
    )
    .unwrap();
    let (code, out) = run_capture(&cfg);
    assert_eq!(code, 3);
    assert!(out.starts_with("UNDECIDED"));
}

#[test]
fn lyap_with_integral() {
    let cfg = parse_config(
        "command.name=lyap\nfiber.kind=arnold\nfiber.alpha=0.5\ncommand.n=64\ncommand.check_integral=true\n",
        &[],
    )
    .unwrap();
    let (code, out) = run_capture(&cfg);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("upper_L_plus="));
    let integral: f64 = lines.next().unwrap().split_whitespace().next().unwrap()["integral=".len()..]
        .parse()
        .unwrap();
    assert!((integral - 1.0).abs() < 1e-6);
}

#[test]
fn scan_exports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).display().to_string();
    let text = format!(
        "command.name=scan\nfiber.kind=arnold\nscan.tau_count=2\nscan.alpha_count=2\nscan.rho_n=512\n\
         output.csv={}\noutput.pgm={}\noutput.json={}\n",
        path("a.csv"),
        path("a.pgm"),
        path("a.json")
    );
    let cfg = parse_config(&text, &[]).unwrap();
    let (code, out) = run_capture(&cfg);
    assert_eq!(code, 0);
    assert!(out.starts_with("cells=4 "));
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    let (csv, pgm, json) = (read("a.csv"), read("a.pgm"), read("a.json"));
    assert_eq!(String::from_utf8(csv.clone()).unwrap().lines().count(), 5);

    let again = parse_config(&text, &ov(&[("command.workers", "2")])).unwrap();
    assert_eq!(run_capture(&again).0, 0);
    assert_eq!(read("a.csv"), csv);
    assert_eq!(read("a.pgm"), pgm);
    assert_eq!(read("a.json"), json);
}

#[test]
fn probe_lock_not_found_exits_4() {
    let cfg = parse_config(
        "command.name=probe-lock\nfiber.kind=arnold\nfiber.tau=0.3\nfiber.alpha=0.01\n\
         probe.trials=2\nprobe.radius=0.001\nprobe.modes=1\n",
        &[],
    )
    .unwrap();
    let (code, out) = run_capture(&cfg);
    assert_eq!(code, 4);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["found"].is_null());
    assert_eq!(v["trials_run"], 2);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tonguelock"))
}

#[test]
fn binary_rho_and_errors() {
    let out = bin()
        .args(["rho", "--set", "fiber.kind=arnold", "--tau", "0.25", "--alpha", "0", "--n", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.250000 0.250000 1000 rigorous\n");

    let out = bin().args(["rho"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fiber.kind"));

    let out = bin()
        .args(["rho", "--set", "fiber.kind=arnold"])
        .env("TONGUELOCK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["classify", "--alpha", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fiber.alpha"));
}

#[test]
fn binary_selftest_subset() {
    let out = bin()
        .args(["selftest", "--only", "2"])
        .env("TONGUELOCK_THREADS", "1")
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.starts_with("[PASS]  2 rotation-oracle"), "{stdout}");
    assert_eq!(stdout.lines().count(), 1);
}
