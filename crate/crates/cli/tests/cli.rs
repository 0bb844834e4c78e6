use std::fs;
use std::path::Path;
use std::process::Command as Process;

use tidual_cli::svg::parse_csv;
use tidual_cli::{parse_config, run, sha256_hex, Command, ConfigError, RunConfig, MANIFEST};

fn tidual(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_tidual"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest_entries(dir: &Path) -> (String, Vec<(String, String)>) {
    let text = fs::read_to_string(dir.join(MANIFEST)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("command: "));
    let status = lines
        .next()
        .unwrap()
        .trim_start_matches("status: ")
        .to_string();
    let entries = lines
        .map(|l| {
            let (hash, name) = l.split_once("  ").unwrap();
            (hash.to_string(), name.to_string())
        })
        .collect();
    (status, entries)
}

#[test]
fn empty_file_gives_the_default_setup() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.params.a, 0.2);
    assert_eq!(cfg.params.eta, 0.1);
    assert_eq!(cfg.params.delta, 0.6);
    assert_eq!(cfg.grid.n, 4001);
    assert_eq!(cfg.sim.n_paths, 20_000);
    assert_eq!(cfg.sim.seed, 42);
}

#[test]
fn partial_tables_keep_other_defaults() {
    let cfg = parse_config("[params]\na = 0.4\n[sim]\nn_paths = 1000\n").unwrap();
    assert_eq!(cfg.params.a, 0.4);
    assert_eq!(cfg.params.p, 0.5);
    assert_eq!(cfg.sim.dt, 0.01);
}

#[test]
fn utility_exponent_above_one_is_rejected() {
    match parse_config("[params]\np = 1.5\n") {
        Err(ConfigError::Validation(msg)) => assert!(msg.contains("p = 1.5"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn small_discount_rate_is_ill_posed() {
    // K = 2 (0.02 - 0.025 - 0.5) < 0.
    match parse_config("[params]\ndelta = 0.02\n") {
        Err(ConfigError::Validation(msg)) => assert!(msg.contains("K = -1.01"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_report_their_position() {
    match parse_config("[grid]\nn = 101\nx_mx = 3.0\n") {
        Err(ConfigError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("x_mx"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse_config("[sim]\ndt = \n"),
        Err(ConfigError::Parse { line: 2, .. })
    ));
}

#[test]
fn solve_emits_sandwiched_solution_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = tidual(&["solve", "--out", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = parse_csv(&fs::read_to_string(dir.path().join("solution.csv")).unwrap()).unwrap();
    let (u1, u0, ui) = (
        table.column("u1").unwrap(),
        table.column("u0").unwrap(),
        table.column("u_inf").unwrap(),
    );
    assert_eq!(table.rows.len(), 4001);
    for row in &table.rows {
        assert!(row[u0] <= row[u1] && row[u1] <= row[ui], "{row:?}");
    }
    let (status, entries) = manifest_entries(dir.path());
    assert_eq!(status, "ok");
    assert_eq!(entries.len(), 1);
    for (hash, name) in entries {
        assert_eq!(hash, sha256_hex(&fs::read(dir.path().join(name)).unwrap()));
    }
}

#[test]
fn simulation_output_is_byte_stable() {
    let emit = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = tidual(&[
            "simulate",
            "--paths",
            "400",
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (
            fs::read(dir.path().join("ensemble.csv")).unwrap(),
            fs::read(dir.path().join(MANIFEST)).unwrap(),
        )
    };
    let first = emit("7");
    assert_eq!(first, emit("7"));
    assert_ne!(first.0, emit("8").0);
}

#[test]
fn figures_without_income_coincide_with_no_income_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = tidual(&[
        "figures",
        "--a",
        "0",
        "--svg",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let read = |name: &str| parse_csv(&fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
    for (file, own, merton) in [
        ("fig1a_value.csv", 1, 2),
        ("fig2a_consumption.csv", 1, 2),
        ("fig2b_portfolio.csv", 1, 2),
    ] {
        for row in &read(file).rows {
            let (a, b) = (row[own], row[merton]);
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{file}: {row:?}");
        }
    }
    assert!(read("fig1b_vs_eta.csv").rows.iter().all(|r| r[1] == 0.0));
    let (status, entries) = manifest_entries(dir.path());
    assert_eq!(status, "ok");
    assert_eq!(entries.len(), 10);
    for (hash, name) in entries {
        let bytes = fs::read(dir.path().join(&name)).unwrap();
        assert_eq!(hash, sha256_hex(&bytes), "{name}");
        if name.ends_with(".svg") {
            assert!(String::from_utf8(bytes).unwrap().contains("<polyline"));
        }
    }
}

#[test]
fn bad_config_file_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "[params]\np = 1.5\n").unwrap();
    let out = tidual(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("must lie in (0, 1)"));
}

#[test]
fn failure_is_recorded_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.grid.n = 1;
    cfg.output_dir = dir.path().to_path_buf();
    assert!(run(Command::Figures, &cfg).is_err());
    let (status, entries) = manifest_entries(dir.path());
    assert!(status.starts_with("failed at solve"), "{status}");
    assert!(entries.is_empty());
}

#[test]
fn verify_exit_status_follows_hard_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = tidual(&[
        "verify",
        "--paths",
        "2000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let hard_pass = text.contains("summary.hard_pass = true");
    assert_eq!(out.status.success(), hard_pass);
    if !hard_pass {
        assert_eq!(out.status.code(), Some(2));
    }
    let (status, entries) = manifest_entries(dir.path());
    assert_eq!(status == "ok", hard_pass);
    assert_eq!(entries.len(), 2);
}

#[test]
fn verify_on_defaults_passes_every_hard_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let outcome = run(Command::Verify, &cfg).unwrap();
    assert!(outcome.success(), "{:?}", outcome.hard_failures);
    assert_eq!(outcome.files, vec!["report.txt", "report.csv"]);
}
