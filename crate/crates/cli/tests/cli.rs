//! End-to-end subcommand tests against the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn fedmining(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedmining"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn init_writes_template_and_respects_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedmining(&["init"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("fedmining.toml").exists());

    // Refuses to clobber without --force; exit code 2.
    let out = fedmining(&["init"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = fedmining(&["init", "--force"], dir.path());
    assert!(out.status.success());
}

#[test]
fn invalid_config_fails_validation_naming_every_field_and_leaves_no_run_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "seed = 1\nrounds = 0\nchunk_dim = 0\n[training]\neta0 = -2.0\n",
    )
    .unwrap();
    let out = fedmining(
        &["run", "--config", "bad.toml", "--toy-field", "--out-dir", "rundir"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for needle in ["rounds", "chunk_dim", "eta0"] {
        assert!(err.contains(needle), "missing {needle} in: {err}");
    }
    assert!(!dir.path().join("rundir").exists());
}

#[test]
fn toy_run_produces_a_self_contained_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fedmining(&["init"], dir.path()).status.success());
    let out = fedmining(
        &[
            "run",
            "--config",
            "fedmining.toml",
            "--toy-field",
            "--seed",
            "11",
            "--rounds",
            "5",
            "--out-dir",
            "rundir",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("divergence within K'*delta/2: yes"), "{text}");

    for file in [
        "config.toml",
        "metrics.csv",
        "confusion.json",
        "fingerprints.json",
        "report.json",
        "summary.txt",
    ] {
        assert!(dir.path().join("rundir").join(file).exists(), "missing {file}");
    }
    let metrics = std::fs::read_to_string(dir.path().join("rundir/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 6); // header + 5 rounds
    // Every round's divergence stayed within tolerance.
    let ok_col = metrics
        .lines()
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == "divergence_ok")
        .unwrap();
    for line in metrics.lines().skip(1) {
        assert_eq!(line.split(',').nth(ok_col).unwrap(), "true", "{line}");
    }
    assert!(metrics.starts_with("round,"));

    // The snapshot records the pinned seed, so the run is replayable.
    let snapshot = std::fs::read_to_string(dir.path().join("rundir/config.toml")).unwrap();
    assert!(snapshot.contains("seed = 11"));

    // Refuses to overwrite a non-empty run directory.
    let out = fedmining(
        &["run", "--config", "fedmining.toml", "--toy-field", "--out-dir", "rundir"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_from_run_dir_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fedmining(&["init"], dir.path()).status.success());
    let out = fedmining(
        &[
            "run", "--config", "fedmining.toml", "--toy-field", "--seed", "3", "--rounds", "2",
            "--out-dir", "rundir",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let a = fedmining(&["report", "--run-dir", "rundir"], dir.path());
    let b = fedmining(&["report", "--run-dir", "rundir"], dir.path());
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("27.43x"));
}

#[test]
fn report_for_param_count_reproduces_published_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedmining(
        &[
            "report",
            "--param-count",
            "37196556",
            "--skip-timing",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("2083.01 MB"), "{text}");
    assert!(text.contains("57133.91 MB"));
    assert!(text.contains("57233.91 MB"));
    assert!(text.contains("27.43x"));
    assert!(text.contains("434.53 MB"));

    // Unit case: 1 parameter is 56 vs 1536 bytes.
    let out = fedmining(&["report", "--param-count", "1", "--skip-timing"], dir.path());
    let text = stdout(&out);
    assert!(text.contains("published convention (56 B/param):  56 bytes"));
    assert!(text.contains("1536 bytes"), "{text}");
}

#[test]
fn report_with_timing_shows_positive_medians() {
    // Tiny sizes and the toy suite keep this a plumbing check; the real
    // comparison runs in the acceptance suite.
    let dir = tempfile::tempdir().unwrap();
    let out = fedmining(
        &[
            "report",
            "--param-count",
            "8",
            "--chunk-dim",
            "4",
            "--timing-params",
            "8",
            "--paillier-bits",
            "256",
            "--toy-field",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let median_ns = |needle: &str| -> u64 {
        let line = text.lines().find(|l| l.contains(needle)).unwrap();
        let ns_field = line.split('=').nth(1).unwrap();
        ns_field
            .split_whitespace()
            .find_map(|w| w.parse::<u64>().ok())
            .unwrap()
    };
    assert!(median_ns("DFE encrypt median") > 0, "{text}");
    assert!(median_ns("Paillier-256 encrypt median") > 0, "{text}");
    assert!(text.contains("timing ratio"), "{text}");
}

#[test]
fn keygen_is_deterministic_under_a_pinned_seed_and_fresh_otherwise() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fedmining(&["init"], dir.path()).status.success());
    let run = |out_dir: &str, seed: Option<&str>| {
        let mut args = vec![
            "keygen",
            "--config",
            "fedmining.toml",
            "--toy-field",
            "--out-dir",
            out_dir,
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let out = fedmining(&args, dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read_to_string(dir.path().join(out_dir).join("params.json")).unwrap()
    };
    let a = run("k1", Some("7"));
    let b = run("k2", Some("7"));
    assert_eq!(a, b);
    let c = run("k3", Some("8"));
    assert_ne!(a, c);

    // Without any seed (config key removed), each ceremony draws fresh
    // entropy and the fingerprints differ.
    let template = std::fs::read_to_string(dir.path().join("fedmining.toml")).unwrap();
    let unseeded: String = template
        .lines()
        .filter(|l| !l.starts_with("seed = "))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.path().join("noseed.toml"), unseeded).unwrap();
    let run_noseed = |out_dir: &str| {
        let out = fedmining(
            &["keygen", "--config", "noseed.toml", "--toy-field", "--out-dir", out_dir],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read_to_string(dir.path().join(out_dir).join("params.json")).unwrap()
    };
    assert_ne!(run_noseed("k4"), run_noseed("k5"));

    // Cardinality: 12 client keys + master + aggregator + params.json.
    let entries = std::fs::read_dir(dir.path().join("k1")).unwrap().count();
    assert_eq!(entries, 15);
}

#[test]
fn runtime_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // eta0 = 1e308 passes static validation (positive, finite) but blows up
    // training with a non-finite loss.
    std::fs::write(
        dir.path().join("hot.toml"),
        "seed = 1\nrounds = 2\n[training]\neta0 = 1e308\n[scenario]\nclients = 6\nclasses = 6\nsamples_per_client = 20\ntest_samples_per_class = 5\n",
    )
    .unwrap();
    let out = fedmining(
        &["run", "--config", "hot.toml", "--toy-field", "--out-dir", "rundir"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"));
}

#[test]
fn gamma_and_weighting_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    // msms-0 misses round 1; gamma 1 freezes it out of rounds 2..4.
    std::fs::write(
        dir.path().join("cfg.toml"),
        r#"
seed = 4
rounds = 3
pipeline = "encrypted"
[scenario]
clients = 6
classes = 6
samples_per_client = 20
test_samples_per_class = 5
[scenario.availability]
mode = "explicit"
rounds = { msms-0 = [2, 3] }
"#,
    )
    .unwrap();
    let out = fedmining(
        &[
            "run", "--config", "cfg.toml", "--toy-field", "--gamma", "1", "--weighting",
            "size-only", "--out-dir", "rundir",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let metrics = std::fs::read_to_string(dir.path().join("rundir/metrics.csv")).unwrap();
    for line in metrics.lines().skip(1) {
        assert!(!line.contains("msms-0"), "frozen client rejoined: {line}");
    }
    let snapshot = std::fs::read_to_string(dir.path().join("rundir/config.toml")).unwrap();
    assert!(snapshot.contains("mode = \"size-only\""));
    assert!(snapshot.contains("gamma = 1"));
}
