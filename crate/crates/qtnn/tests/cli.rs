//! End-to-end tests of the `qtnn` binary: exit codes, file formats, the
//! remote-entropy client against a mock service, and manifest replay.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{read_bytes, MockBehavior, MockQrngServer};

fn qtnn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtnn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn qtnn")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn barrier_curve_single_point_at_v0() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &[
            "barrier-curve",
            "--s",
            "0.5",
            "--emin",
            "1",
            "--points",
            "1",
            "--out",
            "curve.csv",
        ],
        dir.path(),
    );
    assert!(output.status.success());
    let text = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("E_over_V0,T"));
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 2);
    let t: f64 = fields[1].parse().unwrap();
    assert!((t - 1.0 / 1.0625).abs() < 1e-12);
    assert!(dir.path().join("curve.csv.manifest").exists());
}

#[test]
fn barrier_curve_rejects_zero_points() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &[
            "barrier-curve",
            "--s",
            "0.5",
            "--points",
            "0",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn barrier_curve_grid_is_monotone_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &[
            "barrier-curve",
            "--s",
            "0.5",
            "--points",
            "200",
            "--out",
            "c.csv",
        ],
        dir.path(),
    );
    assert!(output.status.success());
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let mut previous = f64::NEG_INFINITY;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 2);
        let ratio: f64 = fields[0].parse().unwrap();
        let t: f64 = fields[1].parse().unwrap();
        assert!(ratio > previous);
        assert!((0.0..=1.0).contains(&t));
        previous = ratio;
    }
}

#[test]
fn stimuli_command_writes_round_tripping_rasters() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &["stimuli", "--set", "necker", "--out-dir", "stims"],
        dir.path(),
    );
    assert!(output.status.success());
    let set = qtnn::stimuli::necker_set();
    for (name, expected) in [
        ("necker_front_shaded", &set.class0),
        ("necker_rear_shaded", &set.class1),
        ("necker_ambiguous", &set.ambiguous),
    ] {
        let path = dir.path().join("stims").join(format!("{name}.pgm"));
        let loaded = qtnn::stimuli::load_stimulus(&path).unwrap();
        assert_eq!(&loaded, expected, "{name}");
        assert_eq!(loaded.width(), 10);
        assert_eq!(loaded.height(), 10);
    }

    let output = qtnn(
        &["stimuli", "--set", "rubin", "--out-dir", "rubin"],
        dir.path(),
    );
    assert!(output.status.success());
    let loaded =
        qtnn::stimuli::load_stimulus(&dir.path().join("rubin").join("rubin_contour.pgm")).unwrap();
    assert_eq!(loaded.width(), 20);
    assert_eq!(loaded.height(), 20);
}

#[test]
fn perceive_is_deterministic_and_sizes_rubin_input() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let output = qtnn(
            &[
                "perceive",
                "--illusion",
                "rubin",
                "--runs",
                "3",
                "--epochs",
                "40",
                "--seed",
                "1",
                "--out-dir",
                out,
            ],
            dir.path(),
        );
        assert!(output.status.success(), "{}", stderr(&output));
    }
    assert_eq!(
        read_bytes(&dir.path().join("a/series.csv")),
        read_bytes(&dir.path().join("b/series.csv"))
    );
    let manifest = std::fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap();
    // 400-20-20-20-2 weights: the per-run block reflects the 20x20 raster.
    assert!(manifest.contains("block-size=8840"), "{manifest}");
    assert!(manifest.contains("illusion=rubin"));

    let series = std::fs::read_to_string(dir.path().join("a/series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("run,p_state0,p_state1,percept"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn perceive_requires_an_entropy_source() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &["perceive", "--illusion", "necker", "--out-dir", "x"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("entropy source"));
}

#[test]
fn perceive_exhausted_entropy_file_exits_3_with_run_index() {
    let dir = tempfile::tempdir().unwrap();
    // One full 2840-word block plus a fragment: run 1 must fail.
    let words: Vec<u16> = vec![40_000; 2840 + 100];
    qtnn::rng::append_entropy_file(&dir.path().join("short.bin"), &words).unwrap();
    let output = qtnn(
        &[
            "perceive",
            "--illusion",
            "necker",
            "--runs",
            "4",
            "--epochs",
            "5",
            "--entropy-file",
            "short.bin",
            "--out-dir",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(3), "{}", stderr(&output));
    assert!(stderr(&output).contains("run 1"), "{}", stderr(&output));
}

#[test]
fn perceive_divergent_training_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &[
            "perceive",
            "--illusion",
            "necker",
            "--runs",
            "1",
            "--epochs",
            "30",
            "--rate",
            "1e120",
            "--activation",
            "relu",
            "--seed",
            "3",
            "--out-dir",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(4), "{}", stderr(&output));
}

#[test]
fn compare_writes_three_series_and_symmetric_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let output = qtnn(
        &[
            "compare",
            "--illusion",
            "necker",
            "--runs",
            "4",
            "--epochs",
            "40",
            "--seed",
            "2",
            "--out-dir",
            "cmp",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    for name in [
        "qt.csv",
        "relu.csv",
        "sigmoid.csv",
        "dtw_matrix.csv",
        "manifest.txt",
    ] {
        assert!(dir.path().join("cmp").join(name).exists(), "{name}");
    }
    let matrix = std::fs::read_to_string(dir.path().join("cmp/dtw_matrix.csv")).unwrap();
    let rows: Vec<Vec<String>> = matrix
        .lines()
        .skip(1)
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let cell = |i: usize, j: usize| -> f64 { rows[i][j + 1].parse().unwrap() };
    for i in 0..3 {
        assert_eq!(cell(i, i), 0.0);
        for j in 0..3 {
            assert_eq!(cell(i, j), cell(j, i));
        }
    }
}

#[test]
fn qrng_fetch_appends_16_bit_words() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockQrngServer::start(MockBehavior::Words(vec![0, 65535, 32768]), 1);
    let output = qtnn(
        &[
            "qrng-fetch",
            "--url",
            &server.url,
            "--count",
            "100",
            "--cache",
            "w.bin",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(stdout(&output).contains("fetched 100 words"));
    assert_eq!(server.finish(), 1);
    let cache = dir.path().join("w.bin");
    assert_eq!(std::fs::metadata(&cache).unwrap().len(), 200);
    // Words map to [-1, 1) exactly as documented.
    let words = qtnn::rng::read_entropy_file(&cache).unwrap();
    assert_eq!(words[0], 0);
    assert_eq!(words[1], 65535);
    assert_eq!(words[2], 32768);
    assert_eq!(qtnn::rng::word_to_uniform(words[0]), -1.0);
    assert_eq!(qtnn::rng::word_to_uniform(words[2]), 0.0);
}

#[test]
fn qrng_fetch_falls_back_to_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    qtnn::rng::append_entropy_file(&dir.path().join("warm.bin"), &[1, 2, 3]).unwrap();
    // Nothing listens on this port.
    let dead = reserved_dead_url();
    let output = qtnn(
        &[
            "qrng-fetch",
            "--url",
            &dead,
            "--count",
            "10",
            "--cache",
            "warm.bin",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(
        stdout(&output).contains("using cache"),
        "{}",
        stdout(&output)
    );
    // Cache is untouched.
    assert_eq!(
        std::fs::metadata(dir.path().join("warm.bin"))
            .unwrap()
            .len(),
        6
    );
}

#[test]
fn qrng_fetch_with_dead_service_and_empty_cache_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let dead = reserved_dead_url();
    let output = qtnn(
        &[
            "qrng-fetch",
            "--url",
            &dead,
            "--count",
            "10",
            "--cache",
            "empty.bin",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(5), "{}", stderr(&output));
}

#[test]
fn qrng_fetch_protocol_errors_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockQrngServer::start(MockBehavior::MalformedJson, 1);
    let output = qtnn(
        &[
            "qrng-fetch",
            "--url",
            &server.url,
            "--count",
            "4",
            "--cache",
            "c.bin",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(5));
    assert!(
        stderr(&output).contains("protocol error"),
        "{}",
        stderr(&output)
    );

    let server = MockQrngServer::start(MockBehavior::OutOfRange, 1);
    let output = qtnn(
        &[
            "qrng-fetch",
            "--url",
            &server.url,
            "--count",
            "4",
            "--cache",
            "d.bin",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(5));
    assert!(
        stderr(&output).contains("outside [0, 65535]"),
        "{}",
        stderr(&output)
    );
}

fn reserved_dead_url() -> String {
    // Bind a port, then drop the listener so connections are refused.
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/api")
}

#[test]
fn perceive_from_qrng_consumes_cached_words_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let words: Vec<u16> = (0..12_000u32).map(|i| (i * 7919 % 65536) as u16).collect();
    // 2840 words per run, 2 runs, chunked at 1024 words per request.
    let server = MockQrngServer::start(MockBehavior::Words(words), 6);
    let output = qtnn(
        &[
            "perceive",
            "--illusion",
            "necker",
            "--runs",
            "2",
            "--epochs",
            "20",
            "--qrng-url",
            &server.url,
            "--qrng-cache",
            "cache.bin",
            "--out-dir",
            "out",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(server.finish(), 6);
    let cache_len = std::fs::metadata(dir.path().join("cache.bin"))
        .unwrap()
        .len();
    assert_eq!(cache_len, 2 * 2840 * 2);

    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("entropy-file=cache.bin"), "{manifest}");
    assert!(manifest.contains("qrng-url="), "{manifest}");
    assert!(manifest.contains("entropy-sha256="), "{manifest}");

    // Replaying uses the cache only; no server is listening anymore.
    let output = qtnn(
        &[
            "rerun",
            "--manifest",
            "out/manifest.txt",
            "--out-dir",
            "replayed",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(
        read_bytes(&dir.path().join("out/series.csv")),
        read_bytes(&dir.path().join("replayed/series.csv"))
    );
}

#[test]
fn env_var_provides_the_default_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockQrngServer::start(MockBehavior::Words(vec![7, 8, 9]), 1);
    let output = Command::new(env!("CARGO_BIN_EXE_qtnn"))
        .args(["qrng-fetch", "--count", "6", "--cache", "env.bin"])
        .env(qtnn::rng::QRNG_URL_ENV, &server.url)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(
        std::fs::metadata(dir.path().join("env.bin")).unwrap().len(),
        12
    );

    // Without the variable and without --url the command is a usage error.
    let output = Command::new(env!("CARGO_BIN_EXE_qtnn"))
        .args(["qrng-fetch", "--count", "6", "--cache", "x.bin"])
        .env_remove(qtnn::rng::QRNG_URL_ENV)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn rerun_of_a_fetch_manifest_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.txt"),
        "command=qrng-fetch\nurl=http://x/api\ncount=4\ncache=c.bin\n",
    )
    .unwrap();
    let output = qtnn(&["rerun", "--manifest", "m.txt"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("cannot be reproduced"));
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.conf"),
        "illusion=necker\nseed=5\nruns=3\nepochs=30\nrate=0.002\n",
    )
    .unwrap();
    let output = qtnn(
        &[
            "perceive",
            "--config",
            "exp.conf",
            "--runs",
            "2",
            "--out-dir",
            "out",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    let manifest = std::fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(
        manifest.contains("runs=2"),
        "flag must beat config: {manifest}"
    );
    assert!(manifest.contains("seed=5"), "{manifest}");
    assert!(manifest.contains("epochs=30"), "{manifest}");
}

#[test]
fn custom_stimuli_flow_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let set = qtnn::stimuli::necker_set();
    qtnn::stimuli::save_stimulus(&set.class0, &dir.path().join("c0.pgm")).unwrap();
    qtnn::stimuli::save_stimulus(&set.class1, &dir.path().join("c1.pgm")).unwrap();
    qtnn::stimuli::save_stimulus(&set.ambiguous, &dir.path().join("amb.pgm")).unwrap();
    let output = qtnn(
        &[
            "perceive",
            "--class0",
            "c0.pgm",
            "--class1",
            "c1.pgm",
            "--ambiguous",
            "amb.pgm",
            "--runs",
            "2",
            "--epochs",
            "20",
            "--seed",
            "8",
            "--out-dir",
            "custom",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", stderr(&output));
    let manifest = std::fs::read_to_string(dir.path().join("custom/manifest.txt")).unwrap();
    assert!(manifest.contains("illusion=custom"));

    // The identical run via the built-in set matches the custom-file run.
    let output = qtnn(
        &[
            "perceive",
            "--illusion",
            "necker",
            "--runs",
            "2",
            "--epochs",
            "20",
            "--seed",
            "8",
            "--out-dir",
            "builtin",
        ],
        dir.path(),
    );
    assert!(output.status.success());
    assert_eq!(
        read_bytes(&dir.path().join("custom/series.csv")),
        read_bytes(&dir.path().join("builtin/series.csv"))
    );
}

#[test]
fn swap_labels_changes_the_series() {
    let dir = tempfile::tempdir().unwrap();
    for (flag, out) in [(false, "plain"), (true, "swapped")] {
        let mut args = vec![
            "perceive",
            "--illusion",
            "rubin",
            "--runs",
            "2",
            "--epochs",
            "30",
            "--seed",
            "4",
            "--out-dir",
            out,
        ];
        if flag {
            args.insert(1, "--swap-labels");
        }
        let output = qtnn(&args, dir.path());
        assert!(output.status.success(), "{}", stderr(&output));
    }
    assert_ne!(
        read_bytes(&dir.path().join("plain/series.csv")),
        read_bytes(&dir.path().join("swapped/series.csv"))
    );
}
