//! End-to-end checks of the `evcorner` executable: exit codes, file
//! round-trips, and the synth → detect → eval chain.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evcorner"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn evcorner")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SCENE: &str = "\
geometry = 240x180
duration_s = 0.12
noise_rate = 0.05
event_rate = 1.0
multiplicity = 4
seed = 7

[shape]
vertices = 20,18.6 109,18.6 109,107.6 20,107.6
velocity = 220,220
angular_velocity = 0
";

/// Writes the reference scene and returns (scene path, events path, truth
/// path) after generating the stream.
fn synth_scene(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let scene = dir.join("scene.cfg");
    let events = dir.join("events.bin");
    let truth = dir.join("truth.csv");
    fs::write(&scene, SCENE).unwrap();
    let out = run(&[
        "synth",
        "--spec",
        scene.to_str().unwrap(),
        "--out",
        events.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "synth failed: {}", stderr_of(&out));
    (scene, events, truth)
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["detect", "--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    // No subcommand.
    assert_eq!(code(&run(&[])), 1);
    // Unknown detector name.
    let out = run(&[
        "detect", "--in", "x.bin", "--detector", "nonesuch", "--out", "y.csv",
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr_of(&out);
    assert!(
        err.contains("esusan") && err.contains("se-harris"),
        "unknown-detector error should list the valid names: {err}"
    );
    // Malformed config override.
    let out = run(&["--set", "tgf.lambda", "bench", "--in", "x.bin"]);
    assert_eq!(code(&out), 1);
    // Unknown configuration key.
    let out = run(&["--set", "tgf.bogus=1", "bench", "--in", "x.bin"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn data_errors_exit_two_and_name_the_file() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.bin");
    let out = run(&[
        "detect",
        "--in",
        missing.to_str().unwrap(),
        "--detector",
        "esusan",
        "--out",
        dir.path().join("l.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        stderr_of(&out).contains("missing.bin"),
        "error should name the missing file: {}",
        stderr_of(&out)
    );

    // Corrupt binary header.
    let bad = dir.path().join("bad.bin");
    fs::write(&bad, b"NOTAHDR0123456789").unwrap();
    let out = run(&[
        "detect",
        "--in",
        bad.to_str().unwrap(),
        "--detector",
        "esusan",
        "--out",
        dir.path().join("l2.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);

    // Well-formed flags, bad scene content.
    let scene = dir.path().join("scene.cfg");
    fs::write(&scene, "geometry = 240x180\nnonsense = 1\n").unwrap();
    let out = run(&[
        "synth",
        "--spec",
        scene.to_str().unwrap(),
        "--out",
        dir.path().join("e.bin").to_str().unwrap(),
        "--truth",
        dir.path().join("t.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("nonsense"));
}

#[test]
fn synth_detect_eval_chain_produces_metrics() {
    let dir = TempDir::new().unwrap();
    let (_scene, events, truth) = synth_scene(dir.path());
    let labels = dir.path().join("labels.csv");
    let summary = dir.path().join("summary.csv");
    let out = run(&[
        "--set",
        "esusan.g=10,20,31",
        "detect",
        "--in",
        events.to_str().unwrap(),
        "--detector",
        "se-harris",
        "--out",
        labels.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "detect failed: {}", stderr_of(&out));

    let metrics = dir.path().join("metrics.csv");
    let out = run(&[
        "eval",
        "--labels",
        labels.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
        "--out",
        metrics.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "eval failed: {}", stderr_of(&out));

    let text = fs::read_to_string(&metrics).unwrap();
    assert!(text.contains("se-harris"), "metrics name the detector: {text}");
    let data_line = text
        .lines()
        .find(|l| l.starts_with("se-harris"))
        .expect("metrics row");
    // detector,reduction,accuracy,tpr,lifetime,validity,...
    let fields: Vec<&str> = data_line.split(',').collect();
    let reduction: f64 = fields[1].parse().unwrap();
    let accuracy: f64 = fields[2].parse().unwrap();
    assert!(reduction > 50.0, "reduction {reduction}");
    assert!(accuracy > 0.8, "accuracy {accuracy}");
}

#[test]
fn detect_is_deterministic_across_runs() {
    let dir = TempDir::new().unwrap();
    let (_scene, events, _truth) = synth_scene(dir.path());
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let labels = dir.path().join(name);
        let out = run(&[
            "detect",
            "--in",
            events.to_str().unwrap(),
            "--detector",
            "se-harris",
            "--out",
            labels.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr_of(&out));
        outputs.push(fs::read(&labels).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "label files must be byte-identical");
}

#[test]
fn convert_round_trips_between_formats() {
    let dir = TempDir::new().unwrap();
    let (_scene, events, _truth) = synth_scene(dir.path());
    let text = dir.path().join("events.txt");
    let back = dir.path().join("events2.bin");
    let out = run(&[
        "convert",
        "--in",
        events.to_str().unwrap(),
        "--out",
        text.to_str().unwrap(),
        "--to",
        "text",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let out = run(&[
        "convert",
        "--in",
        text.to_str().unwrap(),
        "--out",
        back.to_str().unwrap(),
        "--to",
        "binary",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    assert_eq!(
        fs::read(&events).unwrap(),
        fs::read(&back).unwrap(),
        "binary -> text -> binary must reproduce the stream"
    );
}

#[test]
fn filter_only_removes_events() {
    let dir = TempDir::new().unwrap();
    let (_scene, events, _truth) = synth_scene(dir.path());
    let filtered = dir.path().join("filtered.bin");
    let out = run(&[
        "--set",
        "refractory.period_us=100",
        "filter",
        "--in",
        events.to_str().unwrap(),
        "--out",
        filtered.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let full = fs::metadata(&events).unwrap().len();
    let kept = fs::metadata(&filtered).unwrap().len();
    assert!(kept < full, "filter kept {kept} of {full} bytes");
}

#[test]
fn normalize_dumps_a_patch_grid() {
    let dir = TempDir::new().unwrap();
    let (_scene, events, _truth) = synth_scene(dir.path());
    let patch = dir.path().join("patch.csv");
    let out = run(&[
        "normalize",
        "--in",
        events.to_str().unwrap(),
        "--method",
        "aed",
        "--out",
        patch.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&patch).unwrap();
    assert!(text.contains("# method=aed"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 9, "9x9 patch rows, got {}", rows.len());
    assert_eq!(rows[0].split(',').count(), 9);
}

#[test]
fn bench_reports_all_detectors() {
    let dir = TempDir::new().unwrap();
    let (_scene, events, _truth) = synth_scene(dir.path());
    let report = dir.path().join("bench.txt");
    let csv = dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--in",
        events.to_str().unwrap(),
        "--runs",
        "1",
        "--out",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&report).unwrap();
    for name in ["esusan", "se-harris", "aed-eharris", "g-eharris"] {
        assert!(text.contains(name), "bench report misses {name}: {text}");
    }
    let csv_text = fs::read_to_string(&csv).unwrap();
    assert!(csv_text.lines().filter(|l| !l.starts_with('#')).count() >= 5);
}
