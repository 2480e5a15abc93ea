//! Black-box tests of the `pupilrig` binary: subcommand behavior, file
//! formats, and the exit-code contract (0 ok, 1 usage/config, 2 data).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pupilrig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pupilrig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_exits_zero() {
    let out = pupilrig(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("pupilrig"));
}

#[test]
fn unknown_flag_exits_one() {
    let out = pupilrig(&["run", "--nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_trace_processes_zero_frames() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    let output = dir.path().join("out.jsonl");
    fs::write(&input, "").unwrap();
    let out = pupilrig(&[
        "run",
        "--input",
        path_str(&input),
        "--output",
        path_str(&output),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("frames: 0"));
    assert_eq!(fs::read_to_string(&output).unwrap(), "");
}

#[test]
fn corrupt_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let output = dir.path().join("out.jsonl");
    let synth = pupilrig(&[
        "synth",
        "--output",
        path_str(&trace),
        "--frames",
        "60",
        "--seed",
        "1",
    ]);
    assert_eq!(synth.status.code(), Some(0));

    let mut lines: Vec<String> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    lines[56] = "{broken".to_string(); // line 57
    fs::write(&trace, lines.join("\n") + "\n").unwrap();

    let out = pupilrig(&[
        "run",
        "--input",
        path_str(&trace),
        "--output",
        path_str(&output),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("line 57"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn missing_input_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pupilrig(&[
        "run",
        "--input",
        path_str(&dir.path().join("nope.jsonl")),
        "--output",
        path_str(&dir.path().join("out.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.jsonl"));
}

#[test]
fn config_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    let out = pupilrig(&["config", "dump", "--output", path_str(&config_path)]);
    assert_eq!(out.status.code(), Some(0));

    // Dumping the dumped config must be a fixed point.
    let redump = pupilrig(&["config", "dump", "--config", path_str(&config_path)]);
    assert_eq!(redump.status.code(), Some(0));
    assert_eq!(stdout(&redump), fs::read_to_string(&config_path).unwrap());

    // And the file must be usable as a run config.
    let trace = dir.path().join("t.jsonl");
    pupilrig(&["synth", "--output", path_str(&trace), "--frames", "3"]);
    let run = pupilrig(&[
        "run",
        "--input",
        path_str(&trace),
        "--output",
        path_str(&dir.path().join("o.jsonl")),
        "--config",
        path_str(&config_path),
    ]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    fs::write(&config_path, "[smoothing]\nalpha = 7.0\n").unwrap();
    let out = pupilrig(&[
        "run",
        "--input",
        path_str(&dir.path().join("t.jsonl")),
        "--output",
        path_str(&dir.path().join("o.jsonl")),
        "--config",
        path_str(&config_path),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("alpha"));
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = pupilrig(&[
            "synth",
            "--output",
            path_str(path),
            "--frames",
            "40",
            "--seed",
            "9",
            "--signal",
            "sine:0.7,0.4,60",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = dir.path().join("c.jsonl");
    pupilrig(&[
        "synth",
        "--output",
        path_str(&c),
        "--frames",
        "40",
        "--seed",
        "10",
        "--signal",
        "sine:0.7,0.4,60",
    ]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn bad_signal_spec_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    for signal in ["wobble", "constant:2.0,0.0", "grid:1", "sine:0.5,0.5,-3"] {
        let out = pupilrig(&[
            "synth",
            "--output",
            path_str(&dir.path().join("t.jsonl")),
            "--signal",
            signal,
        ]);
        assert_eq!(out.status.code(), Some(1), "signal {signal}");
    }
}

#[test]
fn split_trace_matches_refined_trace() {
    let dir = tempfile::tempdir().unwrap();
    let refined = dir.path().join("refined.jsonl");
    let split = dir.path().join("split.jsonl");
    for (path, format) in [(&refined, "refined"), (&split, "split")] {
        let out = pupilrig(&[
            "synth",
            "--output",
            path_str(path),
            "--frames",
            "25",
            "--seed",
            "4",
            "--signal",
            "sine:0.9,0.8,30",
            "--format",
            format,
        ]);
        assert_eq!(out.status.code(), Some(0));
    }

    let run = |input: &Path, format: &str, output: &Path| {
        let out = pupilrig(&[
            "run",
            "--input",
            path_str(input),
            "--output",
            path_str(output),
            "--format",
            format,
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    };
    let out_refined = dir.path().join("out_refined.jsonl");
    let out_split = dir.path().join("out_split.jsonl");
    run(&refined, "refined", &out_refined);
    run(&split, "split", &out_split);

    let parse = |path: &Path| -> Vec<serde_json::Value> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    };
    for (a, b) in parse(&out_refined).iter().zip(parse(&out_split).iter()) {
        for field in ["vertical", "horizontal_left", "horizontal_right"] {
            let va = a["smoothed"][field].as_f64().unwrap();
            let vb = b["smoothed"][field].as_f64().unwrap();
            assert!((va - vb).abs() < 1e-7, "{field}: {va} vs {vb}");
        }
    }
}

#[test]
fn refined_run_on_split_trace_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("split.jsonl");
    pupilrig(&[
        "synth",
        "--output",
        path_str(&split),
        "--frames",
        "2",
        "--format",
        "split",
    ]);
    let out = pupilrig(&[
        "run",
        "--input",
        path_str(&split),
        "--output",
        path_str(&dir.path().join("o.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"));
}

#[test]
fn eval_of_identical_traces_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    pupilrig(&[
        "synth",
        "--output",
        path_str(&trace),
        "--frames",
        "6",
        "--seed",
        "2",
    ]);
    let csv = dir.path().join("metrics.csv");
    let out = pupilrig(&[
        "eval",
        "--pred",
        path_str(&trace),
        "--gt",
        path_str(&trace),
        "--output",
        path_str(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let body = fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "index,mad_ied,mse_ied");
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "0");
        assert_eq!(cells[2], "0");
    }
    assert!(stdout(&out).contains("mean mad_ied: 0"));
}

#[test]
fn eval_bare_points_require_ied() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    let gt = dir.path().join("gt.jsonl");
    fs::write(&pred, "[[0.0, 0.0], [1.0, 0.0]]\n").unwrap();
    fs::write(&gt, "[[0.0, 0.1], [1.0, 0.0]]\n").unwrap();

    let out = pupilrig(&["eval", "--pred", path_str(&pred), "--gt", path_str(&gt)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--ied"));

    let out = pupilrig(&[
        "eval",
        "--pred",
        path_str(&pred),
        "--gt",
        path_str(&gt),
        "--ied",
        "0.2",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    // mad = mean(0.1, 0) / 0.2 = 0.25; mse = mean(0.01, 0) / 0.04 = 0.125.
    let body = stdout(&out);
    let row = body.lines().nth(1).unwrap();
    let cells: Vec<f64> = row.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    assert!((cells[0] - 0.25).abs() < 1e-12);
    assert!((cells[1] - 0.125).abs() < 1e-12);
}

#[test]
fn calib_report_emits_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    pupilrig(&[
        "synth",
        "--output",
        path_str(&trace),
        "--frames",
        "20",
        "--seed",
        "6",
    ]);
    let report = dir.path().join("report.csv");
    let out = pupilrig(&[
        "calib-report",
        "--input",
        path_str(&trace),
        "--output",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let body = fs::read_to_string(&report).unwrap();
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frame,eye,direction,reference,d_current,d_trusted,d_calibrated,sigma,f_influence"
    );
    // Default config calibrates d_neutral only: 8 probes x 20 frames.
    assert_eq!(lines.count(), 8 * 20);

    let filtered = dir.path().join("left_up.csv");
    let out = pupilrig(&[
        "calib-report",
        "--input",
        path_str(&trace),
        "--output",
        path_str(&filtered),
        "--eye",
        "left",
        "--direction",
        "upward",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let body = fs::read_to_string(&filtered).unwrap();
    assert_eq!(body.lines().count(), 1 + 20);
    assert!(body.lines().nth(1).unwrap().starts_with("0,left,upward,neutral,"));
}

#[test]
fn calib_report_with_calibration_disabled_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    fs::write(
        &config_path,
        "[calibration]\ncalibrate_neutral = false\ncalibrate_activated = false\n",
    )
    .unwrap();
    let out = pupilrig(&[
        "calib-report",
        "--input",
        path_str(&dir.path().join("t.jsonl")),
        "--output",
        path_str(&dir.path().join("r.csv")),
        "--config",
        path_str(&config_path),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_single_frame_reports_one_sample() {
    let out = pupilrig(&["bench", "--frames", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("frames: 1"));
    assert!(text.contains("mean latency"));
    assert!(text.contains("p99 latency"));
}

#[test]
fn bench_mean_latency_is_stable_under_frame_doubling() {
    let mean_of = |frames: &str| -> f64 {
        let out = pupilrig(&["bench", "--frames", frames]);
        assert_eq!(out.status.code(), Some(0));
        stdout(&out)
            .lines()
            .find_map(|l| l.strip_prefix("mean latency: "))
            .and_then(|l| l.strip_suffix(" us"))
            .unwrap()
            .parse()
            .unwrap()
    };
    let short = mean_of("4000");
    let long = mean_of("8000");
    // Steady-state cost per frame must not scale with trace length. The
    // band is wide because wall-clock means on a shared box are noisy; the
    // absolute ceiling catches runaway per-frame cost either way.
    let ratio = long / short;
    assert!(
        (0.1..10.0).contains(&ratio),
        "mean latency drifted: {short} us vs {long} us"
    );
    assert!(long < 100.0, "per-frame mean {long} us");
}

#[test]
fn grid_signal_fixes_frame_count() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("grid.jsonl");
    let out = pupilrig(&[
        "synth",
        "--output",
        path_str(&trace),
        "--signal",
        "grid:5",
        "--frames",
        "999",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("frames: 25"));
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count(), 25);
}
