//! Implementations of the CLI subcommands.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pupilrig_core::metrics::{inter_eye_distance, mad_ied, mse_ied, LandmarkSet};
use pupilrig_core::pipeline::{FrameInput, Pipeline, PipelineConfig};
use pupilrig_core::synth::{GazeSample, TraceGenerator};
use pupilrig_core::trace::{parse_line, ParsedFrame, RefinedRecord, SplitRecord, TraceFormat};
use pupilrig_core::{BlendShapeFrame, Direction, Side};

use crate::{BenchArgs, CalibReportArgs, CliError, EvalArgs, RunArgs, SynthArgs};

type CliResult<T> = Result<T, CliError>;

/// Frame geometry assumed when synthesizing split-schema traces.
const SPLIT_FRAME_W: u32 = 640;
const SPLIT_FRAME_H: u32 = 480;

fn usage(message: impl std::fmt::Display) -> CliError {
    CliError::Usage(message.to_string())
}

fn data(message: impl std::fmt::Display) -> CliError {
    CliError::Data(message.to_string())
}

fn load_config(path: Option<&Path>) -> CliResult<PipelineConfig> {
    let config = match path {
        None => PipelineConfig::default(),
        Some(path) => {
            let mut text = String::new();
            File::open(path)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
    };
    config
        .validate()
        .map_err(|e| usage(format!("invalid config: {e}")))?;
    Ok(config)
}

fn open_input(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| data(format!("{}: {e}", path.display())))
}

fn create_output(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Tracks the observed range of the three output channels.
#[derive(Default)]
struct RangeSummary {
    count: u64,
    min: [f64; 3],
    max: [f64; 3],
}

impl RangeSummary {
    fn update(&mut self, frame: &BlendShapeFrame) {
        let values = [
            frame.smoothed.vertical,
            frame.smoothed.horizontal_left,
            frame.smoothed.horizontal_right,
        ];
        if self.count == 0 {
            self.min = values;
            self.max = values;
        } else {
            for (i, v) in values.iter().enumerate() {
                self.min[i] = self.min[i].min(*v);
                self.max[i] = self.max[i].max(*v);
            }
        }
        self.count += 1;
    }

    fn print(&self) {
        if self.count == 0 {
            return;
        }
        for (i, name) in ["vertical", "horizontal_left", "horizontal_right"]
            .iter()
            .enumerate()
        {
            println!(
                "smoothed {name} range: [{}, {}]",
                self.min[i], self.max[i]
            );
        }
    }
}

const CSV_HEADER: &str = "frame,coupled_vertical,coupled_horizontal_left,coupled_horizontal_right,smoothed_vertical,smoothed_horizontal_left,smoothed_horizontal_right";

fn csv_row(frame: &BlendShapeFrame) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        frame.frame_index,
        frame.coupled.vertical,
        frame.coupled.horizontal_left,
        frame.coupled.horizontal_right,
        frame.smoothed.vertical,
        frame.smoothed.horizontal_left,
        frame.smoothed.horizontal_right,
    )
}

/// Streams a trace through a pipeline, invoking `sink` per output frame.
fn stream_trace(
    pipeline: &mut Pipeline,
    input_path: &Path,
    format: TraceFormat,
    mut sink: impl FnMut(&BlendShapeFrame) -> CliResult<()>,
) -> CliResult<u64> {
    let reader = open_input(input_path)?;
    let mut frames = 0u64;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let at = |e: &dyn std::fmt::Display| {
            data(format!("{}: line {line_no}: {e}", input_path.display()))
        };
        let line = line.map_err(|e| at(&e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_line(format, &line).map_err(|e| at(&e))?;
        let frame_input = match &parsed {
            ParsedFrame::Refined { mesh, .. } => FrameInput::Refined(mesh),
            ParsedFrame::Split {
                mesh, left, right, ..
            } => FrameInput::Split { mesh, left, right },
        };
        let output = pipeline.process_frame(frame_input).map_err(|e| at(&e))?;
        sink(&output)?;
        frames += 1;
    }
    Ok(frames)
}

pub fn run(args: RunArgs) -> CliResult<()> {
    let config = load_config(args.config.as_deref())?;
    let mut pipeline = Pipeline::new(config).map_err(|e| usage(format!("invalid config: {e}")))?;

    let mut out = create_output(&args.output)?;
    let mut csv = match &args.csv {
        Some(path) => {
            let mut w = create_output(path)?;
            writeln!(w, "{CSV_HEADER}").map_err(|e| data(format!("{}: {e}", path.display())))?;
            Some((w, path.clone()))
        }
        None => None,
    };

    let mut ranges = RangeSummary::default();
    let started = Instant::now();
    let frames = stream_trace(&mut pipeline, &args.input, args.format, |frame| {
        let record = serde_json::to_string(frame)
            .map_err(|e| data(format!("failed to serialize frame: {e}")))?;
        writeln!(out, "{record}").map_err(|e| data(format!("{}: {e}", args.output.display())))?;
        if let Some((w, path)) = &mut csv {
            writeln!(w, "{}", csv_row(frame))
                .map_err(|e| data(format!("{}: {e}", path.display())))?;
        }
        ranges.update(frame);
        Ok(())
    })?;
    out.flush()
        .map_err(|e| data(format!("{}: {e}", args.output.display())))?;
    if let Some((mut w, path)) = csv {
        w.flush().map_err(|e| data(format!("{}: {e}", path.display())))?;
    }

    let elapsed = started.elapsed().as_secs_f64();
    println!("frames: {frames}");
    if frames > 0 && elapsed > 0.0 {
        println!("throughput: {:.1} frames/sec", frames as f64 / elapsed);
    }
    ranges.print();
    Ok(())
}

/// Gaze signal specifications accepted by `synth`.
enum SignalSpec {
    Neutral,
    Constant(f64, f64),
    Sine { ax: f64, ay: f64, period: f64 },
    Grid(u64),
}

impl SignalSpec {
    fn parse(spec: &str) -> CliResult<Self> {
        let bad = || usage(format!("bad --signal {spec:?} (expected neutral | constant:GX,GY | sine:AX,AY,PERIOD | grid:N)"));
        let in_unit = |v: f64| -> CliResult<f64> {
            if (-1.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(usage(format!("signal amplitude {v} outside [-1, 1]")))
            }
        };
        if spec == "neutral" {
            return Ok(SignalSpec::Neutral);
        }
        let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(',').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        match (kind, parts.as_slice()) {
            ("constant", [gx, gy]) => Ok(SignalSpec::Constant(in_unit(num(gx)?)?, in_unit(num(gy)?)?)),
            ("sine", [ax, ay, period]) => {
                let period = num(period)?;
                if period <= 0.0 {
                    return Err(usage(format!("sine period {period} must be positive")));
                }
                Ok(SignalSpec::Sine {
                    ax: in_unit(num(ax)?)?,
                    ay: in_unit(num(ay)?)?,
                    period,
                })
            }
            ("grid", [n]) => {
                let n: u64 = n.trim().parse().map_err(|_| bad())?;
                if n < 2 {
                    return Err(usage("grid size must be at least 2".to_string()));
                }
                Ok(SignalSpec::Grid(n))
            }
            _ => Err(bad()),
        }
    }

    fn frames(&self, requested: u64) -> CliResult<u64> {
        match self {
            SignalSpec::Grid(n) => Ok(n * n),
            _ if requested == 0 => Err(usage("--frames must be at least 1".to_string())),
            _ => Ok(requested),
        }
    }

    fn gaze_at(&self, index: u64) -> GazeSample {
        match *self {
            SignalSpec::Neutral => GazeSample::NEUTRAL,
            SignalSpec::Constant(gx, gy) => GazeSample::new(gx, gy),
            SignalSpec::Sine { ax, ay, period } => {
                let t = 2.0 * std::f64::consts::PI * index as f64 / period;
                GazeSample::new(ax * t.sin(), ay * (2.0 * t).sin())
            }
            SignalSpec::Grid(n) => {
                let step = |k: u64| -1.0 + 2.0 * k as f64 / (n - 1) as f64;
                GazeSample::new(step(index % n), step((index / n) % n))
            }
        }
    }
}

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let config = load_config(args.config.as_deref())?;
    let spec = SignalSpec::parse(&args.signal)?;
    let frames = spec.frames(args.frames)?;
    let mut generator = TraceGenerator::new(config.profile.clone(), args.seed)
        .map_err(|e| usage(format!("invalid profile: {e}")))?;

    let mut out = create_output(&args.output)?;
    for i in 0..frames {
        let frame = generator.next_frame(spec.gaze_at(i));
        let line = match args.format {
            TraceFormat::Refined => {
                serde_json::to_string(&RefinedRecord::from_mesh(&frame.mesh, Some(frame.truth)))
            }
            TraceFormat::Split => {
                let record = SplitRecord::from_refined(
                    &frame.mesh,
                    &config.index_map,
                    SPLIT_FRAME_W,
                    SPLIT_FRAME_H,
                    1.0,
                    Some(frame.truth),
                )
                .map_err(|e| data(format!("frame {i}: {e}")))?;
                serde_json::to_string(&record)
            }
        }
        .map_err(|e| data(format!("failed to serialize frame {i}: {e}")))?;
        writeln!(out, "{line}").map_err(|e| data(format!("{}: {e}", args.output.display())))?;
    }
    out.flush()
        .map_err(|e| data(format!("{}: {e}", args.output.display())))?;
    println!("frames: {frames}");
    println!("seed: {}", args.seed);
    Ok(())
}

/// One eval input line: a landmark set, plus the mesh when the line was a
/// refined trace record (the gt mesh is what the IED is derived from).
fn parse_landmark_line(
    line: &str,
) -> Result<(LandmarkSet, Option<pupilrig_core::RefinedFaceMesh>), String> {
    if let Ok(record) = serde_json::from_str::<RefinedRecord>(line) {
        let mesh = record.to_mesh().map_err(|e| e.to_string())?;
        return Ok((LandmarkSet::from_mesh(&mesh), Some(mesh)));
    }
    let points: Vec<[f64; 2]> = serde_json::from_str(line)
        .map_err(|e| format!("neither a refined record nor a point list: {e}"))?;
    let set = LandmarkSet::new(points).map_err(|e| e.to_string())?;
    Ok((set, None))
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    // The index map only matters for IED derivation; an explicit --ied wins.
    let config = load_config(args.config.as_deref())?;
    let pred_reader = open_input(&args.pred)?;
    let gt_reader = open_input(&args.gt)?;

    let mut rows = Vec::new();
    let mut pred_lines = pred_reader.lines();
    let mut gt_lines = gt_reader.lines();
    let mut index = 0u64;
    loop {
        let pred_line = pred_lines.next().transpose().map_err(|e| data(format!("{}: {e}", args.pred.display())))?;
        let gt_line = gt_lines.next().transpose().map_err(|e| data(format!("{}: {e}", args.gt.display())))?;
        let (pred_line, gt_line) = match (pred_line, gt_line) {
            (None, None) => break,
            (Some(p), Some(g)) => (p, g),
            _ => {
                return Err(data(format!(
                    "{} and {} have different line counts",
                    args.pred.display(),
                    args.gt.display()
                )))
            }
        };
        if pred_line.trim().is_empty() && gt_line.trim().is_empty() {
            continue;
        }
        index += 1;
        let at = |path: &PathBuf, e: &dyn std::fmt::Display| {
            data(format!("{}: record {index}: {e}", path.display()))
        };
        let (pred_set, _) = parse_landmark_line(&pred_line).map_err(|e| at(&args.pred, &e))?;
        let (gt_set, gt_mesh) = parse_landmark_line(&gt_line).map_err(|e| at(&args.gt, &e))?;
        let ied = match (args.ied, &gt_mesh) {
            (Some(ied), _) => ied,
            (None, Some(mesh)) => {
                inter_eye_distance(mesh, &config.index_map).map_err(|e| at(&args.gt, &e))?
            }
            (None, None) => {
                return Err(usage(
                    "--ied is required when inputs are bare point lists".to_string(),
                ))
            }
        };
        let mad = mad_ied(&pred_set, &gt_set, ied).map_err(|e| at(&args.pred, &e))?;
        let mse = mse_ied(&pred_set, &gt_set, ied).map_err(|e| at(&args.pred, &e))?;
        rows.push((index, mad, mse));
    }

    let body = {
        let mut s = String::from("index,mad_ied,mse_ied\n");
        for (i, mad, mse) in &rows {
            s.push_str(&format!("{i},{mad},{mse}\n"));
        }
        s
    };
    let n = rows.len().max(1) as f64;
    let mean_mad: f64 = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let mean_mse: f64 = rows.iter().map(|r| r.2).sum::<f64>() / n;
    match &args.output {
        Some(path) => {
            let mut w = create_output(path)?;
            w.write_all(body.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| data(format!("{}: {e}", path.display())))?;
            println!("records: {}", rows.len());
            println!("mean mad_ied: {mean_mad}");
            println!("mean mse_ied: {mean_mse}");
        }
        None => {
            print!("{body}");
            eprintln!("records: {}", rows.len());
            eprintln!("mean mad_ied: {mean_mad}");
            eprintln!("mean mse_ied: {mean_mse}");
        }
    }
    Ok(())
}

pub fn calib_report(args: CalibReportArgs) -> CliResult<()> {
    let config = load_config(args.config.as_deref())?;
    if !config.calibration.enabled() {
        return Err(usage(
            "calibration is disabled in the config; nothing to report".to_string(),
        ));
    }
    let eye = args
        .eye
        .as_deref()
        .map(|s| match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(usage(format!("bad --eye {other:?} (expected left|right)"))),
        })
        .transpose()?;
    let direction = args
        .direction
        .as_deref()
        .map(|s| {
            Direction::ALL
                .into_iter()
                .find(|d| d.as_str() == s)
                .ok_or_else(|| {
                    usage(format!(
                        "bad --direction {s:?} (expected outward|inward|upward|downward)"
                    ))
                })
        })
        .transpose()?;

    let mut pipeline = Pipeline::new(config).map_err(|e| usage(format!("invalid config: {e}")))?;
    let mut out = create_output(&args.output)?;
    writeln!(
        out,
        "frame,eye,direction,reference,d_current,d_trusted,d_calibrated,sigma,f_influence"
    )
    .map_err(|e| data(format!("{}: {e}", args.output.display())))?;

    let mut rows = 0u64;
    let frames = stream_trace(&mut pipeline, &args.input, args.format, |frame| {
        for snap in &frame.calibration {
            if eye.is_some_and(|e| e != snap.eye) {
                continue;
            }
            if direction.is_some_and(|d| d != snap.direction) {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                frame.frame_index,
                snap.eye.as_str(),
                snap.direction.as_str(),
                snap.reference.as_str(),
                snap.d_current,
                snap.d_trusted,
                snap.d_calibrated,
                snap.sigma,
                snap.f_influence,
            )
            .map_err(|e| data(format!("{}: {e}", args.output.display())))?;
            rows += 1;
        }
        Ok(())
    })?;
    out.flush()
        .map_err(|e| data(format!("{}: {e}", args.output.display())))?;
    println!("frames: {frames}");
    println!("rows: {rows}");
    Ok(())
}

pub fn bench(args: BenchArgs) -> CliResult<()> {
    if args.frames == 0 {
        return Err(usage("--frames must be at least 1".to_string()));
    }
    let config = load_config(args.config.as_deref())?;
    let mut pipeline =
        Pipeline::new(config.clone()).map_err(|e| usage(format!("invalid config: {e}")))?;

    // A fixed pool of pre-generated frames keeps memory bounded while the
    // measurement loop touches nothing but process_frame.
    let pool_len = args.frames.min(1024) as usize;
    let mut generator = TraceGenerator::new(config.profile.clone(), 1)
        .map_err(|e| usage(format!("invalid profile: {e}")))?;
    let pool: Vec<_> = (0..pool_len)
        .map(|i| {
            let t = i as f64;
            generator
                .next_frame(GazeSample::new(
                    0.9 * (t / 97.0).sin(),
                    0.7 * (t / 53.0).sin(),
                ))
                .mesh
        })
        .collect();

    for mesh in pool.iter().take(256) {
        pipeline
            .process_frame(FrameInput::Refined(mesh))
            .map_err(|e| data(format!("warmup frame failed: {e}")))?;
    }

    let mut latencies_ns = Vec::with_capacity(args.frames as usize);
    let started = Instant::now();
    for i in 0..args.frames {
        let mesh = &pool[(i % pool_len as u64) as usize];
        let t0 = Instant::now();
        pipeline
            .process_frame(FrameInput::Refined(mesh))
            .map_err(|e| data(format!("frame {i} failed: {e}")))?;
        latencies_ns.push(t0.elapsed().as_nanos() as u64);
    }
    let elapsed = started.elapsed().as_secs_f64();

    latencies_ns.sort_unstable();
    let n = latencies_ns.len();
    let mean_ns = latencies_ns.iter().sum::<u64>() as f64 / n as f64;
    let p99_ns = latencies_ns[((n as f64 * 0.99).ceil() as usize).clamp(1, n) - 1];
    println!("frames: {}", args.frames);
    println!("throughput: {:.1} frames/sec", args.frames as f64 / elapsed);
    println!("mean latency: {:.3} us", mean_ns / 1000.0);
    println!("p99 latency: {:.3} us", p99_ns as f64 / 1000.0);
    Ok(())
}

pub fn config_dump(config: Option<PathBuf>, output: Option<PathBuf>) -> CliResult<()> {
    let config = load_config(config.as_deref())?;
    let text =
        toml::to_string_pretty(&config).map_err(|e| usage(format!("cannot render config: {e}")))?;
    match output {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| data(format!("{}: {e}", path.display())))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
