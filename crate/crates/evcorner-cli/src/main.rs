//! `evcorner`: event-camera corner detection toolkit.
//!
//! One executable with subcommands for converting streams, filtering,
//! dumping normalized patches, detecting corners, generating synthetic
//! scenes, evaluating detections against ground truth, and benchmarking all
//! detectors on one stream.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or values), 2 on
//! data errors (unreadable or malformed inputs, invalid configuration files).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use evcorner::config::RunConfig;
use evcorner::esusan::KERNEL_RADIUS;
use evcorner::eval::{
    accuracy_cylinders, bench_report, corner_events, hardware_string, nn_track, tpr,
    write_metrics_csv, CylinderParams, MetricsRow, TrackParams,
};
use evcorner::io::{
    is_binary_header, read_binary_events, read_text_events, write_binary_events,
    write_text_events, BINARY_MAGIC,
};
use evcorner::normalize::{
    normalize_aed, normalize_binary, normalize_exp, normalize_linear, normalize_minmax,
    normalize_sorted, normalize_time_window, AedLookupTable, NormalizedPatch, SitsSurface,
};
use evcorner::pipeline::{
    read_labels_csv, read_summary_csv, write_labels_csv, write_summary_csv, DetectorKind,
    EventLabel, LabelMeta, Pipeline, StreamSummary, SurfaceChoice,
};
use evcorner::surface::TimeSurface;
use evcorner::synth::{generate, parse_scene, read_truth_csv, write_truth_csv};
use evcorner::tgf::{FilterDecision, GfFilter, RefractoryDecision, RefractoryFilter, TgfState};
use evcorner::{Event, SensorGeometry};

// ---------------------------------------------------------------------------
// Argument definitions
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "evcorner",
    version,
    about = "Per-event corner detection for event cameras",
    propagate_version = true
)]
struct Cli {
    /// Sensor size as WxH (text inputs default to 240x180; binary headers
    /// are overridden only when this flag is given).
    #[arg(long, global = true, value_name = "WxH")]
    geometry: Option<String>,

    /// Random seed override (synthetic scene generation).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Configuration file (line-oriented `key = value`).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Single configuration override, repeatable (`--set tgf.lambda=2`).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StreamFormat {
    Text,
    Binary,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum NormMethod {
    Minmax,
    Window,
    Linear,
    Exp,
    Binary,
    Sorted,
    Sits,
    Aed,
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse().map_err(|e: evcorner::Error| e.to_string())
}

fn parse_surface(s: &str) -> Result<SurfaceChoice, String> {
    s.parse().map_err(|e: evcorner::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Convert an event stream between the text and binary formats.
    Convert {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Output format; defaults to the opposite of the input format.
        #[arg(long, value_enum)]
        to: Option<StreamFormat>,
    },
    /// Run only the background-activity and refractory filters.
    Filter {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Output format; defaults to the input format.
        #[arg(long, value_enum)]
        to: Option<StreamFormat>,
    },
    /// Dump a normalized surface patch around one event as CSV.
    Normalize {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: NormMethod,
        /// Event index the patch is centered on (default: last event).
        #[arg(long, value_name = "INDEX")]
        at: Option<usize>,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Detect corners and write per-event labels.
    Detect {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_parser = parse_detector)]
        detector: DetectorKind,
        /// Detection surface: auto, full, or down2.
        #[arg(long, default_value = "auto", value_parser = parse_surface)]
        surface: SurfaceChoice,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Also write run counters (with wall-clock timing) as CSV.
        #[arg(long, value_name = "FILE")]
        summary: Option<PathBuf>,
    },
    /// Generate a synthetic scene: events plus vertex ground truth.
    Synth {
        /// Scene description file.
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Event output; `.txt`/`.dat`/`.csv` extensions select the text
        /// format, anything else the binary format.
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Vertex trajectory CSV.
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
    },
    /// Score a label file against ground truth and write metrics.
    Eval {
        #[arg(long, value_name = "FILE")]
        labels: PathBuf,
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        /// Summary CSV from `detect` (supplies timing and exact filter
        /// counts for the reduction column).
        #[arg(long, value_name = "FILE")]
        summary: Option<PathBuf>,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Run every detector on one stream and report the comparison table.
    Bench {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Timed repetitions per detector; the median is reported.
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Report file (default: stdout).
        #[arg(long = "out", value_name = "FILE")]
        output: Option<PathBuf>,
        /// Also write the per-detector summaries as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Shard across detectors (one thread each); streams are never split.
        #[arg(long)]
        parallel: bool,
    },
}

// ---------------------------------------------------------------------------
// Error handling: usage errors exit 1, data errors exit 2
// ---------------------------------------------------------------------------

enum AppError {
    Usage(String),
    Data(String),
}

type AppResult<T> = Result<T, AppError>;

impl From<evcorner::Error> for AppError {
    fn from(e: evcorner::Error) -> Self {
        AppError::Data(e.to_string())
    }
}

/// Attaches the file path to errors so every failure names its input.
trait WithPath<T> {
    fn at(self, path: &Path) -> AppResult<T>;
}

impl<T, E: std::fmt::Display> WithPath<T> for Result<T, E> {
    fn at(self, path: &Path) -> AppResult<T> {
        self.map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

const DEFAULT_TEXT_GEOMETRY: &str = "240x180";

fn parse_geometry_flag(cli: &Cli) -> AppResult<Option<SensorGeometry>> {
    match &cli.geometry {
        None => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|e: evcorner::Error| AppError::Usage(e.to_string())),
    }
}

fn load_config(cli: &Cli) -> AppResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).at(path)?;
            RunConfig::parse(&text).at(path)?
        }
        None => RunConfig::default(),
    };
    for assignment in &cli.overrides {
        cfg.apply_override(assignment)
            .map_err(|e| AppError::Usage(e.to_string()))?;
    }
    if !cli.overrides.is_empty() {
        cfg.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

/// Reads an event stream, deciding text vs binary from the leading bytes.
fn read_events_auto(
    path: &Path,
    geometry_flag: Option<SensorGeometry>,
) -> AppResult<(Vec<Event>, SensorGeometry, StreamFormat)> {
    let file = File::open(path).at(path)?;
    let mut reader = BufReader::new(file);
    let head = reader.fill_buf().at(path)?;
    let binary = head.len() >= BINARY_MAGIC.len() && is_binary_header(head);
    if binary {
        let (events, geometry) = read_binary_events(reader, geometry_flag).at(path)?;
        Ok((events, geometry, StreamFormat::Binary))
    } else {
        let geometry = match geometry_flag {
            Some(g) => g,
            None => DEFAULT_TEXT_GEOMETRY.parse::<SensorGeometry>().expect("valid default"),
        };
        let events = read_text_events(reader, geometry).at(path)?;
        Ok((events, geometry, StreamFormat::Text))
    }
}

fn write_events(
    path: &Path,
    format: StreamFormat,
    geometry: SensorGeometry,
    events: &[Event],
) -> AppResult<()> {
    let file = File::create(path).at(path)?;
    let mut w = BufWriter::new(file);
    match format {
        StreamFormat::Text => write_text_events(&mut w, events).at(path)?,
        StreamFormat::Binary => write_binary_events(&mut w, geometry, events).at(path)?,
    }
    w.flush().at(path)?;
    Ok(())
}

fn text_extension(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("txt") | Some("dat") | Some("csv")
    )
}

/// Run-identity hash: configuration plus the context that shapes the output.
fn run_hash(cfg: &RunConfig, context: &[(&str, String)]) -> String {
    cfg.content_hash(context)
}

fn run(cli: Cli) -> AppResult<()> {
    let geometry_flag = parse_geometry_flag(&cli)?;
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Convert { input, output, to } => {
            convert_cmd(input, output, *to, geometry_flag)
        }
        Command::Filter { input, output, to } => {
            filter_cmd(&cfg, input, output, *to, geometry_flag)
        }
        Command::Normalize {
            input,
            method,
            at,
            output,
        } => normalize_cmd(&cfg, input, *method, *at, output, geometry_flag),
        Command::Detect {
            input,
            detector,
            surface,
            output,
            summary,
        } => detect_cmd(
            &cfg,
            input,
            *detector,
            *surface,
            output,
            summary.as_deref(),
            geometry_flag,
        ),
        Command::Synth {
            spec,
            output,
            truth,
        } => synth_cmd(spec, output, truth, cli.seed),
        Command::Eval {
            labels,
            truth,
            summary,
            output,
        } => eval_cmd(&cfg, labels, truth, summary.as_deref(), output),
        Command::Bench {
            input,
            runs,
            output,
            csv,
            parallel,
        } => bench_cmd(
            &cfg,
            input,
            *runs,
            output.as_deref(),
            csv.as_deref(),
            *parallel,
            geometry_flag,
        ),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn convert_cmd(
    input: &Path,
    output: &Path,
    to: Option<StreamFormat>,
    geometry_flag: Option<SensorGeometry>,
) -> AppResult<()> {
    let (events, geometry, from) = read_events_auto(input, geometry_flag)?;
    let to = to.unwrap_or(match from {
        StreamFormat::Text => StreamFormat::Binary,
        StreamFormat::Binary => StreamFormat::Text,
    });
    write_events(output, to, geometry, &events)?;
    println!(
        "converted {} events ({} -> {})",
        events.len(),
        match from {
            StreamFormat::Text => "text",
            StreamFormat::Binary => "binary",
        },
        match to {
            StreamFormat::Text => "text",
            StreamFormat::Binary => "binary",
        }
    );
    Ok(())
}

fn filter_cmd(
    cfg: &RunConfig,
    input: &Path,
    output: &Path,
    to: Option<StreamFormat>,
    geometry_flag: Option<SensorGeometry>,
) -> AppResult<()> {
    let (events, geometry, from) = read_events_auto(input, geometry_flag)?;
    let mut tgf = TgfState::new(geometry, cfg.tgf)?;
    let mut gf = GfFilter::new(geometry, cfg.tgf.s)?;
    let mut refractory = if cfg.refractory_period_us > 0 {
        Some(RefractoryFilter::new(geometry, cfg.refractory_period_us)?)
    } else {
        None
    };
    let mut kept = Vec::new();
    for e in &events {
        let threshold = tgf.update(e.t);
        if gf.check_and_update(e, threshold)? == FilterDecision::Noise {
            continue;
        }
        if let Some(rf) = &mut refractory {
            if rf.check_and_update(e)? == RefractoryDecision::Drop {
                continue;
            }
        }
        kept.push(*e);
    }
    write_events(output, to.unwrap_or(from), geometry, &kept)?;
    println!(
        "kept {} of {} events ({:.2}% removed)",
        kept.len(),
        events.len(),
        evcorner::eval::reduction_rate(events.len() as u64, kept.len() as u64)
    );
    Ok(())
}

fn write_patch_csv(
    path: &Path,
    patch: &NormalizedPatch,
    notes: &[(&str, String)],
) -> AppResult<()> {
    let file = File::create(path).at(path)?;
    let mut w = BufWriter::new(file);
    let r = patch.radius() as i32;
    (|| -> std::io::Result<()> {
        for (k, v) in notes {
            writeln!(w, "# {k}={v}")?;
        }
        for dy in -r..=r {
            let row: Vec<String> = (-r..=r)
                .map(|dx| format!("{:.6}", patch.get(dx, dy)))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    })()
    .at(path)
}

fn normalize_cmd(
    cfg: &RunConfig,
    input: &Path,
    method: NormMethod,
    at: Option<usize>,
    output: &Path,
    geometry_flag: Option<SensorGeometry>,
) -> AppResult<()> {
    let (events, geometry, _) = read_events_auto(input, geometry_flag)?;
    if events.is_empty() {
        return Err(AppError::Data(format!(
            "{}: stream has no events to center a patch on",
            input.display()
        )));
    }
    let index = at.unwrap_or(events.len() - 1);
    if index >= events.len() {
        return Err(AppError::Usage(format!(
            "--at {index} is out of range (stream has {} events)",
            events.len()
        )));
    }
    let radius = cfg.harris_params().patch_radius.max(KERNEL_RADIUS);

    // Replay the stream up to and including the chosen event.
    let mut surface = TimeSurface::new(geometry, cfg.polarity_mode, 1)?;
    let mut sits = SitsSurface::new(geometry, radius);
    let mut tgf = TgfState::new(geometry, cfg.tgf)?;
    for e in &events[..=index] {
        tgf.update(e.t);
        surface.update(e)?;
        sits.update(e)?;
    }
    let center = &events[index];
    let patch = surface.local_patch(center, radius);
    let threshold = tgf.current();
    let need_tgf = |what: &str| -> AppResult<f64> {
        threshold.ok_or_else(|| {
            AppError::Data(format!(
                "{}: event {index} precedes the first adaptive-threshold interval, \
                 required by the {what} normalization",
                input.display()
            ))
        })
    };

    let (name, norm) = match method {
        NormMethod::Minmax => ("minmax", normalize_minmax(&patch)),
        NormMethod::Window => {
            let tau = need_tgf("window")?;
            ("window", normalize_time_window(&patch, tau.round() as u64))
        }
        NormMethod::Linear => {
            let tau = need_tgf("linear")?;
            ("linear", normalize_linear(&patch, tau.round() as u64))
        }
        NormMethod::Exp => {
            let tau = need_tgf("exp")?;
            ("exp", normalize_exp(&patch, 1.0 / tau))
        }
        NormMethod::Binary => ("binary", normalize_binary(&patch, cfg.harris_binary_n)),
        NormMethod::Sorted => ("sorted", normalize_sorted(&patch)),
        NormMethod::Sits => ("sits", sits.patch(center.x, center.y)),
        NormMethod::Aed => {
            let threshold = need_tgf("aed")?;
            let table =
                AedLookupTable::build(cfg.aed_table_resolution, cfg.aed_max_ratio, cfg.aed_tau)?;
            ("aed", normalize_aed(&patch, threshold, &table)?)
        }
    };

    let notes = vec![
        ("method", name.to_string()),
        (
            "event",
            format!("index={index} t_us={} x={} y={} p={}", center.t, center.x, center.y, center.p.as_i8()),
        ),
        (
            "tgf_us",
            threshold.map_or("none".into(), |v| format!("{v:.3}")),
        ),
        ("config_hash", run_hash(cfg, &[("normalize.method", name.to_string())])),
    ];
    write_patch_csv(output, &norm, &notes)?;
    println!(
        "wrote {} patch around event {index} to {}",
        name,
        output.display()
    );
    Ok(())
}

fn detect_cmd(
    cfg: &RunConfig,
    input: &Path,
    detector: DetectorKind,
    surface: SurfaceChoice,
    output: &Path,
    summary_path: Option<&Path>,
    geometry_flag: Option<SensorGeometry>,
) -> AppResult<()> {
    let (events, geometry, _) = read_events_auto(input, geometry_flag)?;
    let mut pipeline = Pipeline::new(geometry, cfg.pipeline_config(detector, surface))?;
    let mut labels: Vec<EventLabel> = Vec::with_capacity(events.len());
    let summary = pipeline.run_stream(&events, |l| labels.push(*l))?;
    let surface_desc = if pipeline.detects_on_down() { "down2" } else { "full" };
    let hash = run_hash(
        cfg,
        &[
            ("run.detector", detector.to_string()),
            ("run.surface", surface_desc.to_string()),
            ("run.geometry", geometry.to_string()),
        ],
    );
    let meta = LabelMeta {
        detector,
        surface: surface_desc.to_string(),
        config_hash: hash.clone(),
    };
    let file = File::create(output).at(output)?;
    let mut w = BufWriter::new(file);
    write_labels_csv(&mut w, &meta, &labels).at(output)?;
    w.flush().at(output)?;
    if let Some(path) = summary_path {
        let file = File::create(path).at(path)?;
        let mut w = BufWriter::new(file);
        write_summary_csv(&mut w, &hash, &[(detector, summary)]).at(path)?;
        w.flush().at(path)?;
    }
    println!(
        "{}: {} events, {} signal, {} corners ({:.2}% reduction)",
        detector,
        summary.input,
        summary.signal(),
        summary.corner,
        summary.reduction_pct()
    );
    Ok(())
}

fn synth_cmd(spec: &Path, output: &Path, truth: &Path, seed: Option<u64>) -> AppResult<()> {
    let text = std::fs::read_to_string(spec).at(spec)?;
    let mut scene = parse_scene(&text).at(spec)?;
    if let Some(seed) = seed {
        scene.seed = seed;
    }
    let (events, ground_truth) = generate(&scene)?;
    let format = if text_extension(output) {
        StreamFormat::Text
    } else {
        StreamFormat::Binary
    };
    write_events(output, format, scene.geometry, &events)?;
    let file = File::create(truth).at(truth)?;
    let mut w = BufWriter::new(file);
    write_truth_csv(&mut w, &ground_truth).at(truth)?;
    w.flush().at(truth)?;
    println!(
        "generated {} events, {} vertex tracks over {} us (seed {})",
        events.len(),
        ground_truth.tracks.len(),
        scene.duration_us(),
        scene.seed
    );
    Ok(())
}

fn eval_cmd(
    cfg: &RunConfig,
    labels_path: &Path,
    truth_path: &Path,
    summary_path: Option<&Path>,
    output: &Path,
) -> AppResult<()> {
    let file = File::open(labels_path).at(labels_path)?;
    let (labels, meta) = read_labels_csv(BufReader::new(file)).at(labels_path)?;
    let file = File::open(truth_path).at(truth_path)?;
    let truth = read_truth_csv(BufReader::new(file)).at(truth_path)?;

    let summary_row: Option<StreamSummary> = match summary_path {
        Some(path) => {
            let file = File::open(path).at(path)?;
            let rows = read_summary_csv(BufReader::new(file)).at(path)?;
            let row = rows.iter().find(|(d, _)| *d == meta.detector).map(|(_, s)| *s);
            if row.is_none() {
                return Err(AppError::Data(format!(
                    "{}: no summary row for detector {}",
                    path.display(),
                    meta.detector
                )));
            }
            row
        }
        None => None,
    };

    let corners = corner_events(&labels);
    let cylinders = CylinderParams::default();
    let accuracy = accuracy_cylinders(&corners, &truth, &cylinders)?;
    let tpr_report = tpr(&labels, &truth, &cylinders)?;
    let tracking = nn_track(&corners, &TrackParams::default())?;

    // Reduction: the summary knows exactly which noise labels came from the
    // filters; from labels alone, detector-stage noise is indistinguishable,
    // so every non-noise label counts as signal.
    let (reduction_pct, reduction_basis) = match &summary_row {
        Some(s) => (s.reduction_pct(), "summary"),
        None => {
            let signal = labels
                .iter()
                .filter(|l| l.stage != evcorner::pipeline::StageResult::Noise)
                .count() as u64;
            (
                evcorner::eval::reduction_rate(signal, corners.len() as u64),
                "labels-noise-excluded",
            )
        }
    };

    let row = MetricsRow {
        detector: meta.detector,
        reduction_pct,
        accuracy: accuracy.accuracy,
        tpr_pct: tpr_report.tpr_pct,
        mean_lifetime_ms: tracking.mean_lifetime_ms,
        validity_pct: tracking.validity_pct,
        us_per_event: summary_row.as_ref().map(|s| s.us_per_event()),
        mev_per_s: summary_row.as_ref().map(|s| s.mev_per_s()),
    };
    let notes = vec![
        ("config_hash", meta.config_hash.clone()),
        ("eval_hash", run_hash(cfg, &[("run.eval", "cylinders".into())])),
        (
            "cylinders_px",
            format!("inner={} outer={}", cylinders.inner_px, cylinders.outer_px),
        ),
        (
            "tracking",
            format!(
                "radius_px={} window_us={} min_events>{}",
                TrackParams::default().radius_px,
                TrackParams::default().window_us,
                TrackParams::default().min_events
            ),
        ),
        (
            "tpr_denominator",
            "post-filter signal events inside the inner cylinder".to_string(),
        ),
        ("reduction_basis", reduction_basis.to_string()),
        (
            "wall-clock columns",
            "us_per_event,mev_per_s".to_string(),
        ),
    ];
    let file = File::create(output).at(output)?;
    let mut w = BufWriter::new(file);
    write_metrics_csv(&mut w, &[row], &notes).at(output)?;
    w.flush().at(output)?;
    println!(
        "{}: {} corners, accuracy {}, tpr {}, mean lifetime {:.2} ms, validity {:.1}%",
        meta.detector,
        corners.len(),
        accuracy
            .accuracy
            .map_or("n/a".into(), |v| format!("{v:.3}")),
        tpr_report
            .tpr_pct
            .map_or("n/a".into(), |v| format!("{v:.1}%")),
        tracking.mean_lifetime_ms,
        tracking.validity_pct
    );
    Ok(())
}

fn bench_one(
    cfg: &RunConfig,
    geometry: SensorGeometry,
    events: &[Event],
    detector: DetectorKind,
    runs: usize,
) -> AppResult<(DetectorKind, StreamSummary)> {
    let mut summaries = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut pipeline =
            Pipeline::new(geometry, cfg.pipeline_config(detector, SurfaceChoice::Auto))?;
        summaries.push(pipeline.run_stream(events, |_| {})?);
    }
    summaries.sort_by(|a, b| a.elapsed_us.total_cmp(&b.elapsed_us));
    Ok((detector, summaries[summaries.len() / 2]))
}

fn bench_cmd(
    cfg: &RunConfig,
    input: &Path,
    runs: usize,
    output: Option<&Path>,
    csv: Option<&Path>,
    parallel: bool,
    geometry_flag: Option<SensorGeometry>,
) -> AppResult<()> {
    if runs == 0 {
        return Err(AppError::Usage("--runs must be at least 1".into()));
    }
    let (events, geometry, _) = read_events_auto(input, geometry_flag)?;
    let detectors = DetectorKind::ALL;
    let mut rows: Vec<(DetectorKind, StreamSummary)> = Vec::new();
    if parallel {
        let events_ref: &[Event] = &events;
        let results = std::thread::scope(|scope| {
            let handles: Vec<_> = detectors
                .iter()
                .map(|&d| scope.spawn(move || bench_one(cfg, geometry, events_ref, d, runs)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("benchmark thread panicked"))
                .collect::<Vec<_>>()
        });
        for r in results {
            rows.push(r?);
        }
    } else {
        for &d in &detectors {
            rows.push(bench_one(cfg, geometry, &events, d, runs)?);
        }
    }
    // Fastest first.
    rows.sort_by(|a, b| a.1.us_per_event().total_cmp(&b.1.us_per_event()));
    let hash = run_hash(cfg, &[("run.bench_geometry", geometry.to_string())]);
    let metric_rows: Vec<MetricsRow> = rows
        .iter()
        .map(|(d, s)| MetricsRow {
            detector: *d,
            reduction_pct: s.reduction_pct(),
            accuracy: None,
            tpr_pct: None,
            mean_lifetime_ms: 0.0,
            validity_pct: 0.0,
            us_per_event: Some(s.us_per_event()),
            mev_per_s: Some(s.mev_per_s()),
        })
        .collect();
    let report = bench_report(&metric_rows, &hash, &hardware_string())?;
    match output {
        Some(path) => std::fs::write(path, &report).at(path)?,
        None => print!("{report}"),
    }
    if let Some(path) = csv {
        let file = File::create(path).at(path)?;
        let mut w = BufWriter::new(file);
        write_summary_csv(&mut w, &hash, &rows).at(path)?;
        w.flush().at(path)?;
    }
    if output.is_some() {
        println!(
            "benchmarked {} detectors over {} events x {} runs",
            rows.len(),
            events.len(),
            runs
        );
    }
    Ok(())
}
