//! Detector evaluation: event-count reduction, distance-cylinder accuracy,
//! true-positive rate around ground-truth vertices, greedy nearest-neighbor
//! corner tracking, and benchmark report formatting.
//!
//! Accuracy uses two concentric space-time cylinders around each vertex
//! trajectory: detections within the inner radius are true positives, those
//! between the inner and outer radii are false positives, and anything
//! farther is ignored (too far to attribute to the vertex, too unambiguous
//! to count against it).

use std::io::Write;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::pipeline::{DetectorKind, EventLabel, StageResult};
use crate::synth::GroundTruth;

/// Distance-cylinder radii in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderParams {
    pub inner_px: f64,
    pub outer_px: f64,
}

impl Default for CylinderParams {
    fn default() -> Self {
        CylinderParams {
            inner_px: 3.5,
            outer_px: 5.0,
        }
    }
}

impl CylinderParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_px > 0.0) || !(self.outer_px > self.inner_px) {
            return Err(Error::Config(format!(
                "cylinder radii must satisfy 0 < inner < outer, got {} and {}",
                self.inner_px, self.outer_px
            )));
        }
        Ok(())
    }
}

/// Percentage of events removed between an input and an output stage.
pub fn reduction_rate(input: u64, output: u64) -> f64 {
    if input == 0 {
        0.0
    } else {
        100.0 * (1.0 - output as f64 / input as f64)
    }
}

/// Outcome of scoring detections against vertex trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CylinderAccuracy {
    pub true_positives: u64,
    pub false_positives: u64,
    pub ignored: u64,
    /// `tp / (tp + fp)`, or `None` when no detection fell inside the outer
    /// cylinder.
    pub accuracy: Option<f64>,
}

/// Scores corner detections against ground truth using the two-cylinder
/// rule. Each detection is judged by its distance to the nearest vertex at
/// the detection's own timestamp.
pub fn accuracy_cylinders(
    corners: &[Event],
    truth: &GroundTruth,
    params: &CylinderParams,
) -> Result<CylinderAccuracy> {
    params.validate()?;
    if truth.tracks.is_empty() {
        return Err(Error::Invalid("ground truth has no vertex tracks".into()));
    }
    let mut out = CylinderAccuracy::default();
    for e in corners {
        let d = truth
            .nearest_distance(e.x as f64, e.y as f64, e.t)
            .expect("non-empty truth");
        if d <= params.inner_px {
            out.true_positives += 1;
        } else if d <= params.outer_px {
            out.false_positives += 1;
        } else {
            out.ignored += 1;
        }
    }
    let judged = out.true_positives + out.false_positives;
    if judged > 0 {
        out.accuracy = Some(out.true_positives as f64 / judged as f64);
    }
    Ok(out)
}

/// True-positive rate near vertices.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TprReport {
    /// Corner-labeled events inside the inner cylinder.
    pub corners_near_vertices: u64,
    /// Filter-surviving events inside the inner cylinder (the denominator:
    /// every signal event near a vertex was an opportunity to detect it).
    pub signal_near_vertices: u64,
    pub tpr_pct: Option<f64>,
}

/// Fraction of filter-surviving events near ground-truth vertices that the
/// detector labeled corners. Noise-labeled events dropped by the filters are
/// excluded from the denominator; detector-stage labels of all kinds count.
pub fn tpr(labels: &[EventLabel], truth: &GroundTruth, params: &CylinderParams) -> Result<TprReport> {
    params.validate()?;
    if truth.tracks.is_empty() {
        return Err(Error::Invalid("ground truth has no vertex tracks".into()));
    }
    let mut out = TprReport::default();
    for l in labels {
        if l.stage == StageResult::Noise {
            continue;
        }
        let e = &l.event;
        let d = truth
            .nearest_distance(e.x as f64, e.y as f64, e.t)
            .expect("non-empty truth");
        if d <= params.inner_px {
            out.signal_near_vertices += 1;
            if l.stage == StageResult::Corner {
                out.corners_near_vertices += 1;
            }
        }
    }
    if out.signal_near_vertices > 0 {
        out.tpr_pct =
            Some(100.0 * out.corners_near_vertices as f64 / out.signal_near_vertices as f64);
    }
    Ok(out)
}

/// Greedy nearest-neighbor tracker parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackParams {
    /// Spatial association radius, pixels.
    pub radius_px: f64,
    /// Maximum gap to a trajectory's latest event, microseconds.
    pub window_us: u64,
    /// A trajectory is valid when it holds strictly more events than this.
    pub min_events: usize,
}

impl Default for TrackParams {
    fn default() -> Self {
        TrackParams {
            radius_px: 3.0,
            window_us: 5_000,
            min_events: 10,
        }
    }
}

impl TrackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_px > 0.0) || self.window_us == 0 {
            return Err(Error::Config(
                "tracking needs a positive radius and time window".into(),
            ));
        }
        Ok(())
    }
}

/// One corner trajectory: the chain of associated corner events.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CornerTrajectory {
    /// `(t_us, x, y)` in association order (timestamps non-decreasing).
    pub points: Vec<(u64, u16, u16)>,
}

impl CornerTrajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lifetime_us(&self) -> u64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0,
        }
    }
}

/// Tracking outcome over a corner stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub trajectories: Vec<CornerTrajectory>,
    pub valid_trajectories: u64,
    /// Mean lifetime of valid trajectories, milliseconds (0 when none).
    pub mean_lifetime_ms: f64,
    /// Percentage of corner events that belong to a valid trajectory.
    pub validity_pct: f64,
}

/// Online greedy tracker. Each corner event joins the trajectory whose
/// latest event is within the spatial radius and time window, preferring the
/// smallest distance and breaking ties toward the most recently extended
/// trajectory; otherwise it starts a new one.
#[derive(Debug)]
pub struct NnTracker {
    params: TrackParams,
    trajectories: Vec<CornerTrajectory>,
    /// Indices of trajectories whose latest event may still be in-window.
    active: Vec<usize>,
}

impl NnTracker {
    pub fn new(params: TrackParams) -> Result<Self> {
        params.validate()?;
        Ok(NnTracker {
            params,
            trajectories: Vec::new(),
            active: Vec::new(),
        })
    }

    pub fn push(&mut self, t_us: u64, x: u16, y: u16) {
        let cutoff = t_us.saturating_sub(self.params.window_us);
        let trajectories = &self.trajectories;
        self.active.retain(|&i| trajectories[i].points.last().unwrap().0 >= cutoff);
        let mut best: Option<(f64, u64, usize)> = None;
        for &i in &self.active {
            let &(lt, lx, ly) = self.trajectories[i].points.last().unwrap();
            let d = ((x as f64 - lx as f64).powi(2) + (y as f64 - ly as f64).powi(2)).sqrt();
            if d > self.params.radius_px {
                continue;
            }
            // Smaller distance wins; ties go to the newer trajectory end.
            // `active` is scanned in creation order, so `>=` on equal
            // (distance, time) keys picks the most recently created.
            let better = match best {
                None => true,
                Some((bd, bt, _)) => d < bd || (d == bd && lt >= bt),
            };
            if better {
                best = Some((d, lt, i));
            }
        }
        match best {
            Some((_, _, i)) => self.trajectories[i].points.push((t_us, x, y)),
            None => {
                self.trajectories.push(CornerTrajectory {
                    points: vec![(t_us, x, y)],
                });
                self.active.push(self.trajectories.len() - 1);
            }
        }
    }

    pub fn finish(self) -> TrackReport {
        let params = self.params;
        let trajectories = self.trajectories;
        let mut valid = 0u64;
        let mut lifetime_sum_us = 0u64;
        let mut valid_events = 0u64;
        let mut total_events = 0u64;
        for tr in &trajectories {
            total_events += tr.len() as u64;
            if tr.len() > params.min_events {
                valid += 1;
                lifetime_sum_us += tr.lifetime_us();
                valid_events += tr.len() as u64;
            }
        }
        let mean_lifetime_ms = if valid > 0 {
            lifetime_sum_us as f64 / valid as f64 / 1_000.0
        } else {
            0.0
        };
        let validity_pct = if total_events > 0 {
            100.0 * valid_events as f64 / total_events as f64
        } else {
            0.0
        };
        TrackReport {
            trajectories,
            valid_trajectories: valid,
            mean_lifetime_ms,
            validity_pct,
        }
    }
}

/// Tracks a full corner stream (must be in timestamp order).
pub fn nn_track(corners: &[Event], params: &TrackParams) -> Result<TrackReport> {
    let mut tracker = NnTracker::new(*params)?;
    for e in corners {
        tracker.push(e.t, e.x, e.y);
    }
    Ok(tracker.finish())
}

/// Extracts the corner-labeled events from a label stream.
pub fn corner_events(labels: &[EventLabel]) -> Vec<Event> {
    labels
        .iter()
        .filter(|l| l.stage == StageResult::Corner)
        .map(|l| l.event)
        .collect()
}

/// One detector's evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub detector: DetectorKind,
    pub reduction_pct: f64,
    pub accuracy: Option<f64>,
    pub tpr_pct: Option<f64>,
    pub mean_lifetime_ms: f64,
    pub validity_pct: f64,
    /// Wall-clock cost, if a timing source was provided.
    pub us_per_event: Option<f64>,
    pub mev_per_s: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "nan".into(),
    }
}

/// Writes evaluation metrics as CSV. `notes` become `# key=value` header
/// comments (configuration hash, hardware, run parameters).
pub fn write_metrics_csv<W: Write>(
    mut w: W,
    rows: &[MetricsRow],
    notes: &[(&str, String)],
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Invalid("no metrics rows to write".into()));
    }
    for (k, v) in notes {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(
        w,
        "detector,reduction_pct,accuracy,tpr_pct,mean_lifetime_ms,validity_pct,us_per_event,mev_per_s"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{:.4},{},{},{:.4},{:.4},{},{}",
            r.detector,
            r.reduction_pct,
            fmt_opt(r.accuracy),
            fmt_opt(r.tpr_pct),
            r.mean_lifetime_ms,
            r.validity_pct,
            fmt_opt(r.us_per_event),
            fmt_opt(r.mev_per_s)
        )?;
    }
    Ok(())
}

/// Renders an aligned plain-text benchmark table with per-event cost,
/// throughput and reduction per detector, plus hardware and configuration
/// identification lines.
pub fn bench_report(rows: &[MetricsRow], config_hash: &str, hardware: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Invalid("no benchmark rows to report".into()));
    }
    let mut out = String::new();
    out.push_str(&format!("hardware:    {hardware}\n"));
    out.push_str(&format!("config hash: {config_hash}\n\n"));
    out.push_str(&format!(
        "{:<12} {:>12} {:>10} {:>14}\n",
        "detector", "us/event", "Mev/s", "reduction (%)"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>12} {:>10} {:>14.2}\n",
            r.detector.as_str(),
            fmt_opt(r.us_per_event),
            fmt_opt(r.mev_per_s),
            r.reduction_pct
        ));
    }
    Ok(out)
}

/// Best-effort hardware description for benchmark reports.
pub fn hardware_string() -> String {
    if let Ok(cpuinfo) = std::fs::read_to_string("/proc/cpuinfo") {
        for line in cpuinfo.lines() {
            if let Some((key, value)) = line.split_once(':') {
                if key.trim() == "model name" {
                    return value.trim().to_string();
                }
            }
        }
    }
    format!("{} {}", std::env::consts::ARCH, std::env::consts::OS)
}
