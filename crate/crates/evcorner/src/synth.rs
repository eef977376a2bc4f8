//! Synthetic scene generator with analytic vertex ground truth.
//!
//! A scene is a set of convex polygons translating and rotating in front of a
//! fixed sensor. Each pixel is sampled over time: whenever a polygon contour
//! crosses the pixel center, the pixel's membership flips and emits an event
//! (positive on entering, negative on leaving). Time steps are chosen so the
//! contour moves at most a quarter pixel per step; crossing times are taken
//! at the step midpoint. Uniform background noise is overlaid by drawing the
//! event count from a Poisson law at the configured per-pixel rate.
//!
//! Because vertex positions follow closed-form rigid motion, the ground truth
//! is exact: vertex trajectories are sampled every millisecond, and
//! [`VertexTrack::pos_at`] interpolates linearly for arbitrary timestamps.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::event::{Event, Polarity, SensorGeometry};

/// Maximum contour travel per membership sampling step, pixels.
const MAX_STEP_TRAVEL_PX: f64 = 0.25;
/// Ground-truth sampling period, microseconds.
pub const TRUTH_SAMPLE_US: u64 = 1_000;

/// A convex polygon moving rigidly: the vertex list gives its pose at t = 0,
/// `velocity` translates it, and `angular_velocity` spins it about the mean
/// of its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    /// Vertex positions at t = 0, pixels. Any winding; at least three
    /// vertices forming a strictly convex polygon.
    pub vertices: Vec<(f64, f64)>,
    /// Pixels per second.
    pub velocity: (f64, f64),
    /// Radians per second, positive toward +y (row-down screen convention).
    pub angular_velocity: f64,
}

/// Full description of a synthetic recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub geometry: SensorGeometry,
    pub duration_s: f64,
    pub shapes: Vec<ShapeSpec>,
    /// Expected events per contour crossing of one pixel.
    pub event_rate: f64,
    /// Noise events per pixel per second.
    pub noise_rate: f64,
    /// Every crossing burst is repeated this many times, 1 microsecond apart.
    pub multiplicity: u32,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(geometry: SensorGeometry, duration_s: f64) -> Self {
        SceneSpec {
            geometry,
            duration_s,
            shapes: Vec::new(),
            event_rate: 1.0,
            noise_rate: 0.1,
            multiplicity: 1,
            seed: 0,
        }
    }

    pub fn duration_us(&self) -> u64 {
        (self.duration_s * 1e6).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Scene("duration must be positive".into()));
        }
        if !(self.event_rate >= 0.0) || !self.event_rate.is_finite() {
            return Err(Error::Scene("event rate must be non-negative".into()));
        }
        if !(self.noise_rate >= 0.0) || !self.noise_rate.is_finite() {
            return Err(Error::Scene("noise rate must be non-negative".into()));
        }
        if self.multiplicity == 0 {
            return Err(Error::Scene("multiplicity must be at least 1".into()));
        }
        if self.shapes.is_empty() && self.noise_rate == 0.0 {
            return Err(Error::Scene("scene has no shapes and no noise".into()));
        }
        for (i, s) in self.shapes.iter().enumerate() {
            validate_shape(s, self.geometry, self.duration_s)
                .map_err(|e| Error::Scene(format!("shape {i}: {e}")))?;
        }
        Ok(())
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn centroid(vertices: &[(f64, f64)]) -> (f64, f64) {
    let n = vertices.len() as f64;
    let (sx, sy) = vertices
        .iter()
        .fold((0.0, 0.0), |(sx, sy), v| (sx + v.0, sy + v.1));
    (sx / n, sy / n)
}

/// Returns the vertices in counter-clockwise order (in x-right/y-down pixel
/// coordinates), or an error if the polygon is not strictly convex.
fn normalized_vertices(vertices: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if vertices.len() < 3 {
        return Err(Error::Scene(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    let n = vertices.len();
    // Signed area via the shoelace formula; positive means the winding
    // matches the cross-product orientation used by the membership test.
    let mut area2 = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        area2 += a.0 * b.1 - b.0 * a.1;
    }
    let mut vs = vertices.to_vec();
    if area2 < 0.0 {
        vs.reverse();
    }
    for i in 0..n {
        let o = vs[i];
        let a = vs[(i + 1) % n];
        let b = vs[(i + 2) % n];
        if cross(o, a, b) <= 0.0 {
            return Err(Error::Scene("polygon is not strictly convex".into()));
        }
    }
    Ok(vs)
}

fn validate_shape(shape: &ShapeSpec, geometry: SensorGeometry, duration_s: f64) -> Result<()> {
    let vs = normalized_vertices(&shape.vertices)?;
    let c0 = centroid(&vs);
    let radius = vs
        .iter()
        .map(|v| ((v.0 - c0.0).powi(2) + (v.1 - c0.1).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    // The polygon stays inside the circle of this radius around its centroid
    // for all rotations; the centroid moves linearly, so checking both
    // endpoints bounds the whole interval.
    for t in [0.0, duration_s] {
        let cx = c0.0 + shape.velocity.0 * t;
        let cy = c0.1 + shape.velocity.1 * t;
        let (w, h) = (geometry.width() as f64 - 1.0, geometry.height() as f64 - 1.0);
        if cx - radius < 0.0 || cx + radius > w || cy - radius < 0.0 || cy + radius > h {
            return Err(Error::Scene(format!(
                "shape leaves the {}x{} frame at t = {t} s",
                geometry.width(),
                geometry.height()
            )));
        }
    }
    Ok(())
}

/// Rigid pose of a shape: vertices in counter-clockwise order plus motion.
struct ShapeMotion {
    base: Vec<(f64, f64)>,
    c0: (f64, f64),
    velocity: (f64, f64),
    omega: f64,
}

impl ShapeMotion {
    fn new(shape: &ShapeSpec) -> Result<Self> {
        let base = normalized_vertices(&shape.vertices)?;
        let c0 = centroid(&base);
        Ok(ShapeMotion {
            base,
            c0,
            velocity: shape.velocity,
            omega: shape.angular_velocity,
        })
    }

    fn centroid_at(&self, t: f64) -> (f64, f64) {
        (
            self.c0.0 + self.velocity.0 * t,
            self.c0.1 + self.velocity.1 * t,
        )
    }

    fn vertex_at(&self, i: usize, t: f64) -> (f64, f64) {
        let (cx, cy) = self.centroid_at(t);
        let (vx, vy) = self.base[i];
        let (dx, dy) = (vx - self.c0.0, vy - self.c0.1);
        let (sin, cos) = (self.omega * t).sin_cos();
        (cx + dx * cos - dy * sin, cy + dx * sin + dy * cos)
    }

    /// Maps a sensor-frame point into the shape's t = 0 frame.
    fn to_base_frame(&self, p: (f64, f64), t: f64) -> (f64, f64) {
        let (cx, cy) = self.centroid_at(t);
        let (dx, dy) = (p.0 - cx, p.1 - cy);
        let (sin, cos) = (-self.omega * t).sin_cos();
        (
            self.c0.0 + dx * cos - dy * sin,
            self.c0.1 + dx * sin + dy * cos,
        )
    }

    /// Boundary-inclusive membership of a sensor-frame point at time t.
    fn contains(&self, p: (f64, f64), t: f64) -> bool {
        let q = self.to_base_frame(p, t);
        let n = self.base.len();
        for i in 0..n {
            if cross(self.base[i], self.base[(i + 1) % n], q) < 0.0 {
                return false;
            }
        }
        true
    }

    /// Max contour speed: translation plus spin at the outermost vertex.
    fn max_speed(&self) -> f64 {
        let radius = self
            .base
            .iter()
            .map(|v| ((v.0 - self.c0.0).powi(2) + (v.1 - self.c0.1).powi(2)).sqrt())
            .fold(0.0f64, f64::max);
        (self.velocity.0.powi(2) + self.velocity.1.powi(2)).sqrt() + self.omega.abs() * radius
    }

    /// Distance from a sensor-frame point to the polygon contour at time t.
    fn contour_distance(&self, p: (f64, f64), t: f64) -> f64 {
        let q = self.to_base_frame(p, t);
        let n = self.base.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.base[i];
            let b = self.base[(i + 1) % n];
            let (abx, aby) = (b.0 - a.0, b.1 - a.1);
            let len2 = abx * abx + aby * aby;
            let u = (((q.0 - a.0) * abx + (q.1 - a.1) * aby) / len2).clamp(0.0, 1.0);
            let (px, py) = (a.0 + u * abx, a.1 + u * aby);
            best = best.min(((q.0 - px).powi(2) + (q.1 - py).powi(2)).sqrt());
        }
        best
    }

    /// Axis-aligned bounding box at time t, expanded by `margin` pixels and
    /// clamped to the frame. Returns pixel index ranges (inclusive).
    fn bbox_at(&self, t: f64, margin: f64, geometry: SensorGeometry) -> (usize, usize, usize, usize) {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 0..self.base.len() {
            let (x, y) = self.vertex_at(i, t);
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        let x0 = ((min_x - margin).floor().max(0.0)) as usize;
        let y0 = ((min_y - margin).floor().max(0.0)) as usize;
        let x1 = ((max_x + margin).ceil() as usize).min(geometry.width() as usize - 1);
        let y1 = ((max_y + margin).ceil() as usize).min(geometry.height() as usize - 1);
        (x0, y0, x1, y1)
    }
}

/// One vertex's trajectory, sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexTrack {
    pub id: u32,
    pub t0_us: u64,
    pub dt_us: u64,
    pub points: Vec<(f64, f64)>,
}

impl VertexTrack {
    /// Position at an arbitrary time, linearly interpolated between samples
    /// and clamped to the track's time span.
    pub fn pos_at(&self, t_us: u64) -> (f64, f64) {
        if self.points.len() == 1 || t_us <= self.t0_us {
            return self.points[0];
        }
        let span = (self.points.len() as u64 - 1) * self.dt_us;
        let rel = (t_us - self.t0_us).min(span);
        let k = (rel / self.dt_us) as usize;
        if k + 1 >= self.points.len() {
            return *self.points.last().unwrap();
        }
        let frac = (rel - k as u64 * self.dt_us) as f64 / self.dt_us as f64;
        let a = self.points[k];
        let b = self.points[k + 1];
        (a.0 + (b.0 - a.0) * frac, a.1 + (b.1 - a.1) * frac)
    }

    pub fn end_us(&self) -> u64 {
        self.t0_us + (self.points.len() as u64 - 1) * self.dt_us
    }
}

/// Analytic vertex trajectories for a generated scene.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub tracks: Vec<VertexTrack>,
}

impl GroundTruth {
    /// Distance from a point to the nearest vertex at the given time.
    pub fn nearest_distance(&self, x: f64, y: f64, t_us: u64) -> Option<f64> {
        self.tracks
            .iter()
            .map(|tr| {
                let (vx, vy) = tr.pos_at(t_us);
                ((x - vx).powi(2) + (y - vy).powi(2)).sqrt()
            })
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Generates the event stream and vertex ground truth for a scene.
///
/// Events are sorted by `(t, y, x, polarity)` and timestamps are
/// non-decreasing; the same seed always yields the identical stream.
pub fn generate(spec: &SceneSpec) -> Result<(Vec<Event>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events: Vec<Event> = Vec::new();
    let duration_us = spec.duration_us();
    let width = spec.geometry.width() as usize;

    let motions: Vec<ShapeMotion> = spec
        .shapes
        .iter()
        .map(ShapeMotion::new)
        .collect::<Result<_>>()?;

    for motion in &motions {
        let speed = motion.max_speed();
        if speed <= 0.0 {
            continue; // static contour: no brightness change, no events
        }
        let step_s = MAX_STEP_TRAVEL_PX / speed;
        let steps = (spec.duration_s / step_s).ceil() as u64;
        let mut inside = vec![false; width * spec.geometry.height() as usize];
        // Initial membership: pixels covered at t = 0 start inside without
        // emitting (the scene begins with the shape already present).
        let (x0, y0, x1, y1) = motion.bbox_at(0.0, 1.0, spec.geometry);
        for y in y0..=y1 {
            for x in x0..=x1 {
                inside[y * width + x] = motion.contains((x as f64, y as f64), 0.0);
            }
        }
        let mut t_prev = 0.0f64;
        for step in 1..=steps {
            let t_cur = (step as f64 / steps as f64) * spec.duration_s;
            let t_mid_us = (((t_prev + t_cur) / 2.0) * 1e6).round() as u64;
            let (ax0, ay0, ax1, ay1) = motion.bbox_at(t_prev, 1.0, spec.geometry);
            let (bx0, by0, bx1, by1) = motion.bbox_at(t_cur, 1.0, spec.geometry);
            let (sx0, sy0) = (ax0.min(bx0), ay0.min(by0));
            let (sx1, sy1) = (ax1.max(bx1), ay1.max(by1));
            for y in sy0..=sy1 {
                for x in sx0..=sx1 {
                    let idx = y * width + x;
                    let now = motion.contains((x as f64, y as f64), t_cur);
                    if now == inside[idx] {
                        continue;
                    }
                    inside[idx] = now;
                    let polarity = if now { Polarity::Pos } else { Polarity::Neg };
                    let whole = spec.event_rate.floor();
                    let frac = spec.event_rate - whole;
                    let mut count = whole as u32;
                    if frac > 0.0 && rng.gen::<f64>() < frac {
                        count += 1;
                    }
                    for rep in 0..count * spec.multiplicity {
                        let t = (t_mid_us + rep as u64).min(duration_us);
                        events.push(Event::new(x as u16, y as u16, t, polarity));
                    }
                }
            }
            t_prev = t_cur;
        }
    }

    // Background noise: total count is Poisson at rate x area x duration.
    let mean_noise =
        spec.noise_rate * spec.geometry.width() as f64 * spec.geometry.height() as f64 * spec.duration_s;
    if mean_noise > 0.0 {
        let n = Poisson::new(mean_noise)
            .map_err(|e| Error::Scene(format!("invalid noise rate: {e}")))?
            .sample(&mut rng) as u64;
        for _ in 0..n {
            let t = rng.gen_range(0..duration_us.max(1));
            let x = rng.gen_range(0..spec.geometry.width());
            let y = rng.gen_range(0..spec.geometry.height());
            let p = if rng.gen_bool(0.5) { Polarity::Pos } else { Polarity::Neg };
            events.push(Event::new(x, y, t, p));
        }
    }

    events.sort_by_key(|e| (e.t, e.y, e.x, e.p.as_i8()));

    // Ground truth: every vertex sampled on the millisecond grid.
    let mut tracks = Vec::new();
    let mut id = 0u32;
    let samples = duration_us / TRUTH_SAMPLE_US + 1;
    for motion in &motions {
        for i in 0..motion.base.len() {
            let points = (0..samples)
                .map(|k| motion.vertex_at(i, (k * TRUTH_SAMPLE_US) as f64 / 1e6))
                .collect();
            tracks.push(VertexTrack {
                id,
                t0_us: 0,
                dt_us: TRUTH_SAMPLE_US,
                points,
            });
            id += 1;
        }
    }

    Ok((events, GroundTruth { tracks }))
}

/// Distance from an event to the nearest shape contour at the event's
/// timestamp (used to validate generated streams).
pub fn contour_distance(spec: &SceneSpec, e: &Event) -> Result<f64> {
    let t = e.t as f64 / 1e6;
    let mut best = f64::INFINITY;
    for shape in &spec.shapes {
        let motion = ShapeMotion::new(shape)?;
        best = best.min(motion.contour_distance((e.x as f64, e.y as f64), t));
    }
    Ok(best)
}

/// Parses a scene description. Top-level `key = value` lines set scene
/// parameters; each `[shape]` section starts a polygon with its own
/// `vertices`, `velocity` and `angular_velocity` keys. Lines starting with
/// `#` and blank lines are ignored. Unknown keys are rejected.
pub fn parse_scene(text: &str) -> Result<SceneSpec> {
    let mut geometry: Option<SensorGeometry> = None;
    let mut duration_s: Option<f64> = None;
    let mut event_rate = 1.0;
    let mut noise_rate = 0.1;
    let mut multiplicity = 1u32;
    let mut seed = 0u64;
    let mut shapes: Vec<ShapeSpec> = Vec::new();
    let mut in_shape = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| Error::Scene(format!("line {line_no}: {msg}"));
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[shape]" {
            shapes.push(ShapeSpec {
                vertices: Vec::new(),
                velocity: (0.0, 0.0),
                angular_velocity: 0.0,
            });
            in_shape = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(err(format!("unknown section {line:?}")));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| err(format!("bad number {v:?}")))
        };
        let parse_pair = |v: &str| -> Result<(f64, f64)> {
            let (a, b) = v
                .split_once(',')
                .ok_or_else(|| err(format!("expected x,y pair, got {v:?}")))?;
            Ok((parse_f64(a.trim())?, parse_f64(b.trim())?))
        };
        if in_shape {
            let shape = shapes.last_mut().unwrap();
            match key {
                "vertices" => {
                    shape.vertices = value
                        .split_whitespace()
                        .map(parse_pair)
                        .collect::<Result<_>>()?;
                }
                "velocity" => shape.velocity = parse_pair(value)?,
                "angular_velocity" => shape.angular_velocity = parse_f64(value)?,
                other => return Err(err(format!("unknown shape key {other:?}"))),
            }
        } else {
            match key {
                "geometry" => {
                    geometry = Some(value.parse().map_err(|e: Error| err(e.to_string()))?)
                }
                "duration_s" => duration_s = Some(parse_f64(value)?),
                "event_rate" => event_rate = parse_f64(value)?,
                "noise_rate" => noise_rate = parse_f64(value)?,
                "multiplicity" => {
                    multiplicity = value
                        .parse()
                        .map_err(|_| err(format!("bad multiplicity {value:?}")))?
                }
                "seed" => {
                    seed = value.parse().map_err(|_| err(format!("bad seed {value:?}")))?
                }
                other => return Err(err(format!("unknown scene key {other:?}"))),
            }
        }
    }

    let geometry = geometry.ok_or_else(|| Error::Scene("missing geometry".into()))?;
    let duration_s = duration_s.ok_or_else(|| Error::Scene("missing duration_s".into()))?;
    let spec = SceneSpec {
        geometry,
        duration_s,
        shapes,
        event_rate,
        noise_rate,
        multiplicity,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Writes ground truth as CSV: `vertex_id,t_us,x,y` with six decimals.
pub fn write_truth_csv<W: Write>(mut w: W, truth: &GroundTruth) -> Result<()> {
    writeln!(w, "vertex_id,t_us,x,y")?;
    for tr in &truth.tracks {
        for (k, (x, y)) in tr.points.iter().enumerate() {
            writeln!(w, "{},{},{x:.6},{y:.6}", tr.id, tr.t0_us + k as u64 * tr.dt_us)?;
        }
    }
    Ok(())
}

/// Reads ground truth written by [`write_truth_csv`]. Samples of each vertex
/// must be uniformly spaced in time.
pub fn read_truth_csv<R: BufRead>(r: R) -> Result<GroundTruth> {
    let mut rows: BTreeMap<u32, Vec<(u64, f64, f64)>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("vertex_id,") {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            line: i + 1,
            offset: 0,
            msg,
        };
        let f: Vec<&str> = trimmed.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, got {}", f.len())));
        }
        let id: u32 = f[0].parse().map_err(|_| parse_err(format!("bad vertex_id {:?}", f[0])))?;
        let t: u64 = f[1].parse().map_err(|_| parse_err(format!("bad t_us {:?}", f[1])))?;
        let x: f64 = f[2].parse().map_err(|_| parse_err(format!("bad x {:?}", f[2])))?;
        let y: f64 = f[3].parse().map_err(|_| parse_err(format!("bad y {:?}", f[3])))?;
        rows.entry(id).or_default().push((t, x, y));
    }
    let mut tracks = Vec::new();
    for (id, mut samples) in rows {
        samples.sort_by_key(|s| s.0);
        let t0_us = samples[0].0;
        let dt_us = if samples.len() > 1 {
            samples[1].0 - t0_us
        } else {
            TRUTH_SAMPLE_US
        };
        if dt_us == 0 {
            return Err(Error::Scene(format!("vertex {id}: duplicate sample times")));
        }
        for (k, s) in samples.iter().enumerate() {
            if s.0 != t0_us + k as u64 * dt_us {
                return Err(Error::Scene(format!(
                    "vertex {id}: samples are not uniformly spaced"
                )));
            }
        }
        tracks.push(VertexTrack {
            id,
            t0_us,
            dt_us,
            points: samples.into_iter().map(|(_, x, y)| (x, y)).collect(),
        });
    }
    if tracks.is_empty() {
        return Err(Error::Scene("ground truth has no vertex samples".into()));
    }
    Ok(GroundTruth { tracks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(240, 180).unwrap()
    }

    fn square(cx: f64, cy: f64, half: f64) -> Vec<(f64, f64)> {
        vec![
            (cx - half, cy - half),
            (cx + half, cy - half),
            (cx + half, cy + half),
            (cx - half, cy + half),
        ]
    }

    fn moving_square_scene() -> SceneSpec {
        let mut spec = SceneSpec::new(geom(), 0.5);
        spec.noise_rate = 0.0;
        spec.shapes.push(ShapeSpec {
            vertices: square(60.0, 90.0, 25.0),
            velocity: (100.0, 0.0),
            angular_velocity: 0.0,
        });
        spec
    }

    #[test]
    fn convexity_is_required() {
        let mut spec = SceneSpec::new(geom(), 1.0);
        spec.shapes.push(ShapeSpec {
            // A dart (concave quadrilateral).
            vertices: vec![(50.0, 50.0), (90.0, 60.0), (55.0, 62.0), (60.0, 90.0)],
            velocity: (0.0, 0.0),
            angular_velocity: 1.0,
        });
        assert!(matches!(spec.validate(), Err(Error::Scene(_))));
    }

    #[test]
    fn winding_does_not_matter() {
        let mut cw = square(60.0, 90.0, 20.0);
        cw.reverse();
        let vs = normalized_vertices(&cw).unwrap();
        assert_eq!(vs, square(60.0, 90.0, 20.0));
    }

    #[test]
    fn shapes_must_stay_in_frame() {
        let mut spec = moving_square_scene();
        spec.duration_s = 3.0; // 60 + 300 px puts the square past x = 239
        assert!(matches!(spec.validate(), Err(Error::Scene(_))));
    }

    #[test]
    fn static_scene_emits_no_events() {
        let mut spec = moving_square_scene();
        spec.shapes[0].velocity = (0.0, 0.0);
        // Pair the static square with a moving one so the scene still has a
        // signal source; only the moving square may emit.
        spec.noise_rate = 0.0;
        spec.shapes.push(ShapeSpec {
            vertices: square(160.0, 90.0, 10.0),
            velocity: (20.0, 0.0),
            angular_velocity: 0.0,
        });
        let (events, _) = generate(&spec).unwrap();
        // All events come from the moving square on the right.
        assert!(!events.is_empty());
        assert!(events.iter().all(|e| e.x > 100));
    }

    #[test]
    fn timestamps_are_sorted_and_bounded() {
        let mut spec = moving_square_scene();
        spec.noise_rate = 0.5;
        let (events, _) = generate(&spec).unwrap();
        assert!(!events.is_empty());
        for w in events.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
        assert!(events.iter().all(|e| e.t <= spec.duration_us()));
        assert!(events.iter().all(|e| spec.geometry.contains(e.x, e.y)));
    }

    #[test]
    fn leading_edge_is_positive_trailing_negative() {
        let spec = moving_square_scene();
        let (events, _) = generate(&spec).unwrap();
        // The square moves in +x: pixels ahead of the center enter (positive
        // polarity), pixels behind leave (negative).
        for e in &events {
            let t = e.t as f64 / 1e6;
            let cx = 60.0 + 100.0 * t;
            if e.p == Polarity::Pos {
                assert!(
                    e.x as f64 > cx,
                    "positive event at x={} behind center {cx:.2}",
                    e.x
                );
            } else {
                assert!(
                    (e.x as f64) < cx,
                    "negative event at x={} ahead of center {cx:.2}",
                    e.x
                );
            }
        }
    }

    #[test]
    fn shape_events_lie_on_the_contour() {
        let mut spec = moving_square_scene();
        spec.shapes[0].angular_velocity = 1.5;
        spec.shapes[0].vertices = vec![(60.0, 70.0), (85.0, 90.0), (60.0, 110.0), (40.0, 90.0)];
        let (events, _) = generate(&spec).unwrap();
        assert!(!events.is_empty());
        for e in events.iter().step_by(7) {
            let d = contour_distance(&spec, e).unwrap();
            assert!(d <= 1.0, "event {e:?} is {d:.3} px from the contour");
        }
    }

    #[test]
    fn truth_tracks_follow_rigid_motion() {
        let mut spec = moving_square_scene();
        spec.shapes[0].angular_velocity = 2.0;
        let (_, truth) = generate(&spec).unwrap();
        assert_eq!(truth.tracks.len(), 4);
        let motion = ShapeMotion::new(&spec.shapes[0]).unwrap();
        for (i, tr) in truth.tracks.iter().enumerate() {
            // Interpolated positions match the closed form mid-sample too.
            for &t_us in &[0u64, 1_500, 250_000, 499_999, 500_000] {
                let (ex, ey) = motion.vertex_at(i, t_us as f64 / 1e6);
                let (gx, gy) = tr.pos_at(t_us);
                let err = ((ex - gx).powi(2) + (ey - gy).powi(2)).sqrt();
                // 1 ms of linear interpolation under rotation at ~35 px
                // radius stays well under a tenth of a pixel.
                assert!(err < 0.1, "vertex {i} at {t_us} us off by {err}");
            }
        }
    }

    #[test]
    fn pos_at_clamps_outside_the_span() {
        let tr = VertexTrack {
            id: 0,
            t0_us: 1_000,
            dt_us: 1_000,
            points: vec![(10.0, 20.0), (11.0, 20.0)],
        };
        assert_eq!(tr.pos_at(0), (10.0, 20.0));
        assert_eq!(tr.pos_at(1_500), (10.5, 20.0));
        assert_eq!(tr.pos_at(9_000), (11.0, 20.0));
        assert_eq!(tr.end_us(), 2_000);
    }

    #[test]
    fn noise_count_matches_the_configured_rate() {
        let mut spec = SceneSpec::new(geom(), 1.0);
        spec.noise_rate = 0.1;
        let expected = 0.1 * 240.0 * 180.0;
        let mut total = 0usize;
        for seed in 0..3 {
            spec.seed = seed;
            let (events, _) = generate(&spec).unwrap();
            total += events.len();
        }
        let mean = total as f64 / 3.0;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "mean noise count {mean} vs expected {expected}"
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let mut spec = moving_square_scene();
        spec.noise_rate = 0.2;
        spec.event_rate = 1.3;
        let (a, ta) = generate(&spec).unwrap();
        let (b, tb) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        spec.seed = 99;
        let (c, _) = generate(&spec).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn multiplicity_scales_the_stream() {
        let spec1 = moving_square_scene();
        let mut spec3 = moving_square_scene();
        spec3.multiplicity = 3;
        let (a, _) = generate(&spec1).unwrap();
        let (b, _) = generate(&spec3).unwrap();
        assert_eq!(b.len(), 3 * a.len());
    }

    #[test]
    fn scene_text_round_trip() {
        let text = "\
# demo scene
geometry = 240x180
duration_s = 0.5
noise_rate = 0.05
event_rate = 1.0
multiplicity = 2
seed = 42

[shape]
vertices = 35,65 85,65 85,115 35,115
velocity = 100,0
angular_velocity = 0.5
";
        let spec = parse_scene(text).unwrap();
        assert_eq!(spec.geometry, geom());
        assert_eq!(spec.duration_s, 0.5);
        assert_eq!(spec.multiplicity, 2);
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.shapes.len(), 1);
        assert_eq!(spec.shapes[0].vertices.len(), 4);
        assert_eq!(spec.shapes[0].velocity, (100.0, 0.0));
    }

    #[test]
    fn unknown_scene_keys_are_rejected() {
        let text = "geometry = 240x180\nduration_s = 1.0\nspeed = 3\n";
        let err = parse_scene(text).unwrap_err();
        assert!(err.to_string().contains("unknown scene key"));
        let text = "geometry = 240x180\nduration_s = 1.0\n[shape]\ncolor = red\n";
        let err = parse_scene(text).unwrap_err();
        assert!(err.to_string().contains("unknown shape key"));
    }

    #[test]
    fn truth_csv_round_trip() {
        let (_, truth) = generate(&moving_square_scene()).unwrap();
        let mut buf = Vec::new();
        write_truth_csv(&mut buf, &truth).unwrap();
        let back = read_truth_csv(buf.as_slice()).unwrap();
        assert_eq!(back.tracks.len(), truth.tracks.len());
        for (a, b) in back.tracks.iter().zip(truth.tracks.iter()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.dt_us, b.dt_us);
            assert_eq!(a.points.len(), b.points.len());
            for (pa, pb) in a.points.iter().zip(b.points.iter()) {
                assert!((pa.0 - pb.0).abs() < 1e-5);
                assert!((pa.1 - pb.1).abs() < 1e-5);
            }
        }
    }
}
