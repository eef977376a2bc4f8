//! Time-surface normalization schemes.
//!
//! Raw surface patches hold microsecond timestamps, which drift upward forever
//! and cannot feed a gradient-based scorer directly. Each scheme here maps a
//! [`LocalPatch`] to a [`NormalizedPatch`] of floats where "newer" means
//! "larger", with the current (center) event at the scheme's maximum:
//!
//! * `minmax`     — affine rescale of timestamps to `[0, 1]`.
//! * `window`     — 1 inside a fixed age window, else 0.
//! * `linear`     — linear decay from 1 to 0 over a fixed age window.
//! * `exp`        — exponential decay `exp(-tau_e * age)`.
//! * `binary`     — the `n` newest cells are 1, all others 0.
//! * `sorted`     — cells replaced by their recency rank (oldest = 0).
//! * `aed`        — adaptive exponential decay `exp(-x^6)` with
//!   `x = age / (tau * TGF)`, served from a lookup table so the per-event cost
//!   is one interpolation. The sixth power makes the kernel nearly flat for
//!   fresh cells and nearly zero past the threshold, and tying the scale to
//!   the adaptive threshold keeps one parameter set valid across scene speeds.
//! * SITS ([`SitsSurface`]) — an event-count surface updated per event rather
//!   than a patch transform: neighborhood cells above the event's own previous
//!   value decay by 1 and the event's cell jumps to the maximum `(2R+1)^2`.
//!
//! `binary` and `sorted` share one recency order: newer timestamp first, ties
//! broken toward the smaller row-major index. Equal timestamps therefore get
//! consecutive ranks in row-major order, and the `n` newest cells under
//! `binary` are exactly the cells with rank `>= side^2 - n` under `sorted`.

use crate::error::{Error, Result};
use crate::event::{Event, SensorGeometry};
use crate::surface::LocalPatch;

/// Patch of normalized values, row-major, same layout as [`LocalPatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPatch {
    radius: u32,
    values: Vec<f64>,
}

impl NormalizedPatch {
    fn new(radius: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), (2 * radius as usize + 1).pow(2));
        NormalizedPatch { radius, values }
    }

    /// Builds a patch from row-major values; `values.len()` must be `(2R+1)^2`.
    pub fn from_values(radius: u32, values: Vec<f64>) -> Result<Self> {
        let side = 2 * radius as usize + 1;
        if values.len() != side * side {
            return Err(Error::Invalid(format!(
                "normalized patch radius {radius} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        Ok(NormalizedPatch { radius, values })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at offset `(dx, dy)` from the center.
    pub fn get(&self, dx: i32, dy: i32) -> f64 {
        let r = self.radius as i32;
        debug_assert!(dx.abs() <= r && dy.abs() <= r);
        self.values[((dy + r) * (2 * r + 1) + (dx + r)) as usize]
    }

    pub fn center(&self) -> f64 {
        self.values[self.values.len() / 2]
    }
}

/// Rescales timestamps to `[0, 1]` by the patch minimum and maximum.
/// A flat patch (max == min) maps to all ones.
pub fn normalize_minmax(patch: &LocalPatch) -> NormalizedPatch {
    let min = patch.values().iter().copied().min().unwrap_or(0);
    let max = patch.values().iter().copied().max().unwrap_or(0);
    let values = if max == min {
        vec![1.0; patch.values().len()]
    } else {
        let span = (max - min) as f64;
        patch
            .values()
            .iter()
            .map(|&v| (v - min) as f64 / span)
            .collect()
    };
    NormalizedPatch::new(patch.radius(), values)
}

/// 1 for cells no older than `tau_us`, else 0.
pub fn normalize_time_window(patch: &LocalPatch, tau_us: u64) -> NormalizedPatch {
    let t_i = patch.center_t();
    let values = patch
        .values()
        .iter()
        .map(|&v| if t_i.saturating_sub(v) <= tau_us { 1.0 } else { 0.0 })
        .collect();
    NormalizedPatch::new(patch.radius(), values)
}

/// Linear decay from 1 (age 0) to 0 (age `tau_us`); older cells are 0.
pub fn normalize_linear(patch: &LocalPatch, tau_us: u64) -> NormalizedPatch {
    let t_i = patch.center_t();
    let tau = tau_us as f64;
    let values = patch
        .values()
        .iter()
        .map(|&v| {
            let age = t_i.saturating_sub(v);
            if age <= tau_us {
                1.0 - age as f64 / tau
            } else {
                0.0
            }
        })
        .collect();
    NormalizedPatch::new(patch.radius(), values)
}

/// Exponential decay `exp(-tau_e * age_us)`; `tau_e` is per microsecond.
pub fn normalize_exp(patch: &LocalPatch, tau_e_per_us: f64) -> NormalizedPatch {
    let t_i = patch.center_t();
    let values = patch
        .values()
        .iter()
        .map(|&v| (-tau_e_per_us * t_i.saturating_sub(v) as f64).exp())
        .collect();
    NormalizedPatch::new(patch.radius(), values)
}

/// Indices of all patch cells ordered newest first (ties toward the smaller
/// row-major index).
fn recency_order(values: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// The `n_latest` newest cells become 1, all others 0.
pub fn normalize_binary(patch: &LocalPatch, n_latest: usize) -> NormalizedPatch {
    let order = recency_order(patch.values());
    let mut values = vec![0.0; patch.values().len()];
    for &i in order.iter().take(n_latest) {
        values[i] = 1.0;
    }
    NormalizedPatch::new(patch.radius(), values)
}

/// Cells replaced by their recency rank: oldest cell 0, newest `side^2 - 1`.
pub fn normalize_sorted(patch: &LocalPatch) -> NormalizedPatch {
    let order = recency_order(patch.values());
    let n = order.len();
    let mut values = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        values[i] = (n - 1 - pos) as f64;
    }
    NormalizedPatch::new(patch.radius(), values)
}

/// Precomputed table of `exp(-x^6)` sampled at bucket midpoints.
///
/// `entry(k) = exp(-x_k^6)` with `x_k = (k + 0.5) * max_ratio / resolution`;
/// lookups interpolate linearly between adjacent entries, clamp to 1 at
/// `x <= 0` and to 0 at `x >= max_ratio`. The sixth power is computed as
/// `(x^2)^3`. With the default resolution the table stays within `1e-3` of
/// direct evaluation everywhere (interpolation error is ~4e-6; piecewise-
/// constant reads would exceed the budget near the steep flank at x ~ 1).
#[derive(Debug, Clone)]
pub struct AedLookupTable {
    resolution: usize,
    max_ratio: f64,
    tau: f64,
    entries: Vec<f64>,
}

pub const AED_DEFAULT_RESOLUTION: usize = 1024;
pub const AED_DEFAULT_MAX_RATIO: f64 = 2.0;
pub const AED_DEFAULT_TAU: f64 = 1.0;
/// Coarser tables would let the interpolation error through the `1e-3` cap.
pub const AED_MIN_RESOLUTION: usize = 256;

impl Default for AedLookupTable {
    fn default() -> Self {
        AedLookupTable::build(AED_DEFAULT_RESOLUTION, AED_DEFAULT_MAX_RATIO, AED_DEFAULT_TAU)
            .expect("default table parameters are valid")
    }
}

impl AedLookupTable {
    /// `resolution >= 256` keeps the interpolation error well inside `1e-3`.
    pub fn build(resolution: usize, max_ratio: f64, tau: f64) -> Result<Self> {
        if resolution < AED_MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "aed.table_resolution must be >= {AED_MIN_RESOLUTION}, got {resolution}"
            )));
        }
        if !(max_ratio > 0.0) || !max_ratio.is_finite() {
            return Err(Error::Config(format!(
                "aed.max_ratio must be positive, got {max_ratio}"
            )));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Config(format!("aed.tau must be positive, got {tau}")));
        }
        let width = max_ratio / resolution as f64;
        let mut entries = Vec::with_capacity(resolution);
        for k in 0..resolution {
            let x = (k as f64 + 0.5) * width;
            let x2 = x * x;
            entries.push((-(x2 * x2 * x2)).exp());
        }
        // The analytic kernel is non-increasing; clamp out any rounding blips
        // so the table is non-increasing by construction.
        for k in 1..resolution {
            if entries[k] > entries[k - 1] {
                entries[k] = entries[k - 1];
            }
        }
        Ok(AedLookupTable {
            resolution,
            max_ratio,
            tau,
            entries,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Kernel value at normalized age `x = age / (tau * TGF)`.
    pub fn lookup_ratio(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= self.max_ratio {
            return 0.0;
        }
        let width = self.max_ratio / self.resolution as f64;
        let pos = x / width - 0.5;
        if pos <= 0.0 {
            return self.entries[0];
        }
        let k = pos as usize;
        if k + 1 >= self.resolution {
            return self.entries[self.resolution - 1];
        }
        let f = pos - k as f64;
        self.entries[k] + (self.entries[k + 1] - self.entries[k]) * f
    }

    /// Kernel value for a raw age in microseconds under threshold `tgf_us`.
    pub fn lookup_age(&self, age_us: f64, tgf_us: f64) -> f64 {
        self.lookup_ratio(age_us / (self.tau * tgf_us))
    }
}

/// Adaptive exponential decay of a patch: `exp(-((age / (tau * tgf))^6))`
/// via the lookup table. Requires a positive threshold.
pub fn normalize_aed(
    patch: &LocalPatch,
    tgf_us: f64,
    table: &AedLookupTable,
) -> Result<NormalizedPatch> {
    if !(tgf_us > 0.0) || !tgf_us.is_finite() {
        return Err(Error::Invalid(format!(
            "aed normalization needs a positive threshold, got {tgf_us}"
        )));
    }
    let t_i = patch.center_t();
    let inv = 1.0 / (table.tau * tgf_us);
    let values = patch
        .values()
        .iter()
        .map(|&v| table.lookup_ratio(t_i.saturating_sub(v) as f64 * inv))
        .collect();
    Ok(NormalizedPatch::new(patch.radius(), values))
}

/// Speed-invariant event-count surface.
///
/// Every cell holds a count in `[0, (2R+1)^2]`. On each event, neighborhood
/// cells strictly above the event pixel's previous value decay by one, then
/// the event's cell is set to the maximum. Cell values thereby encode recency
/// rank rather than time, so the surface looks the same at any object speed.
#[derive(Debug, Clone)]
pub struct SitsSurface {
    geometry: SensorGeometry,
    radius: u32,
    values: Vec<u32>,
}

impl SitsSurface {
    pub fn new(geometry: SensorGeometry, radius: u32) -> Self {
        SitsSurface {
            geometry,
            radius,
            values: vec![0; geometry.width() as usize * geometry.height() as usize],
        }
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Largest value a cell can hold: `(2R+1)^2`.
    pub fn max_value(&self) -> u32 {
        (2 * self.radius + 1).pow(2)
    }

    pub fn get(&self, x: u16, y: u16) -> u32 {
        self.values[y as usize * self.geometry.width() as usize + x as usize]
    }

    pub fn update(&mut self, e: &Event) -> Result<()> {
        self.geometry.check_event(e)?;
        let w = self.geometry.width() as i64;
        let h = self.geometry.height() as i64;
        let (ex, ey) = (e.x as i64, e.y as i64);
        let before = self.values[(ey * w + ex) as usize];
        let r = self.radius as i64;
        for y in (ey - r).max(0)..=(ey + r).min(h - 1) {
            for x in (ex - r).max(0)..=(ex + r).min(w - 1) {
                let cell = &mut self.values[(y * w + x) as usize];
                if *cell > before {
                    *cell -= 1;
                }
            }
        }
        self.values[(ey * w + ex) as usize] = self.max_value();
        Ok(())
    }

    /// Normalized view of the `(2R+1)^2` neighborhood of a pixel, out-of-frame
    /// cells read as 0.
    pub fn patch(&self, x: u16, y: u16) -> NormalizedPatch {
        let r = self.radius as i64;
        let w = self.geometry.width() as i64;
        let h = self.geometry.height() as i64;
        let side = (2 * r + 1) as usize;
        let mut values = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                let (cx, cy) = (x as i64 + dx, y as i64 + dy);
                values.push(if cx < 0 || cy < 0 || cx >= w || cy >= h {
                    0.0
                } else {
                    self.values[(cy * w + cx) as usize] as f64
                });
            }
        }
        NormalizedPatch::new(self.radius, values)
    }
}
