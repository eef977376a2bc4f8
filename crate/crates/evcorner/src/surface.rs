//! Surface of active events: per-cell latest-timestamp grids and local patches.
//!
//! A [`TimeSurface`] keeps, for every (optionally down-sampled) pixel cell, the
//! timestamp of the most recent event that landed there. Cells start at 0
//! (never written) and never decrease. Detectors read fixed-radius square
//! patches centered on the current event; cells outside the frame read as 0,
//! so border cells always look maximally stale.

use crate::error::{Error, Result};
use crate::event::{Event, Polarity, SensorGeometry};

/// Whether a surface keeps one merged grid or one grid per polarity.
///
/// In split mode a polarity-free event updates both grids and patch reads
/// take the cell-wise newest of the two, which collapses to merged behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarityMode {
    Merged,
    Split,
}

/// Latest-timestamp grid, optionally down-sampled and split by polarity.
#[derive(Debug, Clone)]
pub struct TimeSurface {
    geometry: SensorGeometry,
    scale: u32,
    mode: PolarityMode,
    grid_w: usize,
    grid_h: usize,
    /// One grid (merged) or two (split: index 0 = positive, 1 = negative).
    grids: Vec<Vec<u64>>,
}

impl TimeSurface {
    /// `scale` must be 1 (full resolution) or 2 (down-sampled).
    pub fn new(geometry: SensorGeometry, mode: PolarityMode, scale: u32) -> Result<Self> {
        if scale != 1 && scale != 2 {
            return Err(Error::Invalid(format!(
                "surface scale must be 1 or 2, got {scale}"
            )));
        }
        let (grid_w, grid_h) = geometry.scaled_dims(scale);
        let n_grids = match mode {
            PolarityMode::Merged => 1,
            PolarityMode::Split => 2,
        };
        Ok(TimeSurface {
            geometry,
            scale,
            mode,
            grid_w,
            grid_h,
            grids: vec![vec![0u64; grid_w * grid_h]; n_grids],
        })
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn mode(&self) -> PolarityMode {
        self.mode
    }

    /// Grid dimensions (width, height) in cells.
    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_w, self.grid_h)
    }

    /// Grid cell that pixel coordinates map to.
    pub fn cell_of(&self, x: u16, y: u16) -> (usize, usize) {
        (
            x as usize / self.scale as usize,
            y as usize / self.scale as usize,
        )
    }

    fn grid_indices(&self, p: Polarity) -> &'static [usize] {
        match (self.mode, p) {
            (PolarityMode::Merged, _) => &[0],
            (PolarityMode::Split, Polarity::Pos) => &[0],
            (PolarityMode::Split, Polarity::Neg) => &[1],
            // Polarity-free events touch both grids.
            (PolarityMode::Split, Polarity::None) => &[0, 1],
        }
    }

    /// Records an event: the covering cell takes `max(cell, e.t)`, so cells
    /// never decrease. Returns an error for out-of-frame coordinates.
    pub fn update(&mut self, e: &Event) -> Result<()> {
        self.geometry.check_event(e)?;
        let (cx, cy) = self.cell_of(e.x, e.y);
        let idx = cy * self.grid_w + cx;
        for &g in self.grid_indices(e.p) {
            let cell = &mut self.grids[g][idx];
            if e.t > *cell {
                *cell = e.t;
            }
        }
        Ok(())
    }

    /// Latest timestamp in cell `(cx, cy)` for polarity `p` (grid coordinates).
    /// Out-of-grid reads return 0. On a split surface, `Polarity::None` reads
    /// the newest of the two grids.
    pub fn stamp(&self, cx: i64, cy: i64, p: Polarity) -> u64 {
        if cx < 0 || cy < 0 || cx as usize >= self.grid_w || cy as usize >= self.grid_h {
            return 0;
        }
        let idx = cy as usize * self.grid_w + cx as usize;
        self.grid_indices(p)
            .iter()
            .map(|&g| self.grids[g][idx])
            .max()
            .unwrap_or(0)
    }

    /// Fills `patch` with the `(2R+1)x(2R+1)` neighborhood around the event's
    /// cell, read from the grid matching the event's polarity. The event must
    /// already have been applied, so the patch center equals `e.t`.
    pub fn fill_patch(&self, e: &Event, radius: u32, patch: &mut LocalPatch) {
        patch.reset(radius, e.t);
        let (cx, cy) = self.cell_of(e.x, e.y);
        let r = radius as i64;
        let side = patch.side() as i64;
        for dy in -r..=r {
            for dx in -r..=r {
                let v = self.stamp(cx as i64 + dx, cy as i64 + dy, e.p);
                patch.values[((dy + r) * side + (dx + r)) as usize] = v;
            }
        }
    }

    /// Allocating convenience wrapper around [`TimeSurface::fill_patch`].
    pub fn local_patch(&self, e: &Event, radius: u32) -> LocalPatch {
        let mut p = LocalPatch::new(radius);
        self.fill_patch(e, radius, &mut p);
        p
    }
}

/// Square window of surface timestamps centered on the current event's cell.
///
/// `values` is row-major with side `2 * radius + 1`; the center holds the
/// current event's timestamp, every other value is no newer than the center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPatch {
    radius: u32,
    center_t: u64,
    values: Vec<u64>,
}

impl LocalPatch {
    pub fn new(radius: u32) -> Self {
        let side = 2 * radius as usize + 1;
        LocalPatch {
            radius,
            center_t: 0,
            values: vec![0; side * side],
        }
    }

    /// Builds a patch directly from row-major values (tests and tools).
    /// `values.len()` must equal `(2R+1)^2`; the center cell becomes `center_t`.
    pub fn from_values(radius: u32, values: Vec<u64>) -> Result<Self> {
        let side = 2 * radius as usize + 1;
        if values.len() != side * side {
            return Err(Error::Invalid(format!(
                "patch radius {radius} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        let center_t = values[(side * side) / 2];
        Ok(LocalPatch {
            radius,
            center_t,
            values,
        })
    }

    fn reset(&mut self, radius: u32, center_t: u64) {
        let side = 2 * radius as usize + 1;
        self.radius = radius;
        self.center_t = center_t;
        self.values.clear();
        self.values.resize(side * side, 0);
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    /// Timestamp of the current (center) event.
    pub fn center_t(&self) -> u64 {
        self.center_t
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Value at offset `(dx, dy)` from the center; both in `[-R, R]`.
    pub fn get(&self, dx: i32, dy: i32) -> u64 {
        let r = self.radius as i32;
        debug_assert!(dx.abs() <= r && dy.abs() <= r);
        let side = self.side() as i32;
        self.values[((dy + r) * side + (dx + r)) as usize]
    }

    /// Age of offset `(dx, dy)` relative to the center event, in microseconds.
    /// Values newer than the center (possible only for malformed input) clamp to 0.
    pub fn age(&self, dx: i32, dy: i32) -> u64 {
        self.center_t.saturating_sub(self.get(dx, dy))
    }
}
