//! eSUSAN corner test: nested-disc recency counts with per-disc bands.
//!
//! Around the current event, three concentric integer-lattice discs of
//! squared radius 5, 10 and 17 (21, 37 and 57 cells — each disc contains the
//! smaller ones and the center) are scanned on the time surface. A cell is
//! *similar* iff its age relative to the event is within the adaptive
//! threshold; the similar-cell count per disc is the USAN (univalue segment
//! assimilating nucleus) size at that scale.
//!
//! A moving straight edge keeps roughly half of every disc recent — the
//! closed half-disc counts are exactly (13, 22, 33) — while a convex corner
//! keeps noticeably less than half, e.g. a closed quadrant gives (8, 13, 19).
//! Classification therefore brackets each count: a corner must sit inside
//! `[g_noise_r, g_r]` at *all three* scales; a count below the noise floor at
//! the largest scale means an isolated (noise) event; everything else is edge
//! or texture. Requiring all three scales to agree suppresses patterns that
//! mimic a corner at one scale only.

use crate::error::{Error, Result};
use crate::surface::LocalPatch;

/// Patch radius the masks require: offsets reach `|u| <= 4`.
pub const KERNEL_RADIUS: u32 = 4;
/// Squared-radius cutoffs of the three nested discs.
pub const DISC_RADIUS_SQ: [i32; 3] = [5, 10, 17];
/// Cell counts of the three discs (center included).
pub const DISC_CARDINALITY: [u32; 3] = [21, 37, 57];
/// Similar-cell counts of an ideal straight edge (closed half-disc per scale);
/// corner bands must stay below these.
pub const EDGE_COUNTS: [u32; 3] = [13, 22, 33];

/// Offsets of the three nested discs, each tagged with the innermost disc
/// (0, 1 or 2) containing it. Offsets are in deterministic row-major order.
#[derive(Debug, Clone)]
pub struct KernelMasks {
    offsets: Vec<(i8, i8, u8)>,
}

impl KernelMasks {
    /// Enumerates the lattice discs. The construction is a plain distance
    /// scan; see the tests for an independent cardinality check.
    pub fn build() -> Self {
        let r = KERNEL_RADIUS as i8;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let d2 = (dx as i32).pow(2) + (dy as i32).pow(2);
                if let Some(disc) = DISC_RADIUS_SQ.iter().position(|&c| d2 <= c) {
                    offsets.push((dx, dy, disc as u8));
                }
            }
        }
        KernelMasks { offsets }
    }

    /// All offsets of the outermost disc with their innermost-disc tag.
    pub fn offsets(&self) -> &[(i8, i8, u8)] {
        &self.offsets
    }

    /// Offsets belonging to disc `r` (cumulative: disc 2 is the full set).
    pub fn disc(&self, r: usize) -> impl Iterator<Item = (i8, i8)> + '_ {
        self.offsets
            .iter()
            .filter(move |&&(_, _, d)| (d as usize) <= r)
            .map(|&(dx, dy, _)| (dx, dy))
    }

    pub fn cardinalities(&self) -> [u32; 3] {
        let mut counts = [0u32; 3];
        for &(_, _, d) in &self.offsets {
            counts[d as usize] += 1;
        }
        [
            counts[0],
            counts[0] + counts[1],
            counts[0] + counts[1] + counts[2],
        ]
    }
}

impl Default for KernelMasks {
    fn default() -> Self {
        KernelMasks::build()
    }
}

/// Similar-cell counts for the three nested discs; `n1 <= n2 <= n3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UsanCounts {
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
}

impl UsanCounts {
    pub fn as_array(&self) -> [u32; 3] {
        [self.n1, self.n2, self.n3]
    }
}

/// Per-disc corner band `[g_noise_r, g_r]`.
///
/// Defaults follow the disc geometry: the noise floor is one eighth of the
/// disc size and the upper bound sits between half the disc and the straight-
/// edge count, so corners (well under half a disc similar) pass while edges
/// (about half) and flat motion (nearly everything similar) fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometricThresholds {
    /// Upper bounds per disc; a corner needs `n_r <= g_r`.
    pub g: [u32; 3],
    /// Noise floors per disc; a corner needs `n_r >= g_noise_r`.
    pub g_noise: [u32; 3],
}

impl Default for GeometricThresholds {
    fn default() -> Self {
        GeometricThresholds {
            g: [12, 20, 31],
            g_noise: [3, 5, 8],
        }
    }
}

impl GeometricThresholds {
    /// Bands must be ordered and anchored to the disc geometry:
    /// `disc/8 <= g_noise_r < g_r <= edge_count_r` for every disc.
    pub fn validate(&self) -> Result<()> {
        for r in 0..3 {
            if 8 * self.g_noise[r] < DISC_CARDINALITY[r] {
                return Err(Error::Config(format!(
                    "esusan.g_noise[{r}] = {} is below 1/8 of disc size {}",
                    self.g_noise[r], DISC_CARDINALITY[r]
                )));
            }
            if self.g_noise[r] >= self.g[r] {
                return Err(Error::Config(format!(
                    "esusan thresholds disc {r}: noise floor {} must be below upper bound {}",
                    self.g_noise[r], self.g[r]
                )));
            }
            if self.g[r] > EDGE_COUNTS[r] {
                return Err(Error::Config(format!(
                    "esusan.g[{r}] = {} exceeds the straight-edge count {}",
                    self.g[r], EDGE_COUNTS[r]
                )));
            }
        }
        Ok(())
    }
}

/// Event-class decision of the nested-disc test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Corner,
    Edge,
    Noise,
}

/// True iff the cell at offset `(dx, dy)` is similar to the center event:
/// its age is within the threshold. Ages exactly at the threshold count.
/// Border (zero-filled) cells are maximally stale and never count.
pub fn usan_membership(patch: &LocalPatch, dx: i32, dy: i32, tgf_us: f64) -> bool {
    patch.age(dx, dy) as f64 <= tgf_us
}

/// Similar-cell counts over the three nested discs.
pub fn usan_counts(patch: &LocalPatch, masks: &KernelMasks, tgf_us: f64) -> UsanCounts {
    debug_assert!(patch.radius() >= KERNEL_RADIUS);
    let mut per_disc = [0u32; 3];
    for &(dx, dy, disc) in masks.offsets() {
        if usan_membership(patch, dx as i32, dy as i32, tgf_us) {
            per_disc[disc as usize] += 1;
        }
    }
    UsanCounts {
        n1: per_disc[0],
        n2: per_disc[0] + per_disc[1],
        n3: per_disc[0] + per_disc[1] + per_disc[2],
    }
}

/// Applies the per-disc bands: corner iff every count lies inside its band;
/// noise iff the outermost count is below its noise floor; otherwise edge.
pub fn classify_corner(counts: &UsanCounts, thresholds: &GeometricThresholds) -> Classification {
    let n = counts.as_array();
    let corner = (0..3).all(|r| thresholds.g_noise[r] <= n[r] && n[r] <= thresholds.g[r]);
    if corner {
        Classification::Corner
    } else if counts.n3 < thresholds.g_noise[2] {
        Classification::Noise
    } else {
        Classification::Edge
    }
}
