//! Adaptive time threshold (TGF) and the event-stream filters built on it.
//!
//! The threshold tracks scene activity: over each accumulation interval of
//! `td_us` microseconds the stream's event count `N_e` is gathered, and at the
//! interval boundary the threshold moves to
//!
//! ```text
//! TGF_j = 0.05 * TGF_{j-1} + 0.95 * T_c / (lambda * N_e)
//! T_c   = td_us * width * height / s^2
//! ```
//!
//! so a constant event rate settles at the fixed point `T_c / (lambda * N_e)`,
//! and halving the rate doubles the steady-state threshold. The first interval
//! has no smoothing history and adopts its raw value directly. `lambda` is a
//! scene-texture factor (>= 1): busier, more textured scenes use larger values
//! to keep the threshold tight.
//!
//! Two filters consume the threshold:
//!
//! * [`GfFilter`] — background-activity test on an `s x s` down-sampled grid:
//!   an event is signal iff its cell fired before and no longer than the
//!   current threshold ago. The cell is refreshed either way.
//! * [`RefractoryFilter`] — per-pixel, same-polarity dead time: drops an event
//!   whose predecessor at the pixel is closer than a fixed period.

use crate::error::{Error, Result};
use crate::event::{Event, SensorGeometry};
use crate::surface::{PolarityMode, TimeSurface};

/// Weight kept from the previous threshold at each interval boundary.
pub const SMOOTH_KEEP: f64 = 0.05;
/// Weight of the freshly measured value at each interval boundary.
pub const SMOOTH_NEW: f64 = 0.95;

/// Parameters of the adaptive threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TgfConfig {
    /// Accumulation interval in microseconds.
    pub td_us: u64,
    /// Scene-texture factor, dimensionless, >= 1.
    pub lambda: f64,
    /// Down-sampling window side in pixels (1 or 2); also scales `T_c`.
    pub s: u32,
}

impl Default for TgfConfig {
    fn default() -> Self {
        TgfConfig {
            td_us: 10_000,
            lambda: 1.0,
            s: 2,
        }
    }
}

impl TgfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.td_us == 0 {
            return Err(Error::Config("tgf.td_us must be positive".into()));
        }
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "tgf.lambda must be a finite value >= 1, got {}",
                self.lambda
            )));
        }
        if self.s != 1 && self.s != 2 {
            return Err(Error::Config(format!("tgf.s must be 1 or 2, got {}", self.s)));
        }
        Ok(())
    }
}

/// Running adaptive-threshold state. Feed every event timestamp through
/// [`TgfState::update`]; the threshold becomes available once the first
/// interval closes.
#[derive(Debug, Clone)]
pub struct TgfState {
    cfg: TgfConfig,
    /// Threshold numerator `td_us * width * height / s^2`, in microseconds.
    t_c: f64,
    n_e: u64,
    interval_start: Option<u64>,
    current: Option<f64>,
}

impl TgfState {
    pub fn new(geometry: SensorGeometry, cfg: TgfConfig) -> Result<Self> {
        cfg.validate()?;
        let t_c = cfg.td_us as f64 * geometry.pixel_count() as f64 / (cfg.s as f64 * cfg.s as f64);
        Ok(TgfState {
            cfg,
            t_c,
            n_e: 0,
            interval_start: None,
            current: None,
        })
    }

    pub fn config(&self) -> &TgfConfig {
        &self.cfg
    }

    /// Threshold numerator `T_c` in microseconds.
    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    /// Current threshold in microseconds, or `None` before the first interval
    /// completes.
    pub fn current(&self) -> Option<f64> {
        self.current
    }

    /// Counts one event at `t_us`. When the event closes an accumulation
    /// interval the threshold is refreshed and the interval restarts at this
    /// event. Returns the (possibly updated) current threshold.
    pub fn update(&mut self, t_us: u64) -> Option<f64> {
        let start = *self.interval_start.get_or_insert(t_us);
        self.n_e += 1;
        if t_us.saturating_sub(start) >= self.cfg.td_us {
            if self.n_e > 0 {
                let raw = self.t_c / (self.cfg.lambda * self.n_e as f64);
                self.current = Some(match self.current {
                    None => raw,
                    Some(prev) => SMOOTH_KEEP * prev + SMOOTH_NEW * raw,
                });
            }
            // else: keep the previous threshold (no division by zero).
            self.n_e = 0;
            self.interval_start = Some(t_us);
        }
        self.current
    }
}

/// Outcome of the background-activity filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Signal,
    Noise,
}

/// Background-activity filter over an `s x s` down-sampled merged grid.
///
/// An event is signal iff its grid cell has fired before (cell non-zero) and
/// the elapsed time since that firing is within the adaptive threshold. The
/// very first event in a cell is therefore noise — isolated background
/// activity never accumulates temporal support. The cell is refreshed with the
/// event's timestamp whatever the decision, and while no threshold exists yet
/// (start-up) everything passes.
#[derive(Debug, Clone)]
pub struct GfFilter {
    grid: TimeSurface,
}

impl GfFilter {
    pub fn new(geometry: SensorGeometry, s: u32) -> Result<Self> {
        Ok(GfFilter {
            grid: TimeSurface::new(geometry, PolarityMode::Merged, s)?,
        })
    }

    pub fn grid(&self) -> &TimeSurface {
        &self.grid
    }

    /// Classifies the event against the grid, then refreshes its cell.
    pub fn check_and_update(&mut self, e: &Event, tgf_us: Option<f64>) -> Result<FilterDecision> {
        let (cx, cy) = self.grid.cell_of(e.x, e.y);
        let prev = self.grid.stamp(cx as i64, cy as i64, e.p);
        let decision = match tgf_us {
            None => FilterDecision::Signal,
            Some(th) => {
                if prev != 0 && (e.t.saturating_sub(prev) as f64) <= th {
                    FilterDecision::Signal
                } else {
                    FilterDecision::Noise
                }
            }
        };
        self.grid.update(e)?;
        Ok(decision)
    }
}

/// Outcome of the refractory filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefractoryDecision {
    Pass,
    Drop,
}

/// Per-pixel, same-polarity dead-time filter.
///
/// Drops an event iff the previous same-polarity event at the same pixel is
/// strictly closer than `period_us`. The pixel stamp is refreshed even for
/// dropped events, so a sustained burst stays suppressed. A period of 0
/// disables the filter (everything passes).
#[derive(Debug, Clone)]
pub struct RefractoryFilter {
    last: TimeSurface,
    period_us: u64,
}

impl RefractoryFilter {
    pub fn new(geometry: SensorGeometry, period_us: u64) -> Result<Self> {
        Ok(RefractoryFilter {
            last: TimeSurface::new(geometry, PolarityMode::Split, 1)?,
            period_us,
        })
    }

    pub fn period_us(&self) -> u64 {
        self.period_us
    }

    pub fn check_and_update(&mut self, e: &Event) -> Result<RefractoryDecision> {
        let prev = self.last.stamp(e.x as i64, e.y as i64, e.p);
        let decision = if self.period_us > 0
            && prev != 0
            && e.t.saturating_sub(prev) < self.period_us
        {
            RefractoryDecision::Drop
        } else {
            RefractoryDecision::Pass
        };
        self.last.update(e)?;
        Ok(decision)
    }
}
