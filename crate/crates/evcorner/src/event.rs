//! Core event-stream primitives: events, polarity, and sensor geometry.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sign of the brightness change reported by an event.
///
/// `None` supports polarity-free sensors: such events live on the merged
/// time surface, and on a split surface they update both polarity grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Pos,
    Neg,
    None,
}

impl Polarity {
    /// Signed encoding used by the packed binary format: +1, -1, or 0 (none).
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Pos => 1,
            Polarity::Neg => -1,
            Polarity::None => 0,
        }
    }

    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Polarity::Pos),
            -1 => Ok(Polarity::Neg),
            0 => Ok(Polarity::None),
            other => Err(Error::Invalid(format!(
                "polarity must be 1, -1 or 0, got {other}"
            ))),
        }
    }
}

/// A single camera event: pixel coordinates, a microsecond timestamp, and
/// polarity. Timestamps within a stream are non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Timestamp in integer microseconds since stream start.
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    pub fn new(x: u16, y: u16, t: u64, p: Polarity) -> Self {
        Event { x, y, t, p }
    }
}

/// Sensor pixel-array dimensions. Both sides must be at least [`SensorGeometry::MIN_DIM`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensorGeometry {
    width: u16,
    height: u16,
}

impl SensorGeometry {
    pub const MIN_DIM: u16 = 16;

    pub fn new(width: u16, height: u16) -> Result<Self> {
        if width < Self::MIN_DIM || height < Self::MIN_DIM {
            return Err(Error::Geometry(format!(
                "{width}x{height}: both sides must be >= {}",
                Self::MIN_DIM
            )));
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    /// Grid dimensions after down-sampling by `scale` (ceiling division).
    pub fn scaled_dims(&self, scale: u32) -> (usize, usize) {
        let s = scale as usize;
        (
            (self.width as usize).div_ceil(s),
            (self.height as usize).div_ceil(s),
        )
    }

    pub fn check_event(&self, e: &Event) -> Result<()> {
        if self.contains(e.x, e.y) {
            Ok(())
        } else {
            Err(Error::OutOfFrame {
                x: e.x,
                y: e.y,
                width: self.width,
                height: self.height,
            })
        }
    }
}

impl fmt::Display for SensorGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for SensorGeometry {
    type Err = Error;

    /// Parses `WIDTHxHEIGHT`, e.g. `240x180`.
    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Geometry(format!("expected WxH, got {s:?}")))?;
        let width = w
            .trim()
            .parse::<u16>()
            .map_err(|_| Error::Geometry(format!("bad width in {s:?}")))?;
        let height = h
            .trim()
            .parse::<u16>()
            .map_err(|_| Error::Geometry(format!("bad height in {s:?}")))?;
        SensorGeometry::new(width, height)
    }
}
