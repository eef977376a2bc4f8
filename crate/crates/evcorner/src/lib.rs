//! Per-event corner detection for asynchronous event-camera streams.
//!
//! Event cameras report per-pixel brightness changes as a sparse stream of
//! timestamped events instead of frames. This crate processes such streams
//! one event at a time:
//!
//! * [`event`] / [`io`] — stream primitives and text/binary readers-writers.
//! * [`surface`] — latest-timestamp grids (surface of active events) and
//!   local patches.
//! * [`tgf`] — a rate-adaptive time threshold plus background-activity and
//!   refractory filters built on it.
//! * [`normalize`] — patch normalization schemes, including the adaptive
//!   exponential decay kernel served from a lookup table.
//! * [`esusan`] — nested-disc recency counting and corner classification.
//! * [`harris`] — event-based Harris scoring of normalized patches.
//! * [`pipeline`] — the combined detector: filters, candidate gating, and
//!   Harris refinement, with per-event labels and throughput accounting.
//! * [`synth`] — synthetic scenes of moving polygons with exact vertex
//!   ground truth.
//! * [`eval`] — reduction/accuracy/true-positive-rate metrics and greedy
//!   nearest-neighbor corner tracking.
//! * [`config`] — line-oriented `key = value` run configuration with a
//!   stable content hash.
//!
//! All state is owned and single-threaded per pipeline; replaying the same
//! stream with the same configuration reproduces identical labels.

// Validation deliberately writes `!(x > 0.0)` so that NaN fails closed; the
// `partial_cmp` form clippy suggests would hide that intent.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod esusan;
pub mod eval;
pub mod event;
pub mod harris;
pub mod io;
pub mod normalize;
pub mod pipeline;
pub mod surface;
pub mod synth;
pub mod tgf;

pub use error::{Error, Result};
pub use event::{Event, Polarity, SensorGeometry};
