//! Sensor event model: single events, bounded streams, regions of interest.
//!
//! An [`EventStream`] owns its invariants: every event lies inside the sensor
//! geometry and timestamps never decrease. Constructors are the only way in,
//! so downstream code can index and window events without re-validating.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Contrast polarity of an event: `On` for a brightness increase (+1),
/// `Off` for a decrease (-1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    /// Signed representation used by the wire formats: +1 / -1.
    pub fn sign(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Polarity> {
        match sign {
            1 => Some(Polarity::On),
            -1 => Some(Polarity::Off),
            _ => None,
        }
    }
}

/// One sensor event: pixel coordinates, microsecond timestamp, polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

/// Semantic tag for a region of interest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiLabel {
    Face,
    LeftEye,
    RightEye,
    Custom,
}

/// Axis-aligned pixel rectangle `[x0, x0+w) x [y0, y0+h)` with a label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub x0: u16,
    pub y0: u16,
    pub w: u16,
    pub h: u16,
    pub label: RoiLabel,
}

impl RegionOfInterest {
    pub fn new(x0: u16, y0: u16, w: u16, h: u16, label: RoiLabel) -> Self {
        RegionOfInterest { x0, y0, w, h, label }
    }

    /// Whole-sensor region, labeled as the face crop.
    pub fn full_frame(width: u16, height: u16) -> Self {
        RegionOfInterest::new(0, 0, width, height, RoiLabel::Face)
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x0
            && u32::from(x) < u32::from(self.x0) + u32::from(self.w)
            && y >= self.y0
            && u32::from(y) < u32::from(self.y0) + u32::from(self.h)
    }

    /// True when the region is non-empty and lies inside `width` x `height`.
    pub fn fits(&self, width: u16, height: u16) -> bool {
        self.w > 0
            && self.h > 0
            && u32::from(self.x0) + u32::from(self.w) <= u32::from(width)
            && u32::from(self.y0) + u32::from(self.h) <= u32::from(height)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventError {
    #[error("bad magic, expected bytes 45 56 54 30 (`EVT0`)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("payload length {actual} does not match header (expected {expected})")]
    TruncatedRecord { expected: usize, actual: usize },
    #[error("event {index}: pixel ({x},{y}) outside {width}x{height} sensor")]
    OutOfBounds { index: usize, x: u16, y: u16, width: u16, height: u16 },
    #[error("event {index}: timestamp decreases ({prev} -> {next})")]
    NonMonotonic { index: usize, prev: u64, next: u64 },
    /// `line` is the 1-based source line for text input, or the 1-based
    /// record ordinal for binary input.
    #[error("line {line}: polarity must be -1 or 1, got {value}")]
    BadPolarity { line: usize, value: i64 },
    #[error("missing header line `t_us,x,y,p`")]
    MissingHeader,
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("roi ({x0},{y0}) {w}x{h} empty or outside {width}x{height} sensor")]
    RoiOutOfBounds { x0: u16, y0: u16, w: u16, h: u16, width: u16, height: u16 },
    #[error("invalid time interval: t1 ({t1}) must exceed t0 ({t0})")]
    InvalidInterval { t0: u64, t1: u64 },
}

/// A validated event stream: fixed sensor geometry, in-bounds events,
/// non-decreasing timestamps. Events with equal timestamps keep their
/// insertion order everywhere (stable sorting only).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventStream {
    width: u16,
    height: u16,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream, rejecting out-of-bounds pixels and any timestamp
    /// decrease (strict ordering mode).
    pub fn new(width: u16, height: u16, events: Vec<Event>) -> Result<EventStream, EventError> {
        check_bounds(width, height, &events)?;
        for i in 1..events.len() {
            if events[i].t < events[i - 1].t {
                return Err(EventError::NonMonotonic {
                    index: i,
                    prev: events[i - 1].t,
                    next: events[i].t,
                });
            }
        }
        Ok(EventStream { width, height, events })
    }

    /// Lenient construction: stably sorts by timestamp and reports how many
    /// adjacent pairs were out of order in the input. Bounds are still hard
    /// errors.
    pub fn from_unordered(
        width: u16,
        height: u16,
        mut events: Vec<Event>,
    ) -> Result<(EventStream, usize), EventError> {
        check_bounds(width, height, &events)?;
        let disordered = (1..events.len()).filter(|&i| events[i].t < events[i - 1].t).count();
        if disordered > 0 {
            events.sort_by_key(|e| e.t);
        }
        Ok((EventStream { width, height, events }, disordered))
    }

    pub fn empty(width: u16, height: u16) -> EventStream {
        EventStream { width, height, events: Vec::new() }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_t(&self) -> Option<u64> {
        self.events.first().map(|e| e.t)
    }

    pub fn last_t(&self) -> Option<u64> {
        self.events.last().map(|e| e.t)
    }

    /// Events inside `roi`, re-based so the region origin becomes (0,0) and
    /// the new geometry is the region size. Order is preserved.
    pub fn crop(&self, roi: &RegionOfInterest) -> Result<EventStream, EventError> {
        if !roi.fits(self.width, self.height) {
            return Err(EventError::RoiOutOfBounds {
                x0: roi.x0,
                y0: roi.y0,
                w: roi.w,
                h: roi.h,
                width: self.width,
                height: self.height,
            });
        }
        let events = self
            .events
            .iter()
            .filter(|e| roi.contains(e.x, e.y))
            .map(|e| Event { t: e.t, x: e.x - roi.x0, y: e.y - roi.y0, polarity: e.polarity })
            .collect();
        Ok(EventStream { width: roi.w, height: roi.h, events })
    }

    /// Events with `t0 <= t < t1`, keeping absolute timestamps and geometry.
    pub fn slice_time(&self, t0: u64, t1: u64) -> Result<EventStream, EventError> {
        if t1 <= t0 {
            return Err(EventError::InvalidInterval { t0, t1 });
        }
        let lo = self.events.partition_point(|e| e.t < t0);
        let hi = self.events.partition_point(|e| e.t < t1);
        Ok(EventStream {
            width: self.width,
            height: self.height,
            events: self.events[lo..hi].to_vec(),
        })
    }
}

fn check_bounds(width: u16, height: u16, events: &[Event]) -> Result<(), EventError> {
    for (index, e) in events.iter().enumerate() {
        if e.x >= width || e.y >= height {
            return Err(EventError::OutOfBounds { index, x: e.x, y: e.y, width, height });
        }
    }
    Ok(())
}
