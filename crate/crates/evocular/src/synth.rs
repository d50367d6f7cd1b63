//! Seeded synthetic clips: genuine ocular event streams with ground truth,
//! and their frame-quantized replay counterparts.
//!
//! A genuine clip is homogeneous Poisson background noise plus scripted
//! movements confined to the eye region. A blink is an ON-dominant closing
//! burst, a short quiet plateau (eye closed), then a longer, shallower
//! reopening burst with the polarity roles swapped — so the per-polarity
//! activity shows the characteristic double peak with the second pair
//! lower. A saccade is one short polarity-balanced burst. Ground truth pads
//! each scripted interval with a fixed annotation margin of neutral
//! activity.
//!
//! The replay transform models a display pipeline: timestamps quantize to
//! the next frame boundary, same-pixel same-polarity duplicates within a
//! frame collapse, and the survivors are independently thinned to mimic the
//! reduced event rate of a dimmer screen. Everything is a pure function of
//! (spec, seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

use crate::detect::{SegmentLabel, TemporalSegment};
use crate::event::{Event, EventStream, Polarity, RegionOfInterest};

/// Fraction of a blink spent closing; the reopening takes what the closing
/// and plateau leave, which comes to 1.5x the closing duration.
pub const BLINK_CLOSE_FRAC: f64 = 0.36;
/// Fraction of a blink spent with the eye closed (quiet plateau between the
/// closing and reopening bursts).
pub const BLINK_PLATEAU_FRAC: f64 = 0.10;
/// Reopening burst amplitude relative to the closing burst.
pub const BLINK_REOPEN_AMPLITUDE: f64 = 0.6;
/// OFF-channel rate relative to the dominant channel within a blink burst.
pub const BLINK_OFF_RATIO: f64 = 0.75;
/// Dominant-channel event rate of the closing burst, events/s over the ROI.
pub const BLINK_PEAK_RATE: f64 = 30_000.0;
/// Per-polarity event rate of a saccade burst, events/s over the ROI.
pub const SACCADE_RATE: f64 = 20_000.0;
/// Neutral-activity margin added around each scripted movement in the
/// ground truth.
pub const ANNOTATION_MARGIN_US: u64 = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("scripted movements overlap (margins included)")]
    OverlappingMovements,
    #[error("invalid clip spec: {0}")]
    InvalidSpec(String),
}

/// One scripted movement: a blink or saccade starting at `onset_us`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedMovement {
    pub label: SegmentLabel,
    pub onset_us: u64,
    pub duration_us: u64,
}

/// Recipe for one genuine clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub duration_us: u64,
    pub width: u16,
    pub height: u16,
    pub eye_roi: RegionOfInterest,
    pub movements: Vec<ScriptedMovement>,
    /// Background noise, events/s/pixel over the whole frame.
    pub noise_rate: f64,
    pub seed: u64,
}

impl ClipSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.duration_us == 0 {
            return Err(SynthError::InvalidSpec("clip duration must be positive".into()));
        }
        if self.noise_rate < 0.0 || !self.noise_rate.is_finite() {
            return Err(SynthError::InvalidSpec(
                "noise rate must be finite and non-negative".into(),
            ));
        }
        if !self.eye_roi.fits(self.width, self.height) {
            return Err(SynthError::InvalidSpec("eye region must fit inside the frame".into()));
        }
        for m in &self.movements {
            if m.duration_us == 0 {
                return Err(SynthError::InvalidSpec("movement duration must be positive".into()));
            }
            if m.label == SegmentLabel::Saccade
                && !(20_000..=150_000).contains(&m.duration_us)
            {
                return Err(SynthError::InvalidSpec(format!(
                    "saccade duration {} µs outside the 20-150 ms range",
                    m.duration_us
                )));
            }
            if m.onset_us < ANNOTATION_MARGIN_US
                || m.onset_us + m.duration_us + ANNOTATION_MARGIN_US > self.duration_us
            {
                return Err(SynthError::InvalidSpec(
                    "movement (with annotation margin) must lie inside the clip".into(),
                ));
            }
        }
        // Ground-truth intervals include the margin, so disjointness is
        // required of the padded intervals.
        let mut padded: Vec<(u64, u64)> = self
            .movements
            .iter()
            .map(|m| {
                (m.onset_us - ANNOTATION_MARGIN_US, m.onset_us + m.duration_us + ANNOTATION_MARGIN_US)
            })
            .collect();
        padded.sort_unstable();
        if padded.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(SynthError::OverlappingMovements);
        }
        Ok(())
    }
}

/// Replay-attack pipeline parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplaySpec {
    /// Display frame rate; the frame period is 10⁶/fps µs.
    pub fps: u32,
    /// Independent per-event survival probability, modeling the dimmer
    /// display.
    pub brightness_factor: f64,
    /// Uniform timing jitter in [0, jitter_us] added after quantization.
    pub jitter_us: u64,
}

impl Default for ReplaySpec {
    fn default() -> Self {
        ReplaySpec { fps: 50, brightness_factor: 0.6, jitter_us: 0 }
    }
}

/// Generates a genuine clip and its ground-truth segments (padded by the
/// annotation margin, sorted by onset). Fully determined by the `ClipSpec`,
/// including its seed.
pub fn synth_genuine(
    spec: &ClipSpec,
) -> Result<(EventStream, Vec<TemporalSegment>), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut events: Vec<Event> = Vec::new();

    // Background noise over the full frame.
    let pixels = f64::from(spec.width) * f64::from(spec.height);
    let lambda_bg = spec.noise_rate * pixels * spec.duration_us as f64 / 1e6;
    for _ in 0..poisson_count(&mut rng, lambda_bg) {
        let t = rng.gen_range(0..spec.duration_us);
        let x = rng.gen_range(0..spec.width);
        let y = rng.gen_range(0..spec.height);
        let polarity = if rng.gen::<bool>() { Polarity::On } else { Polarity::Off };
        events.push(Event { t, x, y, polarity });
    }

    for m in &spec.movements {
        match m.label {
            SegmentLabel::Blink => {
                let d = m.duration_us;
                let closing = (d as f64 * BLINK_CLOSE_FRAC).round() as u64;
                let plateau = (d as f64 * BLINK_PLATEAU_FRAC).round() as u64;
                let close = (m.onset_us, m.onset_us + closing.min(d));
                // The plateau emits nothing; the reopening covers the rest.
                let reopen = (m.onset_us + (closing + plateau).min(d), m.onset_us + d);
                // Closing: ON dominates. Reopening: roles swap, shallower.
                burst(&mut rng, &mut events, &spec.eye_roi, close, Polarity::On, BLINK_PEAK_RATE);
                burst(
                    &mut rng,
                    &mut events,
                    &spec.eye_roi,
                    close,
                    Polarity::Off,
                    BLINK_PEAK_RATE * BLINK_OFF_RATIO,
                );
                burst(
                    &mut rng,
                    &mut events,
                    &spec.eye_roi,
                    reopen,
                    Polarity::Off,
                    BLINK_PEAK_RATE * BLINK_REOPEN_AMPLITUDE,
                );
                burst(
                    &mut rng,
                    &mut events,
                    &spec.eye_roi,
                    reopen,
                    Polarity::On,
                    BLINK_PEAK_RATE * BLINK_REOPEN_AMPLITUDE * BLINK_OFF_RATIO,
                );
            }
            SegmentLabel::Saccade => {
                let span = (m.onset_us, m.onset_us + m.duration_us);
                burst(&mut rng, &mut events, &spec.eye_roi, span, Polarity::On, SACCADE_RATE);
                burst(&mut rng, &mut events, &spec.eye_roi, span, Polarity::Off, SACCADE_RATE);
            }
        }
    }

    let (stream, _) = EventStream::from_unordered(spec.width, spec.height, events)
        .expect("generated events are in bounds");

    let mut ground_truth: Vec<TemporalSegment> = spec
        .movements
        .iter()
        .map(|m| TemporalSegment {
            onset_us: m.onset_us - ANNOTATION_MARGIN_US,
            offset_us: m.onset_us + m.duration_us + ANNOTATION_MARGIN_US,
            label: m.label,
            score: 1.0,
        })
        .collect();
    ground_truth.sort_by_key(|s| s.onset_us);
    Ok((stream, ground_truth))
}

fn poisson_count(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive finite lambda").sample(rng) as u64
}

/// Constant-rate Poisson burst of one polarity, uniform over the region and
/// the half-open time span. `rate` is events/s over the whole region.
fn burst(
    rng: &mut ChaCha8Rng,
    events: &mut Vec<Event>,
    roi: &RegionOfInterest,
    span: (u64, u64),
    polarity: Polarity,
    rate: f64,
) {
    if span.1 <= span.0 {
        return;
    }
    let lambda = rate * (span.1 - span.0) as f64 / 1e6;
    for _ in 0..poisson_count(rng, lambda) {
        let t = rng.gen_range(span.0..span.1);
        let x = roi.x0 + rng.gen_range(0..roi.w);
        let y = roi.y0 + rng.gen_range(0..roi.h);
        events.push(Event { t, x, y, polarity });
    }
}

/// Applies the replay-attack transform to a genuine stream. Timestamps are
/// quantized up to the next frame boundary (`round(k·10⁶/fps)`, exact
/// multiples whenever fps divides 10⁶; timestamps already on a boundary
/// stay), same-pixel same-polarity duplicates within one frame collapse to
/// the first, and survivors are thinned with probability
/// `brightness_factor` plus optional uniform jitter. Deterministic in
/// (stream, spec, seed).
pub fn synth_replay(genuine: &EventStream, spec: &ReplaySpec, seed: u64) -> EventStream {
    assert!(spec.fps > 0, "fps must be positive");
    assert!(
        spec.brightness_factor > 0.0 && spec.brightness_factor <= 1.0,
        "brightness factor must lie in (0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fps = u128::from(spec.fps);
    let mut seen: HashSet<(u64, u16, u16, Polarity)> = HashSet::new();
    let mut events: Vec<Event> = Vec::new();
    for e in genuine.events() {
        let frame = (u128::from(e.t) * fps).div_ceil(1_000_000);
        if !seen.insert((frame as u64, e.x, e.y, e.polarity)) {
            continue;
        }
        let quantized = ((frame * 1_000_000 + fps / 2) / fps) as u64;
        let t = if spec.jitter_us > 0 {
            quantized + rng.gen_range(0..=spec.jitter_us)
        } else {
            quantized
        };
        if rng.gen::<f64>() < spec.brightness_factor {
            events.push(Event { t, ..*e });
        }
    }
    let (stream, _) = EventStream::from_unordered(genuine.width(), genuine.height(), events)
        .expect("coordinates unchanged");
    stream
}
