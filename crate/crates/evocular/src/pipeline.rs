//! End-to-end wiring from a raw event stream to detected movement segments.
//!
//! One call builds the per-polarity and all-polarity activity profiles,
//! resamples them onto a shared uniform grid spanning the stream, then runs
//! blink detection on the polarity difference and (blink-suppressed)
//! saccade detection on the combined activity.

use serde::{Deserialize, Serialize};

use crate::activity::{activity_profile, resample_activity_over, ActivitySeries, Channel};
use crate::detect::{
    detect_blinks, detect_saccades, BlinkParams, DetectError, SaccadeParams, TemporalSegment,
};
use crate::event::EventStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcularConfig {
    /// Activity decay constant.
    pub tau_us: f64,
    /// Per-event increment is 1/µ.
    pub mu: f64,
    /// Uniform detection grid step.
    pub dt_us: u64,
    pub blink: BlinkParams,
    pub saccade: SaccadeParams,
}

impl Default for OcularConfig {
    fn default() -> Self {
        OcularConfig {
            tau_us: 10_000.0,
            mu: 1.0,
            dt_us: 2_000,
            blink: BlinkParams::default(),
            saccade: SaccadeParams::default(),
        }
    }
}

/// Everything the detector produced for one clip: the three resampled
/// activity series and the segment lists.
#[derive(Clone, Debug, PartialEq)]
pub struct OcularDetection {
    pub a_on: ActivitySeries,
    pub a_off: ActivitySeries,
    pub a_all: ActivitySeries,
    pub blinks: Vec<TemporalSegment>,
    pub saccades: Vec<TemporalSegment>,
    /// Both lists combined, sorted by onset.
    pub segments: Vec<TemporalSegment>,
}

/// Runs the full detection chain over one stream.
pub fn detect_ocular(
    stream: &EventStream,
    config: &OcularConfig,
) -> Result<OcularDetection, DetectError> {
    let (t0, t1) = match (stream.first_t(), stream.last_t()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(DetectError::EmptySeries),
    };

    let a_on = channel_series(stream, Channel::On, config, t0, t1);
    let a_off = channel_series(stream, Channel::Off, config, t0, t1);
    let a_all = channel_series(stream, Channel::All, config, t0, t1);

    let blinks = detect_blinks(&a_on, &a_off, &config.blink)?;
    let saccades = detect_saccades(&a_all, &blinks, &config.saccade)?;

    let mut segments: Vec<TemporalSegment> =
        blinks.iter().chain(&saccades).copied().collect();
    segments.sort_by_key(|s| (s.onset_us, s.offset_us));

    Ok(OcularDetection { a_on, a_off, a_all, blinks, saccades, segments })
}

/// Profile + resample for one channel; a channel with no events becomes an
/// all-zero series on the shared grid.
fn channel_series(
    stream: &EventStream,
    channel: Channel,
    config: &OcularConfig,
    t0: u64,
    t1: u64,
) -> ActivitySeries {
    let profile = activity_profile(stream, channel, config.tau_us, config.mu);
    if profile.is_empty() {
        let times: Vec<u64> = (0..=(t1 - t0) / config.dt_us).map(|k| t0 + k * config.dt_us).collect();
        let values = vec![0.0; times.len()];
        ActivitySeries::from_parts(channel, config.tau_us, config.mu, times, values, Some(config.dt_us))
            .expect("grid times are strictly increasing and uniform")
    } else {
        resample_activity_over(&profile, config.dt_us, t0, t1)
            .expect("profile is non-empty")
    }
}
