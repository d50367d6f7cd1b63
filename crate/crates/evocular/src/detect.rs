//! Blink and saccade segmentation on uniformly resampled activity series.
//!
//! Blinks are found on the smoothed, max-normalized polarity difference
//! `D = smooth(A_on - A_off)`: eyelid closing drives a positive swing, the
//! reopening a negative one, so each positive-to-negative zero crossing of
//! `D` flanked by a sufficiently prominent peak of `D` on the left and of
//! `-D` on the right (both within a search window, with no qualifying
//! opposite-sign peak in between) marks one blink. Peak prominence and
//! width are measured per lobe on the half-wave rectified signal, so both
//! are relative to the zero baseline rather than the opposite swing. The
//! segment spans the crossing minus the left peak's width through the
//! crossing plus the right peak's width.
//!
//! Saccades are prominent peaks of the max-normalized all-polarity activity
//! after blink intervals have been flattened out, keeping only peaks whose
//! half-prominence width is physiologically plausible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::ActivitySeries;
use crate::signal::{find_peaks, gaussian_kernel, reflect_convolve, Peak};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DetectError {
    #[error("series must be resampled to a uniform grid")]
    NotUniform,
    #[error("series are not on the same time grid")]
    GridMismatch,
    #[error("series has no samples")]
    EmptySeries,
    #[error("input must be non-empty")]
    EmptyInput,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Blink,
    Saccade,
}

/// A detected (or annotated) movement interval `[onset_us, offset_us)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalSegment {
    pub onset_us: u64,
    pub offset_us: u64,
    pub label: SegmentLabel,
    /// Detection confidence in [0, 1].
    pub score: f64,
}

impl TemporalSegment {
    pub fn duration_us(&self) -> u64 {
        self.offset_us - self.onset_us
    }

    /// Half-open interval overlap.
    pub fn overlaps(&self, other: &TemporalSegment) -> bool {
        self.onset_us < other.offset_us && other.onset_us < self.offset_us
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlinkParams {
    /// Smoothing width for the polarity difference signal.
    pub gaussian_sigma_us: f64,
    /// Minimum prominence of the closing peak (on normalized `D`).
    pub pos_prominence: f64,
    /// Minimum prominence of the reopening peak (on normalized `-D`).
    pub neg_prominence: f64,
    /// How far from the zero crossing each gating peak may sit.
    pub search_window_us: u64,
}

impl Default for BlinkParams {
    fn default() -> Self {
        BlinkParams {
            gaussian_sigma_us: 12_000.0,
            pos_prominence: 0.5,
            neg_prominence: 0.3,
            search_window_us: 300_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaccadeParams {
    /// Minimum peak prominence on the normalized activity.
    pub peak_threshold: f64,
    /// Accepted half-prominence width range of a peak.
    pub min_width_us: u64,
    pub max_width_us: u64,
    /// Segments shorter than this are discarded.
    pub min_segment_us: u64,
}

impl Default for SaccadeParams {
    fn default() -> Self {
        SaccadeParams {
            peak_threshold: 0.6,
            min_width_us: 20_000,
            max_width_us: 150_000,
            min_segment_us: 20_000,
        }
    }
}

/// Gaussian smoothing on the series' own grid; the kernel is truncated at
/// ±4σ and boundaries are reflect-padded, so constants and total mass are
/// preserved.
pub fn gaussian_smooth(
    series: &ActivitySeries,
    sigma_us: f64,
) -> Result<ActivitySeries, DetectError> {
    assert!(sigma_us > 0.0, "sigma must be positive");
    let dt = series.uniform_dt_us().ok_or(DetectError::NotUniform)?;
    Ok(series.with_values(smooth_values(series.values(), sigma_us, dt)))
}

fn smooth_values(values: &[f64], sigma_us: f64, dt_us: u64) -> Vec<f64> {
    let radius = (4.0 * sigma_us / dt_us as f64).floor() as usize;
    if radius == 0 {
        return values.to_vec();
    }
    reflect_convolve(values, &gaussian_kernel(sigma_us / dt_us as f64, radius))
}

/// Blink segmentation from per-polarity activity series on one shared
/// uniform grid. Overlapping candidates are resolved in favour of the
/// larger summed gating prominence; the output is disjoint and sorted by
/// onset.
pub fn detect_blinks(
    a_on: &ActivitySeries,
    a_off: &ActivitySeries,
    params: &BlinkParams,
) -> Result<Vec<TemporalSegment>, DetectError> {
    let dt = a_on.uniform_dt_us().ok_or(DetectError::NotUniform)?;
    let dt_off = a_off.uniform_dt_us().ok_or(DetectError::NotUniform)?;
    if dt != dt_off || a_on.len() != a_off.len() || a_on.first_t() != a_off.first_t() {
        return Err(DetectError::GridMismatch);
    }

    let diff: Vec<f64> = a_on
        .values()
        .iter()
        .zip(a_off.values())
        .map(|(on, off)| on - off)
        .collect();
    let mut d = smooth_values(&diff, params.gaussian_sigma_us, dt);
    let max_abs = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs <= 0.0 {
        return Ok(Vec::new());
    }
    for v in &mut d {
        *v /= max_abs;
    }

    // Each polarity lobe is measured on its half-wave rectification so that
    // prominence means height above the zero baseline and widths stay inside
    // the lobe. On the signed signal both walks would run through the
    // opposite swing: prominences inflate past the peak height, the width
    // reference line goes negative, and a single "width" can span unrelated
    // structure half a clip away.
    let pos_signal: Vec<f64> = d.iter().map(|v| v.max(0.0)).collect();
    let pos_peaks = find_peaks(&pos_signal, params.pos_prominence, 0.5);
    let neg_signal: Vec<f64> = d.iter().map(|v| (-v).max(0.0)).collect();
    let neg_peaks = find_peaks(&neg_signal, params.neg_prominence, 0.5);
    if pos_peaks.is_empty() || neg_peaks.is_empty() {
        return Ok(Vec::new());
    }

    let times = a_on.times();
    let window = params.search_window_us as f64;
    let dt_f = dt as f64;
    let mut candidates: Vec<(f64, TemporalSegment)> = Vec::new();
    for t_c in pos_to_neg_crossings(&d, times) {
        let left = nearest_left(&pos_peaks, times, t_c, window);
        let right = nearest_right(&neg_peaks, times, t_c, window);
        let (left, right) = match (left, right) {
            (Some(l), Some(r)) => (l, r),
            _ => continue,
        };
        // The gates must be the crossing's direct flanks: a qualifying
        // reopening trough between the closing peak and the crossing (or a
        // closing peak between the crossing and the trough) means this
        // crossing sits past a whole other transition and is borrowing its
        // neighbours' structure.
        let intervening_neg = neg_peaks.iter().any(|p| {
            let t = times[p.index] as f64;
            t > times[left.index] as f64 && t < t_c
        });
        let intervening_pos = pos_peaks.iter().any(|p| {
            let t = times[p.index] as f64;
            t > t_c && t < times[right.index] as f64
        });
        if intervening_neg || intervening_pos {
            continue;
        }
        let onset = (t_c - left.width * dt_f).max(0.0).round() as u64;
        let offset = (t_c + right.width * dt_f).round() as u64;
        if onset >= offset {
            continue;
        }
        let prominence_sum = left.prominence + right.prominence;
        let score = (prominence_sum / 2.0).min(1.0);
        candidates.push((
            prominence_sum,
            TemporalSegment { onset_us: onset, offset_us: offset, label: SegmentLabel::Blink, score },
        ));
    }
    Ok(resolve_overlaps(candidates))
}

/// Interpolated times where the signal passes from positive to negative; a
/// run of exact zeros between the signs places the crossing at its first
/// sample.
fn pos_to_neg_crossings(d: &[f64], times: &[u64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last_pos: Option<usize> = None;
    for (i, &v) in d.iter().enumerate() {
        if v > 0.0 {
            last_pos = Some(i);
        } else if v < 0.0 {
            if let Some(j) = last_pos {
                out.push(if i == j + 1 {
                    let span = (times[i] - times[j]) as f64;
                    times[j] as f64 + span * d[j] / (d[j] - d[i])
                } else {
                    times[j + 1] as f64
                });
            }
            last_pos = None;
        }
    }
    out
}

/// Nearest qualifying peak at or before `t_c`, no farther than `window`.
fn nearest_left<'p>(peaks: &'p [Peak], times: &[u64], t_c: f64, window: f64) -> Option<&'p Peak> {
    peaks
        .iter()
        .rev()
        .find(|p| times[p.index] as f64 <= t_c)
        .filter(|p| t_c - times[p.index] as f64 <= window)
}

/// Nearest qualifying peak at or after `t_c`, no farther than `window`.
fn nearest_right<'p>(peaks: &'p [Peak], times: &[u64], t_c: f64, window: f64) -> Option<&'p Peak> {
    peaks
        .iter()
        .find(|p| times[p.index] as f64 >= t_c)
        .filter(|p| times[p.index] as f64 - t_c <= window)
}

/// Greedy overlap resolution: candidates ranked by key (descending, ties to
/// the earlier then shorter segment) are accepted when disjoint from all
/// previously accepted ones; the survivors come back sorted by onset.
fn resolve_overlaps(mut candidates: Vec<(f64, TemporalSegment)>) -> Vec<TemporalSegment> {
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite keys")
            .then(a.1.onset_us.cmp(&b.1.onset_us))
            .then(a.1.offset_us.cmp(&b.1.offset_us))
    });
    let mut accepted: Vec<TemporalSegment> = Vec::new();
    for (_, seg) in candidates {
        if accepted.iter().all(|s| !s.overlaps(&seg)) {
            accepted.push(seg);
        }
    }
    accepted.sort_by_key(|s| (s.onset_us, s.offset_us));
    accepted
}

/// 95th percentile of observed blink durations (linear-interpolation
/// quantile), used to refit the blink search window.
pub fn fit_blink_window(training_durations_us: &[u64]) -> Result<u64, DetectError> {
    if training_durations_us.is_empty() {
        return Err(DetectError::EmptyInput);
    }
    let mut sorted = training_durations_us.to_vec();
    sorted.sort_unstable();
    let h = (sorted.len() - 1) as f64 * 0.95;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let value = if lo + 1 < sorted.len() {
        sorted[lo] as f64 + frac * (sorted[lo + 1] - sorted[lo]) as f64
    } else {
        sorted[lo] as f64
    };
    Ok(value.round() as u64)
}

/// Replaces values inside each blink interval by the straight line between
/// the boundary samples (last sample at or before onset, first at or after
/// offset); segments are clipped to the series extent. Idempotent.
pub fn suppress_blinks(series: &ActivitySeries, blinks: &[TemporalSegment]) -> ActivitySeries {
    let times = series.times();
    let mut values = series.values().to_vec();
    let n = times.len();
    for blink in blinks {
        if n < 2 {
            break;
        }
        let i0 = times.partition_point(|&t| t <= blink.onset_us).saturating_sub(1);
        let i1 = match times.partition_point(|&t| t < blink.offset_us) {
            i if i >= n => n - 1,
            i => i,
        };
        if i1 <= i0 + 1 {
            continue;
        }
        let (t0, t1) = (times[i0] as f64, times[i1] as f64);
        let (v0, v1) = (values[i0], values[i1]);
        for j in i0 + 1..i1 {
            values[j] = v0 + (v1 - v0) * (times[j] as f64 - t0) / (t1 - t0);
        }
    }
    series.with_values(values)
}

/// Saccade segmentation on the all-polarity activity: suppress blinks,
/// normalize by the post-suppression maximum, and keep prominent peaks with
/// a plausible half-prominence width. The emitted segment is exactly that
/// width interval; the output is disjoint and sorted by onset.
pub fn detect_saccades(
    series: &ActivitySeries,
    blinks: &[TemporalSegment],
    params: &SaccadeParams,
) -> Result<Vec<TemporalSegment>, DetectError> {
    if series.is_empty() {
        return Err(DetectError::EmptySeries);
    }
    let dt = series.uniform_dt_us().ok_or(DetectError::NotUniform)?;
    let suppressed = suppress_blinks(series, blinks);
    let max = suppressed.values().iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if max <= 0.0 {
        return Ok(Vec::new());
    }
    let norm: Vec<f64> = suppressed.values().iter().map(|v| v / max).collect();

    let t_start = series.first_t().expect("non-empty") as f64;
    let dt_f = dt as f64;
    let mut candidates: Vec<(f64, TemporalSegment)> = Vec::new();
    for p in find_peaks(&norm, params.peak_threshold, 0.5) {
        let width_us = p.width * dt_f;
        if width_us < params.min_width_us as f64 || width_us > params.max_width_us as f64 {
            continue;
        }
        let onset = (t_start + p.left_ip * dt_f).round() as u64;
        let offset = (t_start + p.right_ip * dt_f).round() as u64;
        if onset >= offset || offset - onset < params.min_segment_us {
            continue;
        }
        candidates.push((
            p.value,
            TemporalSegment {
                onset_us: onset,
                offset_us: offset,
                label: SegmentLabel::Saccade,
                score: p.value,
            },
        ));
    }
    Ok(resolve_overlaps(candidates))
}
