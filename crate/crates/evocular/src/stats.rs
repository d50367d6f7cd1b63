//! Windowed stream statistics and their per-clip aggregation.
//!
//! The stream is cut into consecutive, non-overlapping windows of fixed
//! length aligned to the first event. Per-pixel inter-event intervals are
//! taken between consecutive *distinct* timestamps at a pixel, so
//! simultaneous events at one pixel count as a single arrival and every
//! interval is strictly positive. That makes the replay signature exact: if
//! all timestamps are multiples of a frame period, every interval is a
//! positive multiple of it.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::event::{EventStream, Polarity, RoiLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("cannot window an empty stream")]
    EmptyStream,
    #[error("no windows to aggregate")]
    NoWindows,
}

/// Statistics of one analysis window `[t_start, t_start + window_len)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub t_start: u64,
    pub window_len: u64,
    /// Events per second over the window.
    pub event_rate: f64,
    /// (N+ - N-) / (N+ + N-); absent for an empty window.
    pub polarity_balance: Option<f64>,
    /// Median over pixels of each pixel's median inter-event interval (µs);
    /// absent unless some pixel saw at least two distinct timestamps.
    pub median_pixel_iei: Option<f64>,
}

/// Per-clip aggregation: mean and population standard deviation of each
/// window statistic, taken over the windows where it is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipFeatures {
    pub roi_label: RoiLabel,
    pub event_rate_mean: f64,
    pub event_rate_std: f64,
    pub polarity_balance_mean: Option<f64>,
    pub polarity_balance_std: Option<f64>,
    pub median_pixel_iei_mean: Option<f64>,
    pub median_pixel_iei_std: Option<f64>,
    pub n_windows: usize,
}

/// Cuts the stream into windows of `window_len_us` starting at the first
/// event and covering through the last.
pub fn window_stats(
    stream: &EventStream,
    window_len_us: u64,
) -> Result<Vec<WindowStats>, StatsError> {
    assert!(window_len_us > 0, "window length must be positive");
    let (first, last) = match (stream.first_t(), stream.last_t()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(StatsError::EmptyStream),
    };
    let n_windows = ((last - first) / window_len_us) as usize + 1;
    let events = stream.events();
    let mut out = Vec::with_capacity(n_windows);
    let mut lo = 0usize;
    for k in 0..n_windows {
        let w_start = first + k as u64 * window_len_us;
        let w_end = w_start + window_len_us;
        let hi = lo + events[lo..].partition_point(|e| e.t < w_end);
        out.push(window_from_slice(&events[lo..hi], w_start, window_len_us));
        lo = hi;
    }
    Ok(out)
}

fn window_from_slice(events: &[crate::event::Event], t_start: u64, window_len: u64) -> WindowStats {
    let n = events.len();
    let event_rate = n as f64 * 1e6 / window_len as f64;
    let polarity_balance = if n == 0 {
        None
    } else {
        let pos = events.iter().filter(|e| e.polarity == Polarity::On).count() as f64;
        let neg = n as f64 - pos;
        Some((pos - neg) / (pos + neg))
    };

    // Per-pixel distinct timestamps, in stream (= time) order.
    let mut per_pixel: HashMap<(u16, u16), Vec<u64>> = HashMap::new();
    for e in events {
        let ts = per_pixel.entry((e.x, e.y)).or_default();
        if ts.last() != Some(&e.t) {
            ts.push(e.t);
        }
    }
    let mut pixel_medians: Vec<f64> = per_pixel
        .values()
        .filter(|ts| ts.len() >= 2)
        .map(|ts| {
            let mut ieis: Vec<f64> =
                ts.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
            median_in_place(&mut ieis)
        })
        .collect();
    let median_pixel_iei = if pixel_medians.is_empty() {
        None
    } else {
        Some(median_in_place(&mut pixel_medians))
    };

    WindowStats { t_start, window_len, event_rate, polarity_balance, median_pixel_iei }
}

/// Median with the even-count convention of averaging the two middle values.
fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN intervals"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn clip_features(windows: &[WindowStats], roi_label: RoiLabel) -> Result<ClipFeatures, StatsError> {
    if windows.is_empty() {
        return Err(StatsError::NoWindows);
    }
    let rates: Vec<f64> = windows.iter().map(|w| w.event_rate).collect();
    let (event_rate_mean, event_rate_std) = mean_std(&rates).expect("windows is non-empty");
    let balances: Vec<f64> = windows.iter().filter_map(|w| w.polarity_balance).collect();
    let (polarity_balance_mean, polarity_balance_std) = split(mean_std(&balances));
    let ieis: Vec<f64> = windows.iter().filter_map(|w| w.median_pixel_iei).collect();
    let (median_pixel_iei_mean, median_pixel_iei_std) = split(mean_std(&ieis));
    Ok(ClipFeatures {
        roi_label,
        event_rate_mean,
        event_rate_std,
        polarity_balance_mean,
        polarity_balance_std,
        median_pixel_iei_mean,
        median_pixel_iei_std,
        n_windows: windows.len(),
    })
}

fn split(pair: Option<(f64, f64)>) -> (Option<f64>, Option<f64>) {
    match pair {
        Some((m, s)) => (Some(m), Some(s)),
        None => (None, None),
    }
}

/// Mean and population standard deviation; `None` for an empty slice.
fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
