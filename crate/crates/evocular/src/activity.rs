//! Temporal activity profiles.
//!
//! The activity of a polarity channel is an exponentially decaying event
//! counter: each matching event adds 1/µ, and between events the value decays
//! by e^(-Δt/τ). Evaluated after the increment at every event timestamp this
//! equals Σ_{t_k <= t} e^(-(t - t_k)/τ) / µ over the channel's events, which
//! is what the oracle tests assert against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{EventStream, Polarity};

/// Which events feed the profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    On,
    Off,
    All,
}

impl Channel {
    pub fn matches(self, polarity: Polarity) -> bool {
        match self {
            Channel::On => polarity == Polarity::On,
            Channel::Off => polarity == Polarity::Off,
            Channel::All => true,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActivityError {
    #[error("series has no samples")]
    EmptySeries,
    #[error("sample times must be strictly increasing")]
    NonIncreasingTimes,
    #[error("series is not uniform at the declared step")]
    NotUniform,
}

/// A sampled activity curve. Sample times are strictly increasing; when
/// `uniform_dt_us` is set, consecutive times differ by exactly that step.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivitySeries {
    channel: Channel,
    tau_us: f64,
    mu: f64,
    times: Vec<u64>,
    values: Vec<f64>,
    uniform_dt_us: Option<u64>,
}

impl ActivitySeries {
    /// Checked constructor for externally assembled series.
    pub fn from_parts(
        channel: Channel,
        tau_us: f64,
        mu: f64,
        times: Vec<u64>,
        values: Vec<f64>,
        uniform_dt_us: Option<u64>,
    ) -> Result<ActivitySeries, ActivityError> {
        assert!(tau_us > 0.0, "tau must be positive");
        assert!(mu > 0.0, "mu must be positive");
        assert_eq!(times.len(), values.len(), "times and values must pair up");
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ActivityError::NonIncreasingTimes);
        }
        if let Some(dt) = uniform_dt_us {
            assert!(dt > 0, "uniform step must be positive");
            if times.windows(2).any(|w| w[1] - w[0] != dt) {
                return Err(ActivityError::NotUniform);
            }
        }
        Ok(ActivitySeries { channel, tau_us, mu, times, values, uniform_dt_us })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn tau_us(&self) -> f64 {
        self.tau_us
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn uniform_dt_us(&self) -> Option<u64> {
        self.uniform_dt_us
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_t(&self) -> Option<u64> {
        self.times.first().copied()
    }

    pub fn last_t(&self) -> Option<u64> {
        self.times.last().copied()
    }

    /// Replaces the values, keeping the grid. Lengths must match.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> ActivitySeries {
        assert_eq!(values.len(), self.values.len());
        ActivitySeries { values, ..self.clone() }
    }

    /// CSV export with header `t_us,a`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_us,a\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Activity profile of `channel` over the stream: one sample per distinct
/// matching timestamp, valued after all increments at that timestamp.
/// An empty channel yields an empty series (not an error).
pub fn activity_profile(
    stream: &EventStream,
    channel: Channel,
    tau_us: f64,
    mu: f64,
) -> ActivitySeries {
    assert!(tau_us > 0.0, "tau must be positive");
    assert!(mu > 0.0, "mu must be positive");
    let mut times: Vec<u64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut a = 0.0f64;
    let mut last_t: Option<u64> = None;
    for e in stream.events() {
        if !channel.matches(e.polarity) {
            continue;
        }
        a = match last_t {
            None => 1.0 / mu,
            Some(prev) => a * (-((e.t - prev) as f64) / tau_us).exp() + 1.0 / mu,
        };
        if last_t == Some(e.t) {
            *values.last_mut().expect("sample exists for repeated timestamp") = a;
        } else {
            times.push(e.t);
            values.push(a);
        }
        last_t = Some(e.t);
    }
    ActivitySeries { channel, tau_us, mu, times, values, uniform_dt_us: None }
}

/// Resamples onto the uniform grid spanning the series' own extent.
pub fn resample_activity(
    series: &ActivitySeries,
    dt_us: u64,
) -> Result<ActivitySeries, ActivityError> {
    let (t0, t1) = match (series.first_t(), series.last_t()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(ActivityError::EmptySeries),
    };
    resample_activity_over(series, dt_us, t0, t1)
}

/// Resamples onto the grid `t0 + k*dt` for `k = 0 ..= (t1-t0)/dt`.
///
/// Grid points before the first sample are 0 (no events yet); points between
/// samples interpolate linearly; points after the last sample decay
/// exponentially from the last value with the series' τ.
pub fn resample_activity_over(
    series: &ActivitySeries,
    dt_us: u64,
    t0: u64,
    t1: u64,
) -> Result<ActivitySeries, ActivityError> {
    assert!(dt_us > 0, "dt must be positive");
    assert!(t1 >= t0, "grid end must not precede start");
    if series.is_empty() {
        return Err(ActivityError::EmptySeries);
    }
    let times_in = series.times();
    let values_in = series.values();
    let first = times_in[0];
    let last = *times_in.last().expect("non-empty");
    let last_value = *values_in.last().expect("non-empty");

    let steps = (t1 - t0) / dt_us;
    let mut times = Vec::with_capacity(steps as usize + 1);
    let mut values = Vec::with_capacity(steps as usize + 1);
    // Index of the first input sample with time >= t; advanced monotonically.
    let mut hi = 0usize;
    for k in 0..=steps {
        let t = t0 + k * dt_us;
        let v = if t < first {
            0.0
        } else if t > last {
            last_value * (-((t - last) as f64) / series.tau_us()).exp()
        } else {
            while times_in[hi] < t {
                hi += 1;
            }
            if times_in[hi] == t {
                values_in[hi]
            } else {
                let lo = hi - 1;
                let span = (times_in[hi] - times_in[lo]) as f64;
                let frac = (t - times_in[lo]) as f64 / span;
                values_in[lo] + frac * (values_in[hi] - values_in[lo])
            }
        };
        times.push(t);
        values.push(v);
    }
    Ok(ActivitySeries {
        channel: series.channel(),
        tau_us: series.tau_us(),
        mu: series.mu(),
        times,
        values,
        uniform_dt_us: Some(dt_us),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stream_from_times(on: &[u64], off: &[u64]) -> EventStream {
        let mut events: Vec<Event> = on
            .iter()
            .map(|&t| Event { t, x: 0, y: 0, polarity: Polarity::On })
            .chain(off.iter().map(|&t| Event { t, x: 1, y: 0, polarity: Polarity::Off }))
            .collect();
        events.sort_by_key(|e| e.t);
        EventStream::new(4, 4, events).unwrap()
    }

    /// Brute-force closed form: Σ over matching events at or before t.
    fn brute_force(stream: &EventStream, channel: Channel, tau: f64, mu: f64, t: u64) -> f64 {
        stream
            .events()
            .iter()
            .filter(|e| channel.matches(e.polarity) && e.t <= t)
            .map(|e| (-((t - e.t) as f64) / tau).exp() / mu)
            .sum()
    }

    #[test]
    fn profile_matches_brute_force_on_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = rng.gen_range(1..400);
            let mut t = 0u64;
            let events: Vec<Event> = (0..n)
                .map(|_| {
                    t += rng.gen_range(0..20_000);
                    Event {
                        t,
                        x: rng.gen_range(0..8),
                        y: rng.gen_range(0..8),
                        polarity: if rng.gen_bool(0.5) { Polarity::On } else { Polarity::Off },
                    }
                })
                .collect();
            let stream = EventStream::new(8, 8, events).unwrap();
            let tau = rng.gen_range(1_000.0..50_000.0);
            let mu = rng.gen_range(0.5..4.0);
            for channel in [Channel::On, Channel::Off, Channel::All] {
                let series = activity_profile(&stream, channel, tau, mu);
                for (&st, &sv) in series.times().iter().zip(series.values()) {
                    let want = brute_force(&stream, channel, tau, mu, st);
                    assert!(
                        (sv - want).abs() <= 1e-9 * want.abs().max(1.0),
                        "channel {channel:?} at t={st}: {sv} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn repeated_timestamps_collapse_to_final_value() {
        let stream = stream_from_times(&[100, 100, 100], &[]);
        let series = activity_profile(&stream, Channel::On, 10_000.0, 1.0);
        assert_eq!(series.times(), &[100]);
        assert!((series.values()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_events_one_tau_apart() {
        // Second sample = e^{-1} + 1 with µ=1.
        let stream = stream_from_times(&[0, 10_000], &[]);
        let series = activity_profile(&stream, Channel::On, 10_000.0, 1.0);
        assert_eq!(series.times(), &[0, 10_000]);
        assert!((series.values()[0] - 1.0).abs() < 1e-15);
        assert!((series.values()[1] - ((-1.0f64).exp() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn mu_scales_increments() {
        let stream = stream_from_times(&[0], &[]);
        let series = activity_profile(&stream, Channel::On, 10_000.0, 4.0);
        assert!((series.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn empty_channel_yields_empty_series() {
        let stream = stream_from_times(&[10, 20], &[]);
        let series = activity_profile(&stream, Channel::Off, 10_000.0, 1.0);
        assert!(series.is_empty());
        assert_eq!(resample_activity(&series, 1_000).unwrap_err(), ActivityError::EmptySeries);
    }

    #[test]
    fn all_channel_equals_union_of_polarities_at_event_times() {
        let stream = stream_from_times(&[0, 5_000, 9_000], &[2_000, 9_000]);
        let all = activity_profile(&stream, Channel::All, 10_000.0, 1.0);
        for (&t, &v) in all.times().iter().zip(all.values()) {
            let want = brute_force(&stream, Channel::All, 10_000.0, 1.0, t);
            assert!((v - want).abs() < 1e-12);
        }
        assert_eq!(all.len(), 4); // 0, 2000, 5000, 9000 (tie collapsed)
    }

    #[test]
    fn between_events_the_decayed_value_strictly_decreases() {
        let stream = stream_from_times(&[0, 50_000], &[]);
        let series = activity_profile(&stream, Channel::On, 10_000.0, 1.0);
        let v0 = series.values()[0];
        let mut prev = f64::INFINITY;
        for dt in [1u64, 5_000, 20_000, 49_999] {
            let decayed = v0 * (-(dt as f64) / 10_000.0).exp();
            assert!(decayed < prev && decayed > 0.0);
            prev = decayed;
        }
    }

    #[test]
    fn resample_linear_interior_matches_example() {
        let series = ActivitySeries::from_parts(
            Channel::All,
            10_000.0,
            1.0,
            vec![0, 4_000],
            vec![0.0, 1.0],
            None,
        )
        .unwrap();
        let uniform = resample_activity(&series, 2_000).unwrap();
        assert_eq!(uniform.times(), &[0, 2_000, 4_000]);
        assert_eq!(uniform.values(), &[0.0, 0.5, 1.0]);
        assert_eq!(uniform.uniform_dt_us(), Some(2_000));
    }

    #[test]
    fn resample_same_grid_is_identity() {
        let series = ActivitySeries::from_parts(
            Channel::On,
            5_000.0,
            1.0,
            vec![100, 1_100, 2_100, 3_100],
            vec![1.0, 0.4, 2.2, 0.9],
            Some(1_000),
        )
        .unwrap();
        let again = resample_activity(&series, 1_000).unwrap();
        assert_eq!(again.times(), series.times());
        assert_eq!(again.values(), series.values());
    }

    #[test]
    fn resample_over_extends_with_zeros_then_decay() {
        let tau = 10_000.0;
        let series =
            ActivitySeries::from_parts(Channel::On, tau, 1.0, vec![10_000, 20_000], vec![2.0, 4.0], None)
                .unwrap();
        let uniform = resample_activity_over(&series, 5_000, 0, 40_000).unwrap();
        assert_eq!(uniform.times(), &[0, 5_000, 10_000, 15_000, 20_000, 25_000, 30_000, 35_000, 40_000]);
        let v = uniform.values();
        assert_eq!(&v[0..2], &[0.0, 0.0]); // before the first sample
        assert_eq!(v[2], 2.0);
        assert!((v[3] - 3.0).abs() < 1e-12); // linear midpoint
        assert_eq!(v[4], 4.0);
        for (i, &dt) in [5_000u64, 10_000, 15_000, 20_000].iter().enumerate() {
            let want = 4.0 * (-(dt as f64) / tau).exp();
            assert!((v[5 + i] - want).abs() < 1e-12, "decay tail at +{dt}");
        }
    }

    #[test]
    fn resample_grid_never_exceeds_end() {
        let series =
            ActivitySeries::from_parts(Channel::On, 1_000.0, 1.0, vec![0, 10_500], vec![1.0, 1.0], None)
                .unwrap();
        let uniform = resample_activity(&series, 3_000).unwrap();
        assert_eq!(uniform.times(), &[0, 3_000, 6_000, 9_000]);
    }

    #[test]
    fn from_parts_validates_ordering_and_uniformity() {
        assert_eq!(
            ActivitySeries::from_parts(Channel::On, 1.0, 1.0, vec![5, 5], vec![0.0, 0.0], None)
                .unwrap_err(),
            ActivityError::NonIncreasingTimes
        );
        assert_eq!(
            ActivitySeries::from_parts(Channel::On, 1.0, 1.0, vec![0, 10, 25], vec![0.0; 3], Some(10))
                .unwrap_err(),
            ActivityError::NotUniform
        );
    }

    #[test]
    fn csv_export_shape() {
        let series =
            ActivitySeries::from_parts(Channel::All, 1.0, 1.0, vec![1, 2], vec![0.5, 1.5], None)
                .unwrap();
        assert_eq!(series.to_csv(), "t_us,a\n1,0.5\n2,1.5\n");
    }
}
