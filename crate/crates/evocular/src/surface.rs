//! Time-surface frames: per-pixel exponential recency of the latest event.
//!
//! For each pixel and polarity the frame stores e^(-(t_ref - t)/τ) where t is
//! the latest event at or before t_ref; pixels that never fired hold 0, so
//! every populated value lies in (0, 1].

use crate::event::{EventStream, Polarity};

#[derive(Clone, Debug, PartialEq)]
pub struct SaeFrame {
    width: u16,
    height: u16,
    t_ref_us: u64,
    tau_us: f64,
    on: Vec<f64>,
    off: Vec<f64>,
}

impl SaeFrame {
    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn t_ref_us(&self) -> u64 {
        self.t_ref_us
    }

    pub fn tau_us(&self) -> f64 {
        self.tau_us
    }

    /// Row-major values (index `y*width + x`) for one polarity channel.
    pub fn channel(&self, polarity: Polarity) -> &[f64] {
        match polarity {
            Polarity::On => &self.on,
            Polarity::Off => &self.off,
        }
    }

    pub fn value(&self, polarity: Polarity, x: u16, y: u16) -> f64 {
        self.channel(polarity)[usize::from(y) * usize::from(self.width) + usize::from(x)]
    }

    /// Row-major CSV (one line per row, no header) for one polarity channel.
    pub fn channel_csv(&self, polarity: Polarity) -> String {
        let values = self.channel(polarity);
        let w = usize::from(self.width);
        let mut out = String::new();
        for row in values.chunks(w.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Builds the time surface at `t_ref_us`; events after the reference time are
/// ignored. An empty stream yields an all-zero frame.
pub fn sae_frame(stream: &EventStream, t_ref_us: u64, tau_us: f64) -> SaeFrame {
    assert!(tau_us > 0.0, "tau must be positive");
    let size = usize::from(stream.width()) * usize::from(stream.height());
    // Latest matching timestamp per pixel; events are time-ordered so the
    // last write at or before t_ref wins.
    let mut last_on: Vec<Option<u64>> = vec![None; size];
    let mut last_off: Vec<Option<u64>> = vec![None; size];
    for e in stream.events() {
        if e.t > t_ref_us {
            break;
        }
        let idx = usize::from(e.y) * usize::from(stream.width()) + usize::from(e.x);
        match e.polarity {
            Polarity::On => last_on[idx] = Some(e.t),
            Polarity::Off => last_off[idx] = Some(e.t),
        }
    }
    let decay = |last: &[Option<u64>]| -> Vec<f64> {
        last.iter()
            .map(|slot| match slot {
                Some(t) => (-((t_ref_us - t) as f64) / tau_us).exp(),
                None => 0.0,
            })
            .collect()
    };
    SaeFrame {
        width: stream.width(),
        height: stream.height(),
        t_ref_us,
        tau_us,
        on: decay(&last_on),
        off: decay(&last_off),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(t: u64, x: u16, y: u16, p: i64) -> Event {
        Event { t, x, y, polarity: Polarity::from_sign(p).unwrap() }
    }

    /// Brute force: scan all events per pixel/polarity, keep the max t <= t_ref.
    fn brute_force(stream: &EventStream, t_ref: u64, tau: f64, p: Polarity, x: u16, y: u16) -> f64 {
        stream
            .events()
            .iter()
            .filter(|e| e.polarity == p && e.x == x && e.y == y && e.t <= t_ref)
            .map(|e| e.t)
            .max()
            .map(|t| (-((t_ref - t) as f64) / tau).exp())
            .unwrap_or(0.0)
    }

    #[test]
    fn matches_brute_force_on_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(0..300);
            let mut t = 0u64;
            let events: Vec<Event> = (0..n)
                .map(|_| {
                    t += rng.gen_range(0..5_000);
                    Event {
                        t,
                        x: rng.gen_range(0..6),
                        y: rng.gen_range(0..5),
                        polarity: if rng.gen_bool(0.5) { Polarity::On } else { Polarity::Off },
                    }
                })
                .collect();
            let stream = EventStream::new(6, 5, events).unwrap();
            let t_ref = t / 2 + 1;
            let tau = rng.gen_range(1_000.0..100_000.0);
            let frame = sae_frame(&stream, t_ref, tau);
            for y in 0..5 {
                for x in 0..6 {
                    for p in [Polarity::On, Polarity::Off] {
                        let want = brute_force(&stream, t_ref, tau, p, x, y);
                        let got = frame.value(p, x, y);
                        assert!((got - want).abs() <= 1e-12, "({x},{y},{p:?}): {got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn event_at_reference_time_scores_one() {
        let stream = EventStream::new(4, 4, vec![ev(500, 2, 1, 1)]).unwrap();
        let frame = sae_frame(&stream, 500, 10_000.0);
        assert_eq!(frame.value(Polarity::On, 2, 1), 1.0);
        assert_eq!(frame.value(Polarity::Off, 2, 1), 0.0);
    }

    #[test]
    fn later_events_are_ignored_and_zero_means_never_fired() {
        let stream = EventStream::new(4, 4, vec![ev(100, 0, 0, 1), ev(900, 1, 1, 1)]).unwrap();
        let frame = sae_frame(&stream, 500, 10_000.0);
        assert!(frame.value(Polarity::On, 0, 0) > 0.0);
        assert_eq!(frame.value(Polarity::On, 1, 1), 0.0);
    }

    #[test]
    fn populated_values_lie_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut t = 0u64;
        let events: Vec<Event> = (0..500)
            .map(|_| {
                t += rng.gen_range(0..200);
                Event {
                    t,
                    x: rng.gen_range(0..8),
                    y: rng.gen_range(0..8),
                    polarity: if rng.gen_bool(0.5) { Polarity::On } else { Polarity::Off },
                }
            })
            .collect();
        let stream = EventStream::new(8, 8, events).unwrap();
        let frame = sae_frame(&stream, t, 50_000.0);
        for p in [Polarity::On, Polarity::Off] {
            for &v in frame.channel(p) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert!(frame.channel(Polarity::On).iter().any(|&v| v > 0.0));
    }

    #[test]
    fn csv_is_row_major() {
        let stream = EventStream::new(3, 2, vec![ev(0, 1, 0, 1), ev(0, 2, 1, 1)]).unwrap();
        let frame = sae_frame(&stream, 0, 1_000.0);
        assert_eq!(frame.channel_csv(Polarity::On), "0,1,0\n0,0,1\n");
    }
}
