//! Link impairment: size-dependent delay, loss, reordering and blackouts.
//!
//! Delays follow a clamped shifted exponential per message size:
//! `min + min(Exp(lambda), max - min)`, with `lambda` chosen so the mean is
//! the profile's `avg`. Rows are interpolated linearly by size.

mod profile;

pub use profile::{parse_profile, ProfileFile};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::ChannelClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetsimError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("interruption [{start}, {end}) overlaps an existing window")]
    OverlappingWindow { start: u64, end: u64 },
    #[error("interruption duration must be positive")]
    EmptyWindow,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub size_bytes: u32,
    pub min_ms: f64,
    pub avg_ms: f64,
    pub max_ms: f64,
}

impl DelayRow {
    pub const fn new(size_bytes: u32, min_ms: f64, avg_ms: f64, max_ms: f64) -> Self {
        Self {
            size_bytes,
            min_ms,
            avg_ms,
            max_ms,
        }
    }
}

/// Measured delays of a 3G Internet path by message size.
pub const TABLE_ONE: [DelayRow; 4] = [
    DelayRow::new(100, 79.0, 103.0, 189.0),
    DelayRow::new(500, 99.0, 129.0, 229.0),
    DelayRow::new(1000, 109.0, 140.0, 229.0),
    DelayRow::new(2000, 149.0, 255.0, 410.0),
];

/// Fixed encode/decode budget added to media frames on top of the link delay.
pub const DEFAULT_MEDIA_PIPELINE_MS: f64 = 1745.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub rows: Vec<DelayRow>,
    pub loss_rate: f64,
    pub reorder_rate: f64,
    pub seed: u64,
    pub media_pipeline_ms: f64,
}

impl Default for DelayProfile {
    fn default() -> Self {
        Self::field_trial()
    }
}

impl DelayProfile {
    pub fn field_trial() -> Self {
        Self {
            rows: TABLE_ONE.to_vec(),
            loss_rate: 0.0,
            reorder_rate: 0.0,
            seed: 1,
            media_pipeline_ms: DEFAULT_MEDIA_PIPELINE_MS,
        }
    }

    /// Every message takes exactly `ms`.
    pub fn constant(ms: f64) -> Self {
        Self {
            rows: vec![DelayRow::new(1, ms, ms, ms)],
            loss_rate: 0.0,
            reorder_rate: 0.0,
            seed: 1,
            media_pipeline_ms: 0.0,
        }
    }

    pub fn ideal() -> Self {
        Self::constant(0.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), NetsimError> {
        let bad = |m: &str| Err(NetsimError::InvalidProfile(m.to_string()));
        if self.rows.is_empty() {
            return bad("no delay rows");
        }
        for r in &self.rows {
            if !(r.min_ms.is_finite() && r.avg_ms.is_finite() && r.max_ms.is_finite()) {
                return bad("non-finite delay");
            }
            if !(0.0 <= r.min_ms && r.min_ms <= r.avg_ms && r.avg_ms <= r.max_ms) {
                return bad(&format!("row {}: need 0 <= min <= avg <= max", r.size_bytes));
            }
        }
        if self.rows.windows(2).any(|w| w[0].size_bytes >= w[1].size_bytes) {
            return bad("row sizes must be strictly increasing");
        }
        for (name, p) in [("loss", self.loss_rate), ("reorder", self.reorder_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} rate outside [0, 1]"));
            }
        }
        if !(self.media_pipeline_ms >= 0.0 && self.media_pipeline_ms.is_finite()) {
            return bad("media pipeline latency must be >= 0");
        }
        Ok(())
    }

    /// (min, avg, max) for a message size, interpolated between rows and
    /// clamped at the first and last.
    pub fn envelope(&self, size_bytes: usize) -> (f64, f64, f64) {
        let s = size_bytes as f64;
        let first = self.rows[0];
        let last = self.rows[self.rows.len() - 1];
        if s <= first.size_bytes as f64 {
            return (first.min_ms, first.avg_ms, first.max_ms);
        }
        if s >= last.size_bytes as f64 {
            return (last.min_ms, last.avg_ms, last.max_ms);
        }
        let i = self.rows.iter().position(|r| r.size_bytes as f64 > s).unwrap_or(1);
        let (a, b) = (self.rows[i - 1], self.rows[i]);
        let t = (s - a.size_bytes as f64) / (b.size_bytes - a.size_bytes) as f64;
        let lerp = |x: f64, y: f64| x + t * (y - x);
        (lerp(a.min_ms, b.min_ms), lerp(a.avg_ms, b.avg_ms), lerp(a.max_ms, b.max_ms))
    }
}

/// Mean of `min(Exp(lambda), cap)`.
pub fn clamped_exp_mean(lambda: f64, cap: f64) -> f64 {
    -(-lambda * cap).exp_m1() / lambda
}

/// Rate whose clamped mean is `target`, for `0 < target < cap`.
pub fn fit_rate(target: f64, cap: f64) -> Option<f64> {
    if !(target > 0.0 && target < cap) {
        return None;
    }
    // the clamped mean falls monotonically from cap (lambda -> 0) to 0
    let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
    while clamped_exp_mean(hi, cap) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if clamped_exp_mean(mid, cap) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo * hi).sqrt())
}

fn sample_excess<R: Rng + ?Sized>(avg_excess: f64, cap: f64, rng: &mut R) -> f64 {
    if cap <= 0.0 || avg_excess <= 0.0 {
        return 0.0;
    }
    match fit_rate(avg_excess, cap) {
        Some(lambda) => {
            let x: f64 = Exp::new(lambda).expect("positive rate").sample(rng);
            x.min(cap)
        }
        // avg equals max: all mass at the cap
        None => cap,
    }
}

/// One-way delay in milliseconds for a message of `size_bytes`.
pub fn sample_delay<R: Rng + ?Sized>(size_bytes: usize, profile: &DelayProfile, rng: &mut R) -> f64 {
    let (min, avg, max) = profile.envelope(size_bytes);
    // min + (max - min) can round one ulp past max
    (min + sample_excess(avg - min, max - min, rng)).clamp(min, max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkEventKind {
    InterruptStart,
    InterruptEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEvent {
    pub kind: LinkEventKind,
    pub at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: u64,
    pub end: u64,
}

impl Window {
    fn contains(&self, t: f64) -> bool {
        t >= self.start as f64 && t < self.end as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Loss,
    Interrupted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transmit {
    /// Scheduled for delivery at this virtual time (ms).
    Scheduled(f64),
    Dropped(DropReason),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipeStats {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub blacked_out: u64,
}

struct Pending<T> {
    at: f64,
    order: u64,
    /// Departure time, kept for datagrams so a window scheduled later still cuts them.
    datagram_sent: Option<f64>,
    item: T,
}

impl<T> PartialEq for Pending<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Pending<T> {}

impl<T> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Pending<T> {
    // reversed: BinaryHeap is a max-heap and we want the earliest first
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then(other.order.cmp(&self.order))
    }
}

/// One direction of an impaired link on the virtual clock.
pub struct Pipe<T> {
    profile: DelayProfile,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Pending<T>>,
    windows: Vec<Window>,
    last_stream_arrival: f64,
    order: u64,
    stats: PipeStats,
}

impl<T> Pipe<T> {
    pub fn new(profile: DelayProfile) -> Result<Self, NetsimError> {
        profile.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(profile.seed);
        Ok(Self {
            profile,
            rng,
            queue: BinaryHeap::new(),
            windows: Vec::new(),
            last_stream_arrival: f64::NEG_INFINITY,
            order: 0,
            stats: PipeStats::default(),
        })
    }

    pub fn profile(&self) -> &DelayProfile {
        &self.profile
    }

    pub fn stats(&self) -> PipeStats {
        self.stats
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn schedule_interruption(&mut self, start_ms: u64, duration_ms: u64) -> Result<(), NetsimError> {
        if duration_ms == 0 {
            return Err(NetsimError::EmptyWindow);
        }
        let w = Window {
            start: start_ms,
            end: start_ms + duration_ms,
        };
        if self.windows.iter().any(|o| w.start < o.end && o.start < w.end) {
            return Err(NetsimError::OverlappingWindow {
                start: w.start,
                end: w.end,
            });
        }
        self.windows.push(w);
        self.windows.sort_by_key(|w| w.start);
        Ok(())
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn events(&self) -> Vec<LinkEvent> {
        self.windows
            .iter()
            .flat_map(|w| {
                [
                    LinkEvent {
                        kind: LinkEventKind::InterruptStart,
                        at: w.start,
                    },
                    LinkEvent {
                        kind: LinkEventKind::InterruptEnd,
                        at: w.end,
                    },
                ]
            })
            .collect()
    }

    pub fn is_interrupted(&self, t_ms: f64) -> bool {
        self.windows.iter().any(|w| w.contains(t_ms))
    }

    fn window_end_at(&self, t: f64) -> Option<f64> {
        self.windows.iter().find(|w| w.contains(t)).map(|w| w.end as f64)
    }

    /// Hands a message of `size_bytes` to the link at virtual time `now_ms`.
    pub fn transmit(&mut self, now_ms: u64, class: ChannelClass, size_bytes: usize, item: T) -> Transmit {
        self.stats.sent += 1;
        let now = now_ms as f64;
        let delay = sample_delay(size_bytes, &self.profile, &mut self.rng);
        let mut datagram_sent = None;
        let at = match class {
            ChannelClass::AdminCommand => {
                // a stream waits out blackouts and never overtakes itself
                let mut depart = now;
                if let Some(end) = self.window_end_at(depart) {
                    depart = end;
                }
                let mut at = depart + delay;
                while let Some(end) = self.window_end_at(at) {
                    at = end;
                }
                at = at.max(self.last_stream_arrival);
                self.last_stream_arrival = at;
                at
            }
            ChannelClass::Telemetry | ChannelClass::Media => {
                let loss_roll: f64 = self.rng.random();
                let reorder_roll: f64 = self.rng.random();
                if self.is_interrupted(now) {
                    self.stats.blacked_out += 1;
                    return Transmit::Dropped(DropReason::Interrupted);
                }
                let mut at = now + delay;
                if reorder_roll < self.profile.reorder_rate {
                    let (min, _, _) = self.profile.envelope(size_bytes);
                    at += sample_delay(size_bytes, &self.profile, &mut self.rng) - min;
                }
                if class == ChannelClass::Media {
                    at += self.profile.media_pipeline_ms;
                }
                if self.is_interrupted(at) || self.windows.iter().any(|w| now < w.start as f64 && at >= w.end as f64)
                {
                    // in flight when the link went down
                    self.stats.blacked_out += 1;
                    return Transmit::Dropped(DropReason::Interrupted);
                }
                if loss_roll < self.profile.loss_rate {
                    self.stats.lost += 1;
                    return Transmit::Dropped(DropReason::Loss);
                }
                datagram_sent = Some(now);
                at
            }
        };
        self.order += 1;
        self.queue.push(Pending {
            at,
            order: self.order,
            datagram_sent,
            item,
        });
        Transmit::Scheduled(at)
    }

    fn flight_cut(&self, sent: f64, at: f64) -> bool {
        self.windows.iter().any(|w| sent < w.end as f64 && at >= w.start as f64)
    }

    /// Everything due at or before `now_ms`, in arrival order.
    pub fn poll(&mut self, now_ms: u64) -> Vec<T> {
        self.poll_timed(now_ms).into_iter().map(|(_, item)| item).collect()
    }

    /// Like [`Pipe::poll`] but keeps the scheduled arrival time.
    pub fn poll_timed(&mut self, now_ms: u64) -> Vec<(f64, T)> {
        let mut out = Vec::new();
        while self.queue.peek().is_some_and(|p| p.at <= now_ms as f64) {
            let p = self.queue.pop().expect("peeked");
            if p.datagram_sent.is_some_and(|sent| self.flight_cut(sent, p.at)) {
                // a window scheduled after departure
                self.stats.blacked_out += 1;
                continue;
            }
            out.push((p.at, p.item));
        }
        self.stats.delivered += out.len() as u64;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_interpolates_and_clamps() {
        let p = DelayProfile::field_trial();
        assert_eq!(p.envelope(50), (79.0, 103.0, 189.0));
        assert_eq!(p.envelope(500), (99.0, 129.0, 229.0));
        assert_eq!(p.envelope(300), (89.0, 116.0, 209.0));
        assert_eq!(p.envelope(750), (104.0, 134.5, 229.0));
        assert_eq!(p.envelope(60_000), (149.0, 255.0, 410.0));
    }

    #[test]
    fn fitted_rate_reproduces_mean() {
        for (target, cap) in [(24.0, 110.0), (30.0, 130.0), (31.0, 120.0), (106.0, 261.0), (1.0, 1000.0)] {
            let l = fit_rate(target, cap).unwrap();
            assert!((clamped_exp_mean(l, cap) - target).abs() < 1e-9);
        }
        assert_eq!(fit_rate(0.0, 10.0), None);
        assert_eq!(fit_rate(10.0, 10.0), None);
    }

    #[test]
    fn degenerate_row_is_constant() {
        let p = DelayProfile::constant(129.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(sample_delay(500, &p, &mut rng), 129.0);
        }
    }

    #[test]
    fn avg_at_max_puts_all_mass_at_max() {
        let mut p = DelayProfile::constant(0.0);
        p.rows = vec![DelayRow::new(1, 10.0, 20.0, 20.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(sample_delay(5, &p, &mut rng), 20.0);
    }

    #[test]
    fn lossless_pipe_delivers_everything() {
        let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
        for i in 0..500u64 {
            pipe.transmit(i * 10, ChannelClass::Telemetry, 500, i);
        }
        let got = pipe.poll(1_000_000);
        assert_eq!(got.len(), 500);
    }

    #[test]
    fn loss_rate_is_binomial() {
        let mut prof = DelayProfile::field_trial();
        prof.loss_rate = 0.1;
        let mut pipe = Pipe::new(prof.with_seed(99)).unwrap();
        for i in 0..10_000u64 {
            pipe.transmit(i, ChannelClass::Telemetry, 500, ());
        }
        let n = pipe.poll(u64::MAX).len() as i64;
        // sd = sqrt(10000 * 0.1 * 0.9) = 30
        assert!((n - 9000).abs() <= 200, "{n}");
    }

    #[test]
    fn blackout_drops_datagrams_and_holds_stream() {
        let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
        pipe.schedule_interruption(10_000, 10_000).unwrap();
        assert_eq!(
            pipe.transmit(12_000, ChannelClass::Telemetry, 60, "hb"),
            Transmit::Dropped(DropReason::Interrupted)
        );
        let a = pipe.transmit(15_000, ChannelClass::AdminCommand, 20, "first");
        let b = pipe.transmit(15_001, ChannelClass::AdminCommand, 20, "second");
        match (a, b) {
            (Transmit::Scheduled(ta), Transmit::Scheduled(tb)) => {
                assert!(ta >= 20_000.0 && tb >= ta);
            }
            other => panic!("{other:?}"),
        }
        assert!(pipe.poll(19_999).is_empty());
        assert_eq!(pipe.poll(30_000), ["first", "second"]);
    }

    #[test]
    fn nothing_arrives_inside_a_window() {
        let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
        pipe.schedule_interruption(1_000, 2_000).unwrap();
        let mut arrivals = Vec::new();
        for t in (0..5_000).step_by(10) {
            for class in [ChannelClass::Telemetry, ChannelClass::Media, ChannelClass::AdminCommand] {
                if let Transmit::Scheduled(at) = pipe.transmit(t, class, 500, ()) {
                    arrivals.push(at);
                }
            }
        }
        assert!(arrivals.iter().all(|&a| !(1_000.0..3_000.0).contains(&a)));
    }

    #[test]
    fn late_window_cuts_datagrams_in_flight() {
        let mut pipe = Pipe::new(DelayProfile::constant(100.0)).unwrap();
        pipe.transmit(0, ChannelClass::Telemetry, 100, 1);
        pipe.transmit(0, ChannelClass::AdminCommand, 100, 2);
        pipe.schedule_interruption(50, 100).unwrap();
        // the datagram is gone, the stream message was queued before the window existed
        assert_eq!(pipe.poll(1_000), [2]);
        assert_eq!(pipe.stats().blacked_out, 1);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let mut pipe: Pipe<()> = Pipe::new(DelayProfile::field_trial()).unwrap();
        pipe.schedule_interruption(10_000, 5_000).unwrap();
        assert!(matches!(
            pipe.schedule_interruption(12_000, 5_000),
            Err(NetsimError::OverlappingWindow { .. })
        ));
        pipe.schedule_interruption(15_000, 1_000).unwrap();
        let kinds: Vec<_> = pipe.events().iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            [
                LinkEventKind::InterruptStart,
                LinkEventKind::InterruptEnd,
                LinkEventKind::InterruptStart,
                LinkEventKind::InterruptEnd
            ]
        );
    }

    #[test]
    fn stream_preserves_order() {
        let mut pipe = Pipe::new(DelayProfile::field_trial().with_seed(5)).unwrap();
        for i in 0..2000u32 {
            pipe.transmit(i as u64, ChannelClass::AdminCommand, 50, i);
        }
        let got = pipe.poll(u64::MAX);
        assert_eq!(got, (0..2000).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_trace() {
        let run = || {
            let mut prof = DelayProfile::field_trial().with_seed(77);
            prof.loss_rate = 0.05;
            prof.reorder_rate = 0.2;
            let mut pipe = Pipe::new(prof).unwrap();
            (0..300u64)
                .map(|i| pipe.transmit(i * 7, ChannelClass::Telemetry, 100 + i as usize, i))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn media_adds_pipeline_latency() {
        let mut pipe = Pipe::new(DelayProfile::field_trial()).unwrap();
        let mut sum = 0.0;
        for i in 0..2000u64 {
            match pipe.transmit(i, ChannelClass::Media, 20_000, ()) {
                Transmit::Scheduled(at) => sum += at - i as f64,
                Transmit::Dropped(_) => panic!(),
            }
        }
        let mean = sum / 2000.0;
        assert!((mean - 2000.0).abs() < 0.15 * 2000.0, "{mean}");
    }
}
