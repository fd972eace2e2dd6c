//! Link quality from heartbeat round trips.

use serde::{Deserialize, Serialize};

pub const DELAY_GAIN: f64 = 0.125;
pub const JITTER_GAIN: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkState {
    Up,
    Degraded,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkEstimate {
    pub delay_ms: f64,
    pub jitter_ms: f64,
    pub link_state: LinkState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Telemetry silence after which the link is DOWN.
    pub down_after_ms: u64,
    /// Smoothed round trip above which the link is DEGRADED.
    pub degraded_delay_ms: f64,
    pub degraded_jitter_ms: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            // three telemetry periods
            down_after_ms: 600,
            degraded_delay_ms: 500.0,
            degraded_jitter_ms: 100.0,
        }
    }
}

/// RTP-style smoothing: `delay += (s - delay) / 8`, then
/// `jitter += (|s - delay_before| - jitter) / 4`. The first sample seeds the
/// delay with jitter 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NetworkEstimator {
    pub config: EstimatorConfig,
    delay: Option<f64>,
    jitter: f64,
    last_telemetry_ms: Option<u64>,
}

impl NetworkEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        Self {
            config,
            ..Self::default()
        }
    }

    pub fn add_sample(&mut self, rtt_ms: f64) {
        if !rtt_ms.is_finite() || rtt_ms < 0.0 {
            return;
        }
        match self.delay {
            None => {
                self.delay = Some(rtt_ms);
                self.jitter = 0.0;
            }
            Some(d) => {
                let deviation = (rtt_ms - d).abs();
                self.delay = Some(d + DELAY_GAIN * (rtt_ms - d));
                self.jitter += JITTER_GAIN * (deviation - self.jitter);
            }
        }
    }

    pub fn telemetry_seen(&mut self, now_ms: u64) {
        self.last_telemetry_ms = Some(now_ms);
    }

    pub fn delay_ms(&self) -> f64 {
        self.delay.unwrap_or(0.0)
    }

    pub fn jitter_ms(&self) -> f64 {
        self.jitter
    }

    pub fn link_state(&self, now_ms: u64) -> LinkState {
        match self.last_telemetry_ms {
            Some(t) if now_ms.saturating_sub(t) <= self.config.down_after_ms => {
                if self.delay_ms() > self.config.degraded_delay_ms || self.jitter > self.config.degraded_jitter_ms {
                    LinkState::Degraded
                } else {
                    LinkState::Up
                }
            }
            _ => LinkState::Down,
        }
    }

    pub fn estimate(&self, now_ms: u64) -> NetworkEstimate {
        NetworkEstimate {
            delay_ms: self.delay_ms(),
            jitter_ms: self.jitter,
            link_state: self.link_state(now_ms),
        }
    }
}

/// Runs a fresh estimator over `samples`.
pub fn estimate_network(samples: &[f64]) -> (f64, f64) {
    let mut e = NetworkEstimator::default();
    for &s in samples {
        e.add_sample(s);
    }
    (e.delay_ms(), e.jitter_ms())
}
