//! Ground-truth path versus the path the operator sees.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::TrajectoryPoint;
use crate::world::Pose2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t_ms: u64,
    pub x: f64,
    pub y: f64,
}

impl PathPoint {
    fn from_pose(t_ms: u64, p: &Pose2D) -> Self {
        Self { t_ms, x: p.x, y: p.y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub truth: Vec<PathPoint>,
    pub remote: Vec<PathPoint>,
    /// Largest |x_truth - x_remote| over the compared instants.
    pub max_dx: f64,
    pub max_dy: f64,
    pub compared: usize,
}

/// Linear interpolation of a time-ordered path at `t`; `None` outside it.
pub fn interpolate(path: &[PathPoint], t_ms: u64) -> Option<(f64, f64)> {
    let k = path.partition_point(|p| p.t_ms < t_ms);
    let b = path.get(k)?;
    if b.t_ms == t_ms {
        return Some((b.x, b.y));
    }
    let a = path.get(k.checked_sub(1)?)?;
    let f = (t_ms - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
    Some((a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)))
}

/// Compares the truth trace against the operator-side path rebuilt from
/// telemetry. The remote path is interpolated linearly between telemetry
/// samples at each truth instant it spans.
pub fn record_paths(truth: &[(u64, Pose2D)], remote: &[TrajectoryPoint]) -> PathReport {
    let truth: Vec<PathPoint> = truth.iter().map(|(t, p)| PathPoint::from_pose(*t, p)).collect();
    let remote: Vec<PathPoint> = remote.iter().map(|r| PathPoint::from_pose(r.t_ms, &r.pose)).collect();
    let mut max_dx: f64 = 0.0;
    let mut max_dy: f64 = 0.0;
    let mut compared = 0;
    for p in &truth {
        if let Some((x, y)) = interpolate(&remote, p.t_ms) {
            max_dx = max_dx.max((p.x - x).abs());
            max_dy = max_dy.max((p.y - y).abs());
            compared += 1;
        }
    }
    PathReport {
        truth,
        remote,
        max_dx,
        max_dy,
        compared,
    }
}

impl PathReport {
    /// `path,t_ms,x,y` rows, truth first.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,t_ms,x,y\n");
        for (name, path) in [("truth", &self.truth), ("remote", &self.remote)] {
            for p in path {
                let _ = writeln!(s, "{name},{},{:.4},{:.4}", p.t_ms, p.x, p.y);
            }
        }
        s
    }
}

/// What the display showed at one render instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplaySample {
    pub render_ms: u64,
    pub shown: TrajectoryPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagReport {
    /// Mean age of the displayed pose at render time.
    pub mean_latency_ms: f64,
    /// Mean along-track distance from the displayed pose to the true pose.
    pub mean_along_track_m: f64,
    pub samples: usize,
}

impl LagReport {
    /// Along-track lag predicted for constant speed `v`.
    pub fn predicted_m(&self, v: f64) -> f64 {
        v * self.mean_latency_ms / 1000.0
    }
}

/// Measures how far the display trails the robot along its heading.
pub fn lag_report(truth: &[(u64, Pose2D)], shown: &[DisplaySample]) -> LagReport {
    lag_report_within(truth, shown, &[(0, u64::MAX)])
}

/// Like [`lag_report`], counting only renders whose shown sample and render
/// instant both fall inside one of `windows` (e.g. steady straight legs).
pub fn lag_report_within(truth: &[(u64, Pose2D)], shown: &[DisplaySample], windows: &[(u64, u64)]) -> LagReport {
    let mut latency = 0.0;
    let mut along = 0.0;
    let mut n = 0usize;
    for d in shown {
        if !windows.iter().any(|&(a, b)| d.shown.t_ms >= a && d.render_ms <= b) {
            continue;
        }
        let k = truth.partition_point(|(t, _)| *t < d.render_ms);
        let Some((t, p)) = truth.get(k) else { continue };
        if *t != d.render_ms {
            continue;
        }
        let heading = p.heading();
        along += (p.position() - d.shown.pose.position()).dot(heading);
        latency += (d.render_ms - d.shown.t_ms) as f64;
        n += 1;
    }
    let n_f = n.max(1) as f64;
    LagReport {
        mean_latency_ms: latency / n_f,
        mean_along_track_m: along / n_f,
        samples: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: f64, until_ms: u64, step: u64) -> Vec<(u64, Pose2D)> {
        (0..=until_ms / step)
            .map(|k| {
                let t = k * step;
                (t, Pose2D::new(v * t as f64 / 1000.0, 1.0, 0.0))
            })
            .collect()
    }

    #[test]
    fn identical_paths_have_zero_deviation() {
        let truth = line(0.5, 4000, 10);
        let remote: Vec<TrajectoryPoint> = truth
            .iter()
            .step_by(20)
            .map(|(t, p)| TrajectoryPoint { t_ms: *t, pose: *p })
            .collect();
        let r = record_paths(&truth, &remote);
        assert!(r.max_dx < 1e-12 && r.max_dy < 1e-12);
        assert!(r.compared > 0);
        assert!(r.to_csv().starts_with("path,t_ms,x,y\ntruth,0,"));
    }

    #[test]
    fn constant_lag_is_v_times_latency() {
        let truth = line(0.5, 10_000, 10);
        let shown: Vec<DisplaySample> = (3..90)
            .map(|k| {
                let render = k * 100;
                let t = render - 300;
                DisplaySample {
                    render_ms: render,
                    shown: TrajectoryPoint {
                        t_ms: t,
                        pose: Pose2D::new(0.5 * t as f64 / 1000.0, 1.0, 0.0),
                    },
                }
            })
            .collect();
        let lag = lag_report(&truth, &shown);
        assert!((lag.mean_latency_ms - 300.0).abs() < 1e-9);
        assert!((lag.mean_along_track_m - 0.15).abs() < 1e-9);
        assert!((lag.predicted_m(0.5) - 0.15).abs() < 1e-9);
    }

    #[test]
    fn interpolation_is_linear() {
        let p = [
            PathPoint { t_ms: 0, x: 0.0, y: 0.0 },
            PathPoint { t_ms: 100, x: 1.0, y: 2.0 },
        ];
        assert_eq!(interpolate(&p, 50), Some((0.5, 1.0)));
        assert_eq!(interpolate(&p, 100), Some((1.0, 2.0)));
        assert_eq!(interpolate(&p, 101), None);
    }
}
