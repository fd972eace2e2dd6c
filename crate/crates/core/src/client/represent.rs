//! The operator-side map: pose arrow, trajectory and a sparse occupancy grid
//! built from telemetry range readings.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::sensors::{LaserMount, Range, SonarLayout, LASER_FOV_DEG, LASER_MAX_RANGE, SONAR_MAX_RANGE};
use crate::wire::TelemetryFrame;
use crate::world::Pose2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Cell {
    Unknown,
    Free,
    Occupied,
}

pub type CellIndex = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t_ms: u64,
    pub pose: Pose2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellUpdate {
    pub i: i32,
    pub j: i32,
    pub cell: Cell,
}

/// What the console draws at one render tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t_ms: u64,
    pub resolution: f64,
    /// Telemetry sequence number reflected in this snapshot.
    pub seq: Option<u32>,
    pub pose: Option<Pose2D>,
    /// Cells changed since the previous snapshot.
    pub delta: Vec<CellUpdate>,
    /// Trajectory points added since the previous snapshot.
    pub trajectory_tail: Vec<TrajectoryPoint>,
    pub trajectory_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentConfig {
    pub resolution: f64,
    /// How far a beam without an echo clears the grid.
    pub max_free_range: f64,
    pub sonar: SonarLayout,
    pub laser: LaserMount,
}

impl Default for RepresentConfig {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            max_free_range: 8.0,
            sonar: SonarLayout::default(),
            laser: LaserMount::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VirtualRepresent {
    pub config: RepresentConfig,
    cells: HashMap<CellIndex, Cell>,
    pose: Option<Pose2D>,
    trajectory: Vec<TrajectoryPoint>,
    applied_seq: Option<u32>,
    dirty: BTreeMap<CellIndex, Cell>,
    trajectory_sent: usize,
}

impl Default for VirtualRepresent {
    fn default() -> Self {
        Self::new(RepresentConfig::default())
    }
}

/// Grid cells crossed by the segment `from -> to`, in order, ending with the
/// cell containing `to` (voxel traversal).
pub fn trace_cells(from: Vec2, to: Vec2, resolution: f64) -> Vec<CellIndex> {
    let cell = |p: Vec2| ((p.x / resolution).floor() as i32, (p.y / resolution).floor() as i32);
    let (mut i, mut j) = cell(from);
    let end = cell(to);
    let d = to - from;
    let axis = |d: f64, o: f64, idx: i32| -> (i32, f64, f64) {
        if d > 0.0 {
            (1, ((idx + 1) as f64 * resolution - o) / d, resolution / d)
        } else if d < 0.0 {
            (-1, (idx as f64 * resolution - o) / d, -resolution / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (si, mut ti, dti) = axis(d.x, from.x, i);
    let (sj, mut tj, dtj) = axis(d.y, from.y, j);
    let budget = (end.0 - i).unsigned_abs() + (end.1 - j).unsigned_abs() + 1;
    let mut out = Vec::with_capacity(budget as usize + 1);
    out.push((i, j));
    for _ in 0..budget {
        if (i, j) == end {
            break;
        }
        if ti < tj {
            i += si;
            ti += dti;
        } else {
            j += sj;
            tj += dtj;
        }
        out.push((i, j));
    }
    if out.last() != Some(&end) {
        out.push(end);
    }
    out
}

impl VirtualRepresent {
    pub fn new(config: RepresentConfig) -> Self {
        Self {
            config,
            cells: HashMap::new(),
            pose: None,
            trajectory: Vec::new(),
            applied_seq: None,
            dirty: BTreeMap::new(),
            trajectory_sent: 0,
        }
    }

    pub fn pose(&self) -> Option<Pose2D> {
        self.pose
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    pub fn applied_seq(&self) -> Option<u32> {
        self.applied_seq
    }

    pub fn cell_index(&self, p: Vec2) -> CellIndex {
        let r = self.config.resolution;
        ((p.x / r).floor() as i32, (p.y / r).floor() as i32)
    }

    pub fn cell(&self, index: CellIndex) -> Cell {
        self.cells.get(&index).copied().unwrap_or(Cell::Unknown)
    }

    pub fn cell_at(&self, p: Vec2) -> Cell {
        self.cell(self.cell_index(p))
    }

    pub fn known_cells(&self) -> impl Iterator<Item = (CellIndex, Cell)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }

    /// Every beam of a frame as (origin, unit direction, range, sensor max).
    fn beams(&self, frame: &TelemetryFrame) -> Vec<(Vec2, Vec2, Range, f64)> {
        let pose = frame.pose;
        let mut out = Vec::with_capacity(frame.sonar.ranges.len() + frame.laser.len());
        for (mount, r) in self.config.sonar.mounts.iter().zip(frame.sonar.ranges) {
            let dir = Vec2::from_angle(pose.theta + mount.angle);
            out.push((pose.position() + dir * mount.radius, dir, r, SONAR_MAX_RANGE));
        }
        let n = frame.laser.len();
        if n > 1 {
            let origin = pose.transform(self.config.laser.forward_offset, 0.0);
            let step = LASER_FOV_DEG / (n - 1) as f64;
            for (i, r) in frame.laser.iter().enumerate() {
                let bearing = (-LASER_FOV_DEG / 2.0 + i as f64 * step).to_radians();
                out.push((origin, Vec2::from_angle(pose.theta + bearing), *r, LASER_MAX_RANGE));
            }
        }
        out
    }

    /// Applies a decoded frame if it is fresher than the last one applied.
    /// Within a frame every FREE mark lands before any OCCUPIED mark, so an
    /// endpoint seen by this scan is never cleared by another beam of it.
    pub fn update(&mut self, frame: &TelemetryFrame) -> bool {
        if self.applied_seq.is_some_and(|s| frame.seq <= s) {
            return false;
        }
        if self.trajectory.last().is_some_and(|p| frame.stamp_ms <= p.t_ms) {
            return false;
        }
        let res = self.config.resolution;
        let mut free = Vec::new();
        let mut occupied = Vec::new();
        for (origin, dir, range, max) in self.beams(frame) {
            let (reach, hit) = match range {
                Some(r) => (r, true),
                None => (max.min(self.config.max_free_range), false),
            };
            let cells = trace_cells(origin, origin + dir * reach, res);
            let (last, rest) = cells.split_last().expect("trace is never empty");
            free.extend_from_slice(rest);
            if hit {
                occupied.push(*last);
            } else {
                free.push(*last);
            }
        }
        for c in free {
            self.set(c, Cell::Free);
        }
        for c in occupied {
            self.set(c, Cell::Occupied);
        }
        self.pose = Some(frame.pose);
        self.trajectory.push(TrajectoryPoint {
            t_ms: frame.stamp_ms,
            pose: frame.pose,
        });
        self.applied_seq = Some(frame.seq);
        true
    }

    fn set(&mut self, c: CellIndex, v: Cell) {
        if self.cells.insert(c, v) != Some(v) {
            self.dirty.insert(c, v);
        }
    }

    /// Snapshot for the console; the delta and trajectory tail restart after each call.
    pub fn snapshot(&mut self, t_ms: u64) -> Snapshot {
        let delta = std::mem::take(&mut self.dirty)
            .into_iter()
            .map(|((i, j), cell)| CellUpdate { i, j, cell })
            .collect();
        let tail = self.trajectory[self.trajectory_sent..].to_vec();
        self.trajectory_sent = self.trajectory.len();
        Snapshot {
            t_ms,
            resolution: self.config.resolution,
            seq: self.applied_seq,
            pose: self.pose,
            delta,
            trajectory_tail: tail,
            trajectory_len: self.trajectory.len(),
        }
    }
}
