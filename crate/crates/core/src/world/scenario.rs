//! Plain-text scenario files.
//!
//! One directive per line, `#` starts a comment, angles are in degrees:
//!
//! ```text
//! bounds 0 0 12 10            # xmin ymin xmax ymax
//! start 1.5 1.5 0             # x y heading
//! safe_point 10 8 90          # x y heading
//! box 4 4 5 6                 # axis-aligned obstacle: xmin ymin xmax ymax
//! polygon 7 1 8 1 7.5 2       # convex polygon: x y pairs
//! segment 2 9 6 9             # thin wall: x1 y1 x2 y2
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use super::{Pose2D, WorldError, WorldModel};
use crate::geometry::{Obstacle, Polygon, Rect, Segment, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub world: WorldModel,
    pub start: Pose2D,
}

impl FromStr for Scenario {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scenario(s)
    }
}

fn numbers(line: usize, fields: &[&str]) -> Result<Vec<f64>, WorldError> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| WorldError::Parse {
                    line,
                    message: format!("not a number: {f:?}"),
                })
        })
        .collect()
}

fn expect_len(line: usize, what: &str, got: &[f64], want: usize) -> Result<(), WorldError> {
    if got.len() != want {
        return Err(WorldError::Parse {
            line,
            message: format!("{what} takes {want} numbers, got {}", got.len()),
        });
    }
    Ok(())
}

pub fn parse_scenario(text: &str) -> Result<Scenario, WorldError> {
    let mut bounds = None;
    let mut start = None;
    let mut safe_point = None;
    let mut obstacles = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let directive = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();
        let nums = numbers(line, &rest)?;
        let bad = |message: &str| WorldError::Parse {
            line,
            message: message.to_string(),
        };
        match directive {
            "bounds" => {
                expect_len(line, "bounds", &nums, 4)?;
                let r = Rect::new(Vec2::new(nums[0], nums[1]), Vec2::new(nums[2], nums[3]))
                    .ok_or_else(|| bad("bounds must have min < max"))?;
                bounds = Some(r);
            }
            "start" | "safe_point" => {
                expect_len(line, directive, &nums, 3)?;
                let pose = Pose2D::new(nums[0], nums[1], nums[2].to_radians());
                if directive == "start" {
                    start = Some(pose);
                } else {
                    safe_point = Some(pose);
                }
            }
            "box" => {
                expect_len(line, "box", &nums, 4)?;
                let min = Vec2::new(nums[0].min(nums[2]), nums[1].min(nums[3]));
                let max = Vec2::new(nums[0].max(nums[2]), nums[1].max(nums[3]));
                let poly = Polygon::rectangle(min, max).ok_or_else(|| bad("degenerate box"))?;
                obstacles.push(Obstacle::Polygon(poly));
            }
            "polygon" => {
                if nums.len() < 6 || nums.len() % 2 != 0 {
                    return Err(bad("polygon takes at least three x y pairs"));
                }
                let verts = nums.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                let poly = Polygon::new(verts).ok_or_else(|| bad("polygon must be convex"))?;
                obstacles.push(Obstacle::Polygon(poly));
            }
            "segment" => {
                expect_len(line, "segment", &nums, 4)?;
                obstacles.push(Obstacle::Segment(Segment::new(
                    Vec2::new(nums[0], nums[1]),
                    Vec2::new(nums[2], nums[3]),
                )));
            }
            other => return Err(bad(&format!("unknown directive {other:?}"))),
        }
    }

    let missing = |what: &str| WorldError::Parse {
        line: 0,
        message: format!("missing {what}"),
    };
    let bounds = bounds.ok_or_else(|| missing("bounds"))?;
    let start = start.ok_or_else(|| missing("start"))?;
    let safe_point = safe_point.ok_or_else(|| missing("safe_point"))?;
    if !bounds.contains(start.position()) {
        return Err(WorldError::InvalidWorld("start pose outside bounds".into()));
    }
    let world = WorldModel::new(bounds, obstacles, safe_point)?;
    Ok(Scenario { world, start })
}

impl Scenario {
    /// Serializes back into the scenario text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let b = self.world.bounds;
        let _ = writeln!(out, "bounds {} {} {} {}", b.min.x, b.min.y, b.max.x, b.max.y);
        let pose = |p: &Pose2D| format!("{} {} {}", p.x, p.y, p.theta.to_degrees());
        let _ = writeln!(out, "start {}", pose(&self.start));
        let _ = writeln!(out, "safe_point {}", pose(&self.world.safe_point));
        for o in &self.world.obstacles {
            match o {
                Obstacle::Segment(s) => {
                    let _ = writeln!(out, "segment {} {} {} {}", s.a.x, s.a.y, s.b.x, s.b.y);
                }
                Obstacle::Polygon(p) => {
                    let coords: Vec<String> =
                        p.vertices().iter().map(|v| format!("{} {}", v.x, v.y)).collect();
                    let _ = writeln!(out, "polygon {}", coords.join(" "));
                }
            }
        }
        out
    }
}
