//! Seeded world generators for batch runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Pose2D, Scenario, WorldModel};
use crate::geometry::{Obstacle, Polygon, Rect, Vec2};

/// Narrowest gap left between any two obstacles or an obstacle and a wall.
pub const MIN_GAP: f64 = 1.2;

fn boxed(min: Vec2, max: Vec2) -> Obstacle {
    Obstacle::Polygon(Polygon::rectangle(min, max).expect("non-degenerate box"))
}

fn rect_gap(a: (Vec2, Vec2), b: (Vec2, Vec2)) -> f64 {
    let dx = (b.0.x - a.1.x).max(a.0.x - b.1.x).max(0.0);
    let dy = (b.0.y - a.1.y).max(a.0.y - b.1.y).max(0.0);
    dx.hypot(dy)
}

/// Open room with a few scattered boxes. The robot starts at the safe point
/// facing +x, with a clear lane ahead for the first few metres.
pub fn scattered_room(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = Rect::new(Vec2::ZERO, Vec2::new(16.0, 10.0)).expect("room");
    let home = Vec2::new(2.0, 5.0);
    let mut boxes: Vec<(Vec2, Vec2)> = Vec::new();
    let want = rng.random_range(2..=5);
    let mut attempts = 0;
    while boxes.len() < want && attempts < 500 {
        attempts += 1;
        let w = rng.random_range(0.4..1.2);
        let h = rng.random_range(0.4..1.2);
        let min = Vec2::new(rng.random_range(4.0..13.0), rng.random_range(1.3..(8.7 - h)));
        let b = (min, Vec2::new(min.x + w, min.y + h));
        let wall_gap = (b.0.y - bounds.min.y)
            .min(bounds.max.y - b.1.y)
            .min(bounds.max.x - b.1.x);
        if wall_gap < MIN_GAP || boxes.iter().any(|o| rect_gap(*o, b) < MIN_GAP) {
            continue;
        }
        if rect_gap(b, (home, home)) < 2.0 {
            continue;
        }
        boxes.push(b);
    }
    let world = WorldModel {
        bounds,
        obstacles: boxes.into_iter().map(|(a, b)| boxed(a, b)).collect(),
        safe_point: Pose2D::new(home.x, home.y, 0.0),
    };
    Scenario {
        world,
        start: Pose2D::new(home.x, home.y, 0.0),
    }
}

/// Straight corridor along +x, closed at the far end, with boxes jutting
/// from alternate walls. Every passage is at least [`MIN_GAP`] wide.
pub fn corridor(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = rng.random_range(14.0..20.0);
    let width = rng.random_range(2.2..3.2);
    let bounds = Rect::new(Vec2::ZERO, Vec2::new(length, width)).expect("corridor");
    let mut obstacles = Vec::new();
    let mut x = rng.random_range(3.5..5.0);
    let mut from_left = rng.random_bool(0.5);
    while x < length - 4.0 {
        let depth = rng.random_range(0.3..(width - MIN_GAP));
        let long = rng.random_range(0.3..1.0);
        let (y0, y1) = if from_left {
            (width - depth, width)
        } else {
            (0.0, depth)
        };
        obstacles.push(boxed(Vec2::new(x, y0), Vec2::new(x + long, y1)));
        from_left = !from_left;
        x += long + rng.random_range(3.0..5.0);
    }
    let start = Pose2D::new(1.0, width / 2.0, 0.0);
    Scenario {
        world: WorldModel {
            bounds,
            obstacles,
            safe_point: start,
        },
        start,
    }
}
