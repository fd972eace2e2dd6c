//! Planar geometry used by the world model, the sensors and the map.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `angle` (radians, counter-clockwise from +x).
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can land exactly on -π after the subtraction above
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    /// Distance along the unit direction `dir` from `origin` to this segment,
    /// if the ray hits it.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let edge = self.b - self.a;
        let denom = dir.cross(edge);
        if denom.abs() < 1e-12 {
            return None;
        }
        let rel = self.a - origin;
        let t = rel.cross(edge) / denom;
        let u = rel.cross(dir) / denom;
        if t >= -1e-12 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            Some(t.max(0.0))
        } else {
            None
        }
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let edge = self.b - self.a;
        let len2 = edge.dot(edge);
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(edge) / len2).clamp(0.0, 1.0);
        self.a + edge * t
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.closest_point(p).distance(p)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Convex polygon, vertices in either winding order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    /// Returns `None` unless the vertices describe a non-degenerate convex polygon.
    pub fn new(vertices: Vec<Vec2>) -> Option<Self> {
        if vertices.len() < 3 || vertices.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let n = vertices.len();
        let mut sign = 0.0_f64;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let turn = (b - a).cross(c - b);
            if turn.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = turn.signum();
            } else if turn.signum() != sign {
                return None;
            }
        }
        if sign == 0.0 {
            return None;
        }
        Some(Self { vertices })
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rectangle(min: Vec2, max: Vec2) -> Option<Self> {
        Self::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let mut sign = 0.0_f64;
        for e in self.edges() {
            let c = (e.b - e.a).cross(p - e.a);
            if c.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
        true
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        let sum = self.vertices.iter().fold(Vec2::ZERO, |acc, v| acc + *v);
        sum * (1.0 / n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Polygon(Polygon),
    Segment(Segment),
}

impl Obstacle {
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            Obstacle::Segment(s) => s.ray_hit(origin, dir),
            Obstacle::Polygon(p) => {
                if p.contains(origin) {
                    return Some(0.0);
                }
                p.edges()
                    .filter_map(|e| e.ray_hit(origin, dir))
                    .min_by(f64::total_cmp)
            }
        }
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        match self {
            Obstacle::Segment(s) => s.distance_to(p),
            Obstacle::Polygon(poly) => poly.distance_to(p),
        }
    }
}

/// Axis-aligned rectangle; used for world bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Option<Self> {
        (min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y)
            .then_some(Self { min, max })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn walls(&self) -> [Segment; 4] {
        let (a, b) = (self.min, self.max);
        let c = Vec2::new(b.x, a.y);
        let d = Vec2::new(a.x, b.y);
        [
            Segment::new(a, c),
            Segment::new(c, b),
            Segment::new(b, d),
            Segment::new(d, a),
        ]
    }

    /// Distance from an interior point to the nearest wall.
    pub fn inner_clearance(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }
}
