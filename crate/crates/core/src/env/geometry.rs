use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

/// Point or displacement in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Rotates by `-theta`, i.e. expresses a world-frame vector in a frame with heading `theta`.
    pub fn to_frame(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x + s * self.y, -s * self.x + c * self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi already; guard the numerically exact edge
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Axis-aligned rectangular arena.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub min: Vec2,
    pub max: Vec2,
}

impl Arena {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    /// Bounding box of `points` grown by `margin` on every side.
    pub fn around(points: &[Vec2], margin: f64) -> Arena {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Arena {
            min: Vec2::new(min.x - margin, min.y - margin),
            max: Vec2::new(max.x + margin, max.y + margin),
        }
    }

    fn edges(&self) -> [(Vec2, Vec2); 4] {
        let a = self.min;
        let b = Vec2::new(self.max.x, self.min.y);
        let c = self.max;
        let d = Vec2::new(self.min.x, self.max.y);
        [(a, b), (b, c), (c, d), (d, a)]
    }

    /// Distance along a unit ray to the first wall hit, if any.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        self.edges()
            .iter()
            .filter_map(|&(p, q)| ray_segment(origin, dir, p, q))
            .fold(None, |best, t| Some(best.map_or(t, |b: f64| b.min(t))))
    }
}

/// Ray/segment intersection parameter (distance along unit `dir`).
fn ray_segment(origin: Vec2, dir: Vec2, p: Vec2, q: Vec2) -> Option<f64> {
    let seg = q - p;
    let denom = dir.x * seg.y - dir.y * seg.x;
    if denom.abs() < 1e-12 {
        return None;
    }
    let w = p - origin;
    let t = (w.x * seg.y - w.y * seg.x) / denom;
    let u = (w.x * dir.y - w.y * dir.x) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Distance along a unit ray to the boundary of a disc, if the ray hits it.
/// An origin inside the disc yields 0.
pub fn ray_disc(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let c = oc.dot(oc) - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = oc.dot(dir);
    if b > 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}
