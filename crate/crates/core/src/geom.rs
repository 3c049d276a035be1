//! Planar geometry for the 2.5D kitchen: points, poses and convex polygons.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2 { x: a[0], y: a[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
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

/// Position in meters plus heading in radians. `z` is the height of the
/// frame origin above the floor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl From<[f64; 4]> for Pose {
    fn from(a: [f64; 4]) -> Self {
        Pose::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Pose> for [f64; 4] {
    fn from(p: Pose) -> Self {
        [p.x, p.y, p.z, p.yaw]
    }
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Pose { x, y, z, yaw }
    }

    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn with_xy(self, p: Vec2) -> Pose {
        Pose { x: p.x, y: p.y, ..self }
    }

    pub fn approx_eq(&self, o: &Pose, tol: f64) -> bool {
        (self.x - o.x).abs() <= tol
            && (self.y - o.y).abs() <= tol
            && (self.z - o.z).abs() <= tol
            && angle_diff(self.yaw, o.yaw).abs() <= tol
    }

    /// Maps a point from this pose's local frame to the world frame.
    pub fn apply(&self, local: Vec2) -> Vec2 {
        self.xy() + local.rotate(self.yaw)
    }
}

pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// Closed segments `p1p2` and `q1q2` share at least one point.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

pub fn segment_point_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

pub fn segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    segment_point_distance(q1, q2, p1)
        .min(segment_point_distance(q1, q2, p2))
        .min(segment_point_distance(p1, p2, q1))
        .min(segment_point_distance(p1, p2, q2))
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub points: Vec<Vec2>,
}

impl Polygon {
    pub fn new(points: Vec<Vec2>) -> Self {
        let mut poly = Polygon { points };
        if poly.signed_area() < 0.0 {
            poly.points.reverse();
        }
        poly
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon::new(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn is_convex(&self) -> bool {
        let n = self.points.len();
        if n < 3 {
            return false;
        }
        let mut sign = 0.0f64;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let c = self.points[(i + 2) % n];
            let cr = (b - a).cross(c - b);
            if cr.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = cr.signum();
            } else if cr.signum() != sign {
                return false;
            }
        }
        sign != 0.0
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.points.len() as f64;
        let s = self.points.iter().fold(Vec2::default(), |acc, p| acc + *p);
        s * (1.0 / n)
    }

    /// Signed distance of `p` to the line through each edge, minimized over
    /// edges. Positive inside.
    pub fn inner_margin(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| {
                let e = b - a;
                e.cross(p - a) / e.norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Inclusive point containment.
    pub fn contains(&self, p: Vec2) -> bool {
        self.inner_margin(p) >= -1e-12
    }

    /// Containment in the polygon shrunk inward by `eps`.
    pub fn eroded_contains(&self, p: Vec2, eps: f64) -> bool {
        self.inner_margin(p) >= eps
    }

    pub fn segment_intersects(&self, a: Vec2, b: Vec2) -> bool {
        self.contains(a) || self.contains(b) || self.edges().any(|(p, q)| segments_intersect(a, b, p, q))
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| segment_point_distance(a, b, p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn distance_to_segment(&self, a: Vec2, b: Vec2) -> f64 {
        if self.segment_intersects(a, b) {
            return 0.0;
        }
        self.edges()
            .map(|(p, q)| segment_segment_distance(a, b, p, q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Overlap with positive area (separating-axis test on convex polygons).
    pub fn overlaps(&self, other: &Polygon) -> bool {
        const EPS: f64 = 1e-9;
        for poly in [self, other] {
            for (a, b) in poly.edges() {
                let axis = (b - a).perp();
                let (min1, max1) = project(self, axis);
                let (min2, max2) = project(other, axis);
                if max1 <= min2 + EPS || max2 <= min1 + EPS {
                    return false;
                }
            }
        }
        true
    }

    pub fn translated(&self, v: Vec2) -> Polygon {
        Polygon { points: self.points.iter().map(|p| *p + v).collect() }
    }

    /// Places a polygon given in a local frame at `pose`.
    pub fn placed(&self, pose: &Pose) -> Polygon {
        Polygon { points: self.points.iter().map(|p| pose.apply(*p)).collect() }
    }
}

fn project(poly: &Polygon, axis: Vec2) -> (f64, f64) {
    poly.points
        .iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_is_ccw_and_convex() {
        let r = Polygon::rect(0.0, 0.0, 2.0, 1.0);
        assert!(r.signed_area() > 0.0);
        assert!(r.is_convex());
        assert!((r.signed_area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn containment_and_erosion() {
        let r = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        assert!(r.contains(Vec2::new(0.5, 0.5)));
        assert!(r.contains(Vec2::new(1.0, 0.5)));
        assert!(!r.contains(Vec2::new(1.01, 0.5)));
        assert!(r.eroded_contains(Vec2::new(0.5, 0.5), 0.02));
        assert!(!r.eroded_contains(Vec2::new(0.99, 0.5), 0.02));
    }

    #[test]
    fn segment_crossing() {
        let r = Polygon::rect(1.0, -1.0, 2.0, 1.0);
        assert!(r.segment_intersects(Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0)));
        assert!(!r.segment_intersects(Vec2::new(0.0, 2.0), Vec2::new(3.0, 2.0)));
    }

    #[test]
    fn overlap_requires_area() {
        let a = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        let b = Polygon::rect(1.0, 0.0, 2.0, 1.0);
        let c = Polygon::rect(0.5, 0.5, 1.5, 1.5);
        assert!(!a.overlaps(&b));
        assert!(a.overlaps(&c));
    }

    #[test]
    fn angles_normalize() {
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((angle_diff(0.1, -0.1) - 0.2).abs() < 1e-12);
    }
}
