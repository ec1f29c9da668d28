//! Small fixed-size geometry types: points, rotations, yawed boxes.
//!
//! World frame is right-handed, z-up, meters, with the floor at z = 0.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 1e-12 && n.is_finite()).then(|| self / n)
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn horizontal_distance(self, o: Vec3) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn component_min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    /// Rotation about +z.
    pub fn rotate_z(self, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Unit quaternion, `w + xi + yj + zk`. Serialized as `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quat {
    fn from([w, x, y, z]: [f64; 4]) -> Self {
        Self { w, x, y, z }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Builds the rotation whose matrix has the given orthonormal columns.
    pub fn from_basis(c0: Vec3, c1: Vec3, c2: Vec3) -> Quat {
        let (m00, m01, m02) = (c0.x, c1.x, c2.x);
        let (m10, m11, m12) = (c0.y, c1.y, c2.y);
        let (m20, m21, m22) = (c0.z, c1.z, c2.z);
        let trace = m00 + m11 + m22;
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Quat { w: 0.25 * s, x: (m21 - m12) / s, y: (m02 - m20) / s, z: (m10 - m01) / s }
        } else if m00 > m11 && m00 > m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
            Quat { w: (m21 - m12) / s, x: 0.25 * s, y: (m01 + m10) / s, z: (m02 + m20) / s }
        } else if m11 > m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
            Quat { w: (m02 - m20) / s, x: (m01 + m10) / s, y: 0.25 * s, z: (m12 + m21) / s }
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
            Quat { w: (m10 - m01) / s, x: (m02 + m20) / s, y: (m12 + m21) / s, z: 0.25 * s }
        };
        q.normalized()
    }

    pub fn normalized(self) -> Quat {
        let n = self.norm();
        Quat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn conjugate(self) -> Quat {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v' = v + 2w(q × v) + 2 q × (q × v)
        let q = Vec3::new(self.x, self.y, self.z);
        let t = q.cross(v) * 2.0;
        v + t * self.w + q.cross(t)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// A box rotated by `yaw` about the vertical axis. Local x is the box's width
/// axis and local y its depth axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    #[serde(default)]
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, yaw: f64) -> Self {
        Self { center, half_extents, yaw: wrap_angle(yaw) }
    }

    pub fn top_height(&self) -> f64 {
        self.center.z + self.half_extents.z
    }

    pub fn bottom_height(&self) -> f64 {
        self.center.z - self.half_extents.z
    }

    pub fn center_height(&self) -> f64 {
        self.center.z
    }

    pub fn bottom_center(&self) -> Vec3 {
        Vec3::new(self.center.x, self.center.y, self.bottom_height())
    }

    pub fn to_local(&self, p: Vec3) -> Vec3 {
        (p - self.center).rotate_z(-self.yaw)
    }

    pub fn to_world(&self, p: Vec3) -> Vec3 {
        p.rotate_z(self.yaw) + self.center
    }

    /// Whether the horizontal projection of `p` falls in the box footprint.
    pub fn footprint_contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x && l.y.abs() <= self.half_extents.y
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x
            && l.y.abs() <= self.half_extents.y
            && l.z.abs() <= self.half_extents.z
    }

    /// The 8 corners, bottom face first, counter-clockwise seen from above.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents;
        let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        let mut out = [Vec3::ZERO; 8];
        for (k, sz) in [-1.0, 1.0].into_iter().enumerate() {
            for (i, (sx, sy)) in signs.iter().enumerate() {
                out[k * 4 + i] = self.to_world(Vec3::new(sx * h.x, sy * h.y, sz * h.z));
            }
        }
        out
    }

    /// Footprint corners (x, y), counter-clockwise.
    pub fn footprint(&self) -> [(f64, f64); 4] {
        let c = self.corners();
        [(c[0].x, c[0].y), (c[1].x, c[1].y), (c[2].x, c[2].y), (c[3].x, c[3].y)]
    }

    pub fn is_valid(&self) -> bool {
        let h = self.half_extents;
        self.center.is_finite()
            && h.is_finite()
            && h.x > 0.0
            && h.y > 0.0
            && h.z > 0.0
            && self.yaw.is_finite()
            && (-PI..PI).contains(&self.yaw)
    }
}

/// Signed area of a closed polygon in the xy plane (positive when CCW).
pub fn signed_area(poly: &[Vec3]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

/// Area centroid of a simple polygon in the xy plane, at z = 0.
pub fn polygon_centroid(poly: &[Vec3]) -> Vec3 {
    let area = signed_area(poly);
    let n = poly.len();
    if area.abs() < 1e-12 {
        let sum = poly.iter().fold(Vec3::ZERO, |acc, p| acc + *p);
        return Vec3::new(sum.x / n as f64, sum.y / n as f64, 0.0);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let cross = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    Vec3::new(cx / (6.0 * area), cy / (6.0 * area), 0.0)
}

/// Even-odd point-in-polygon test on the xy projection.
pub fn point_in_polygon(poly: &[Vec3], x: f64, y: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > y) != (pj.y > y) && x < (pj.x - pi.x) * (y - pi.y) / (pj.y - pi.y) + pi.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Distance from (x, y) to the polygon boundary.
pub fn distance_to_polygon_boundary(poly: &[Vec3], x: f64, y: f64) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_point_distance(poly[i], poly[(i + 1) % n], x, y))
        .fold(f64::INFINITY, f64::min)
}

fn segment_point_distance(a: Vec3, b: Vec3, x: f64, y: f64) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a.x + t * dx - x).hypot(a.y + t * dy - y)
}

/// True when no two non-adjacent edges of the polygon intersect.
pub fn polygon_is_simple(poly: &[Vec3]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn segments_intersect(p1: Vec3, p2: Vec3, p3: Vec3, p4: Vec3) -> bool {
    fn orient(a: Vec3, b: Vec3, c: Vec3) -> f64 {
        (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    }
    fn on_segment(a: Vec3, b: Vec3, p: Vec3) -> bool {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    }
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heights_of_unit_cube() {
        let b = OrientedBox::new(Vec3::ZERO, Vec3::new(0.5, 0.5, 0.5), 0.0);
        assert_eq!(b.bottom_height(), -0.5);
        assert_eq!(b.top_height(), 0.5);
        assert_eq!(b.center_height(), 0.0);
    }

    #[test]
    fn counter_top_in_inches() {
        let b = OrientedBox::new(Vec3::new(0.0, 0.0, 0.43), Vec3::new(1.0, 0.3, 0.43), 0.0);
        assert!((b.top_height() - 0.86).abs() < 1e-12);
        // 34 in / 39.3701 in/m = 0.8636 m
        assert!((b.top_height() * 39.3701 - 33.858).abs() < 1e-3);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn quaternion_round_trips_basis() {
        let f = Vec3::new(1.0, 1.0, -0.3).normalized().unwrap();
        let r = f.cross(Vec3::Z).normalized().unwrap();
        let d = f.cross(r);
        let q = Quat::from_basis(r, d, f);
        assert!((q.norm() - 1.0).abs() < 1e-12);
        assert!(q.rotate(Vec3::new(0.0, 0.0, 1.0)).distance(f) < 1e-12);
        assert!(q.rotate(Vec3::new(1.0, 0.0, 0.0)).distance(r) < 1e-12);
        assert!(q.conjugate().rotate(f).distance(Vec3::Z) < 1e-12);
    }

    #[test]
    fn polygon_helpers() {
        let sq = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(4.0, 0.0, 0.0),
            Vec3::new(4.0, 5.0, 0.0),
            Vec3::new(0.0, 5.0, 0.0),
        ];
        assert_eq!(signed_area(&sq), 20.0);
        assert_eq!(polygon_centroid(&sq), Vec3::new(2.0, 2.5, 0.0));
        assert!(point_in_polygon(&sq, 1.0, 1.0));
        assert!(!point_in_polygon(&sq, 5.0, 1.0));
        assert!(polygon_is_simple(&sq));
        let bowtie = [sq[0], sq[2], sq[1], sq[3]];
        assert!(!polygon_is_simple(&bowtie));
        assert_eq!(distance_to_polygon_boundary(&sq, 1.0, 2.0), 1.0);
    }

    #[test]
    fn rotated_footprint() {
        let b = OrientedBox::new(Vec3::ZERO, Vec3::new(1.0, 0.1, 0.1), PI / 2.0);
        assert!(b.footprint_contains(Vec3::new(0.0, 0.9, 5.0)));
        assert!(!b.footprint_contains(Vec3::new(0.9, 0.0, 0.0)));
    }
}
