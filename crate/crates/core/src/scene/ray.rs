use serde::Serialize;

use super::{point_in_polygon, OrientedBox, Scene, Vec3, WallSegment};

/// Hits closer than this to the origin are ignored.
pub const RAY_EPSILON: f64 = 1e-6;

const PARALLEL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceId {
    Floor { room: usize },
    Wall { room: usize, wall: usize },
    Object { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hit {
    pub point: Vec3,
    pub t: f64,
    pub surface: SurfaceId,
}

/// Nearest surface hit along `origin + t·dir` for `t > RAY_EPSILON`. Rays pass
/// through wall cutouts. `dir` need not be unit length; `t` is in its units.
pub fn ray_intersect(scene: &Scene, origin: Vec3, dir: Vec3) -> Option<Hit> {
    let mut best: Option<(f64, SurfaceId)> = None;
    let mut consider = |t: Option<f64>, s: SurfaceId| {
        if let Some(t) = t {
            if best.is_none_or(|(b, _)| t < b) {
                best = Some((t, s));
            }
        }
    };
    for (ri, room) in scene.rooms.iter().enumerate() {
        consider(ray_floor(&room.floor, origin, dir), SurfaceId::Floor { room: ri });
        for (wi, wall) in room.walls.iter().enumerate() {
            consider(ray_wall(wall, origin, dir), SurfaceId::Wall { room: ri, wall: wi });
        }
    }
    for (oi, o) in scene.objects.iter().enumerate() {
        consider(ray_box(&o.bbox, origin, dir), SurfaceId::Object { index: oi });
    }
    best.map(|(t, surface)| Hit { point: origin + dir * t, t, surface })
}

/// Whether any surface other than object `skip` crosses the ray strictly
/// before `t_max`.
pub fn ray_occluded(scene: &Scene, origin: Vec3, dir: Vec3, t_max: f64, skip: Option<usize>) -> bool {
    let before = |t: Option<f64>| t.is_some_and(|t| t < t_max);
    scene.objects.iter().enumerate().any(|(i, o)| Some(i) != skip && before(ray_box(&o.bbox, origin, dir)))
        || scene.rooms.iter().any(|r| {
            before(ray_floor(&r.floor, origin, dir)) || r.walls.iter().any(|w| before(ray_wall(w, origin, dir)))
        })
}

pub(crate) fn ray_floor(floor: &[Vec3], origin: Vec3, dir: Vec3) -> Option<f64> {
    if dir.z.abs() < PARALLEL {
        return None;
    }
    let t = -origin.z / dir.z;
    if t <= RAY_EPSILON {
        return None;
    }
    let p = origin + dir * t;
    point_in_polygon(floor, p.x, p.y).then_some(t)
}

pub(crate) fn ray_wall(wall: &WallSegment, origin: Vec3, dir: Vec3) -> Option<f64> {
    let n = wall.normal();
    let denom = dir.dot(n);
    if denom.abs() < PARALLEL {
        return None;
    }
    let t = (wall.a - origin).dot(n) / denom;
    if t <= RAY_EPSILON {
        return None;
    }
    let p = origin + dir * t;
    let along = (p - wall.a).dot(wall.direction());
    let inside = (0.0..=wall.length()).contains(&along) && (0.0..=wall.height).contains(&p.z);
    (inside && !wall.in_portal(along, p.z)).then_some(t)
}

/// Slab test in the box frame. From inside the box, the exit face is hit.
pub(crate) fn ray_box(b: &OrientedBox, origin: Vec3, dir: Vec3) -> Option<f64> {
    let o = b.to_local(origin);
    let d = dir.rotate_z(-b.yaw);
    let h = b.half_extents;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (oi, di, hi_ext) in [(o.x, d.x, h.x), (o.y, d.y, h.y), (o.z, d.z, h.z)] {
        if di.abs() < PARALLEL {
            if oi.abs() > hi_ext {
                return None;
            }
            continue;
        }
        let t1 = (-hi_ext - oi) / di;
        let t2 = (hi_ext - oi) / di;
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
        if hi < lo {
            return None;
        }
    }
    if lo > RAY_EPSILON {
        Some(lo)
    } else if hi > RAY_EPSILON {
        Some(hi)
    } else {
        None
    }
}
