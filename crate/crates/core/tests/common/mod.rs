//! Generators and oracles shared by the integration suites.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use roomaudit::rulespec::{
    Comparison, Community, DimensionConstraint, Existence, IssueCategory, IssueRule, Measurement, ObjectClass,
    RuleSet, RuleSource,
};
use roomaudit::scene::{
    point_in_polygon, OrientedBox, PortalCutout, PortalKind, Room, Scene, SceneObject, SurfaceId, Vec3, WallSegment,
    RAY_EPSILON,
};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One to three rotated rectangular rooms with random cutouts and 0 to 8
/// yawed boxes. Rooms and boxes may overlap.
pub fn random_scene(rng: &mut TestRng) -> Scene {
    let mut rooms = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let (w, d) = (rng.random_range(2.0..6.0), rng.random_range(2.0..6.0));
        let c = Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), 0.0);
        let theta = rng.random_range(0.0..TAU);
        let floor: Vec<Vec3> = [(-w, -d), (w, -d), (w, d), (-w, d)]
            .iter()
            .map(|&(x, y)| c + Vec3::new(x / 2.0, y / 2.0, 0.0).rotate_z(theta))
            .collect();
        let height = rng.random_range(2.2..3.0);
        let walls = (0..4)
            .map(|i| {
                let (a, b) = (floor[i], floor[(i + 1) % 4]);
                let len = a.horizontal_distance(b);
                let portals = (0..rng.random_range(0..=2))
                    .map(|_| {
                        let width = rng.random_range(0.3..(len / 2.0));
                        let offset = rng.random_range(0.0..(len - width));
                        let (kind, sill, head) = match rng.random_range(0..3) {
                            0 => (PortalKind::Door, 0.0, rng.random_range(1.9..2.15)),
                            1 => (PortalKind::Window, rng.random_range(0.6..1.0), rng.random_range(1.6..2.1)),
                            _ => (PortalKind::Opening, 0.0, height),
                        };
                        PortalCutout { id: None, kind, offset, width, sill, head }
                    })
                    .collect();
                WallSegment { a, b, height, thickness: 0.1, portals }
            })
            .collect();
        rooms.push(Room { name: String::new(), floor, walls });
    }
    let objects = (0..rng.random_range(0..=8))
        .map(|i| {
            let half = Vec3::new(rng.random_range(0.05..1.0), rng.random_range(0.05..1.0), rng.random_range(0.05..1.0));
            let center = Vec3::new(
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
                half.z + rng.random_range(0.0..1.5),
            );
            SceneObject::new(format!("b{i}"), ObjectClass::Storage, OrientedBox::new(center, half, rng.random_range(-3.2..3.2)))
        })
        .collect();
    Scene { rooms, objects }
}

/// A random direction; about one in ten is axis-aligned.
pub fn random_direction(rng: &mut TestRng) -> Vec3 {
    if rng.random_bool(0.1) {
        let axes = [Vec3::X, -Vec3::X, Vec3::Y, -Vec3::Y, Vec3::Z, -Vec3::Z];
        return *axes.choose(rng).unwrap();
    }
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi = rng.random_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z) * rng.random_range(0.2..3.0)
}

/// Mostly near a room center, sometimes anywhere around the scene.
pub fn random_origin(rng: &mut TestRng, scene: &Scene) -> Vec3 {
    let z = rng.random_range(0.05..3.5);
    match scene.rooms.choose(rng) {
        Some(room) if rng.random_bool(0.75) => {
            let c = room.centroid();
            Vec3::new(c.x + rng.random_range(-2.5..2.5), c.y + rng.random_range(-2.5..2.5), z)
        }
        _ => Vec3::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), z),
    }
}

/// Brute force over every surface as planar quads: floors by plane
/// intersection and point-in-polygon, walls and box faces by
/// parallelogram tests.
pub fn oracle_hit(scene: &Scene, origin: Vec3, dir: Vec3) -> Option<(f64, SurfaceId)> {
    let mut best: Option<(f64, SurfaceId)> = None;
    let mut offer = |t: f64, s: SurfaceId| {
        if t > RAY_EPSILON && best.is_none_or(|(b, _)| t < b) {
            best = Some((t, s));
        }
    };
    for (ri, room) in scene.rooms.iter().enumerate() {
        if dir.z != 0.0 {
            let t = -origin.z / dir.z;
            let p = origin + dir * t;
            if point_in_polygon(&room.floor, p.x, p.y) {
                offer(t, SurfaceId::Floor { room: ri });
            }
        }
        for (wi, w) in room.walls.iter().enumerate() {
            if let Some((t, a, b)) = quad_hit(w.a, w.b - w.a, Vec3::new(0.0, 0.0, w.height), origin, dir) {
                if !w.in_portal(a * w.length(), b * w.height) {
                    offer(t, SurfaceId::Wall { room: ri, wall: wi });
                }
            }
        }
    }
    for (oi, o) in scene.objects.iter().enumerate() {
        let c = o.bbox.corners();
        let faces = [
            (c[0], c[1] - c[0], c[3] - c[0]),
            (c[4], c[5] - c[4], c[7] - c[4]),
            (c[0], c[1] - c[0], c[4] - c[0]),
            (c[1], c[2] - c[1], c[5] - c[1]),
            (c[2], c[3] - c[2], c[6] - c[2]),
            (c[3], c[0] - c[3], c[7] - c[3]),
        ];
        for (p0, u, v) in faces {
            if let Some((t, _, _)) = quad_hit(p0, u, v, origin, dir) {
                offer(t, SurfaceId::Object { index: oi });
            }
        }
    }
    best
}

/// Intersection with the parallelogram `p0 + a·u + b·v`, a and b in [0, 1].
fn quad_hit(p0: Vec3, u: Vec3, v: Vec3, origin: Vec3, dir: Vec3) -> Option<(f64, f64, f64)> {
    let n = u.cross(v);
    let denom = dir.dot(n);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (p0 - origin).dot(n) / denom;
    let r = origin + dir * t - p0;
    let a = r.dot(u) / u.dot(u);
    let b = r.dot(v) / v.dot(v);
    ((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)).then_some((t, a, b))
}

/// Checks one ray against the oracle: same hit/miss and nearest `t` within
/// `tol` meters along the ray.
pub fn check_ray(scene: &Scene, origin: Vec3, dir: Vec3, tol: f64) -> Result<(), String> {
    let got = roomaudit::scene::ray_intersect(scene, origin, dir);
    let want = oracle_hit(scene, origin, dir);
    match (got, want) {
        (None, None) => Ok(()),
        (Some(h), Some((t, _))) if ((h.t - t) * dir.norm()).abs() <= tol => Ok(()),
        (g, w) => Err(format!("origin {origin:?} dir {dir:?}: got {g:?}, oracle {w:?}")),
    }
}

/// A valid rule set: unique ids, well-formed constraints on measurements
/// that apply to the class, non-empty community sets.
pub fn random_rule_set(rng: &mut TestRng) -> RuleSet {
    let mut rules: Vec<IssueRule> = Vec::new();
    let mut ids = BTreeSet::new();
    for _ in 0..rng.random_range(0..12) {
        let rule = random_rule(rng);
        if ids.insert(rule.rule_id()) {
            rules.push(rule);
        }
    }
    RuleSet::new(rules, RuleSource::UserFile)
}

const SUFFIXES: [&str; 4] = ["", "-Adults", "-Children", "-Main Entrance"];

fn random_rule(rng: &mut TestRng) -> IssueRule {
    let class = *ObjectClass::ALL.choose(rng).unwrap();
    let object_name = format!("{}{}", class.dsl_name(), SUFFIXES.choose(rng).unwrap());
    let all_communities: Vec<Community> = Community::all().into_iter().collect();
    let mut communities: BTreeSet<Community> =
        all_communities.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
    communities.insert(*all_communities.choose(rng).unwrap());
    let dependencies: BTreeSet<ObjectClass> =
        (0..rng.random_range(0..4)).map(|_| *ObjectClass::ALL.choose(rng).unwrap()).collect();
    let description: String = (0..rng.random_range(0..40))
        .map(|_| *['a', 'B', ' ', '"', '\\', 'é', '≥', '\n', '7', '.'].choose(rng).unwrap())
        .collect();

    let kind = rng.random_range(0..4);
    let (measurement, dimension, existence) = match kind {
        0 => (Measurement::Presence, None, Existence::MustNotExist),
        1 => (Measurement::Absence, None, Existence::MustExist),
        2 => {
            let dims: Vec<Measurement> = [Measurement::Height, Measurement::Radius, Measurement::Depth]
                .into_iter()
                .filter(|m| m.applies_to(class))
                .collect();
            match dims.choose(rng) {
                Some(&m) => (m, Some(random_constraint(rng)), Existence::Unset),
                None => (Measurement::Presence, None, Existence::MustNotExist),
            }
        }
        // Disabled placeholder rule.
        _ => {
            let m = if Measurement::Height.applies_to(class) { Measurement::Height } else { Measurement::Presence };
            if m.is_existential() {
                (m, None, Existence::MustNotExist)
            } else {
                (m, None, Existence::Unset)
            }
        }
    };
    let default = IssueCategory::default_for(class, existence);
    let category = match (existence, rng.random_bool(0.3)) {
        (Existence::Unset, true) => *[IssueCategory::Dimension, IssueCategory::Position].choose(rng).unwrap(),
        _ => default,
    };
    IssueRule { object_name, object_class: class, measurement, communities, dependencies, dimension, existence, category, description }
}

fn random_constraint(rng: &mut TestRng) -> DimensionConstraint {
    let ops = [Comparison::Lt, Comparison::Le, Comparison::Eq, Comparison::Ge, Comparison::Gt, Comparison::Between];
    let op = *ops.choose(rng).unwrap();
    // Mix round inch values with arbitrary floats.
    let mut value = || if rng.random_bool(0.5) { rng.random_range(1..100) as f64 } else { rng.random_range(0.01..120.0) };
    let values = if op == Comparison::Between {
        let (a, b) = (value(), value());
        vec![a.min(b), a.max(b)]
    } else {
        vec![value()]
    };
    DimensionConstraint::new(op, values)
}
