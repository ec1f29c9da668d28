//! Geometric world model: rooms with walls and wall openings, plus objects as
//! yawed 3D boxes. Ground truth and perceived worlds share this shape.

mod camera;
mod geom;
mod ray;
mod support;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rulespec::ObjectClass;

pub use camera::{CameraIntrinsics, Pose};
pub use geom::{
    distance_to_polygon_boundary, point_in_polygon, polygon_centroid, polygon_is_simple,
    signed_area, wrap_angle, OrientedBox, Quat, Vec3,
};
pub use ray::{ray_intersect, ray_occluded, Hit, SurfaceId, RAY_EPSILON};
pub use support::{is_supported_by, Support, SUPPORT_EPSILON};

/// Objects whose bottom dips below the floor by more than this are rejected.
pub const FLOOR_TOLERANCE: f64 = 1e-3;

/// Horizontal slack when deciding whether a point belongs to a room; lets
/// wall-mounted fixtures centered on a wall plane count as inside.
pub const ROOM_BOUNDARY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortalKind {
    Door,
    Window,
    Opening,
}

impl PortalKind {
    pub fn object_class(self) -> ObjectClass {
        match self {
            PortalKind::Door => ObjectClass::Door,
            PortalKind::Window => ObjectClass::Window,
            PortalKind::Opening => ObjectClass::Opening,
        }
    }
}

/// A rectangular hole in a wall. `offset` is measured along the wall from
/// its first endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortalCutout {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: PortalKind,
    pub offset: f64,
    pub width: f64,
    pub sill: f64,
    pub head: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: Vec3,
    pub b: Vec3,
    pub height: f64,
    #[serde(default = "default_thickness")]
    pub thickness: f64,
    #[serde(default)]
    pub portals: Vec<PortalCutout>,
}

fn default_thickness() -> f64 {
    0.1
}

impl WallSegment {
    pub fn length(&self) -> f64 {
        self.a.horizontal_distance(self.b)
    }

    /// Unit vector from `a` to `b`.
    pub fn direction(&self) -> Vec3 {
        let d = self.b - self.a;
        Vec3::new(d.x, d.y, 0.0) / self.length()
    }

    /// Horizontal unit normal, pointing left of `a → b`.
    pub fn normal(&self) -> Vec3 {
        let d = self.direction();
        Vec3::new(-d.y, d.x, 0.0)
    }

    /// Whether wall-local coordinates fall strictly inside a cutout.
    pub fn in_portal(&self, along: f64, z: f64) -> bool {
        self.portals
            .iter()
            .any(|p| along > p.offset && along < p.offset + p.width && z > p.sill && z < p.head)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Counter-clockwise outline at z = 0.
    pub floor: Vec<Vec3>,
    #[serde(default)]
    pub walls: Vec<WallSegment>,
}

impl Room {
    pub fn centroid(&self) -> Vec3 {
        polygon_centroid(&self.floor)
    }

    pub fn contains_xy(&self, p: Vec3) -> bool {
        point_in_polygon(&self.floor, p.x, p.y)
            || distance_to_polygon_boundary(&self.floor, p.x, p.y) <= ROOM_BOUNDARY_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    GroundTruth,
    Parametric,
    FrameRaycast,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub class: ObjectClass,
    #[serde(flatten)]
    pub bbox: OrientedBox,
    #[serde(default = "one")]
    pub confidence: f64,
    #[serde(default)]
    pub provenance: Provenance,
}

fn one() -> f64 {
    1.0
}

impl SceneObject {
    pub fn new(id: impl Into<String>, class: ObjectClass, bbox: OrientedBox) -> Self {
        Self { id: id.into(), class, bbox, confidence: 1.0, provenance: Provenance::GroundTruth }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneIssue {
    /// Object id, or a `room/wall/portal` path for structural elements.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for SceneIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("scene schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("scene invariant violated: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invariant(Vec<SceneIssue>),
}

pub fn load_scene(text: &str) -> Result<Scene, SceneError> {
    let scene: Scene = serde_json::from_str(text)?;
    let issues = scene.validate();
    if issues.is_empty() {
        Ok(scene)
    } else {
        Err(SceneError::Invariant(issues))
    }
}

pub fn save_scene(scene: &Scene) -> String {
    serde_json::to_string_pretty(scene).expect("scenes always serialize")
}

impl Scene {
    pub fn room_name(&self, index: usize) -> String {
        match self.rooms.get(index) {
            Some(r) if !r.name.is_empty() => r.name.clone(),
            _ => format!("room{index}"),
        }
    }

    /// Stable id for a portal: its own id if set, else `room/wallJ/portalK`.
    pub fn portal_id(&self, room: usize, wall: usize, portal: usize) -> String {
        let p = &self.rooms[room].walls[wall].portals[portal];
        p.id.clone()
            .unwrap_or_else(|| format!("{}/wall{wall}/portal{portal}", self.room_name(room)))
    }

    /// Each portal as a thin box in its wall: width along the wall, height
    /// from sill to head.
    pub fn portal_objects(&self) -> Vec<SceneObject> {
        let mut out = Vec::new();
        for (ri, room) in self.rooms.iter().enumerate() {
            for (wi, wall) in room.walls.iter().enumerate() {
                let dir = wall.direction();
                let yaw = dir.y.atan2(dir.x);
                for (pi, p) in wall.portals.iter().enumerate() {
                    let mid = wall.a + dir * (p.offset + p.width / 2.0);
                    let center = Vec3::new(mid.x, mid.y, (p.sill + p.head) / 2.0);
                    let half = Vec3::new(p.width / 2.0, (wall.thickness / 2.0).max(0.005), (p.head - p.sill) / 2.0);
                    out.push(SceneObject::new(
                        self.portal_id(ri, wi, pi),
                        p.kind.object_class(),
                        OrientedBox::new(center, half, yaw),
                    ));
                }
            }
        }
        out
    }

    /// Objects plus portal boxes: everything a rule can be evaluated on.
    pub fn subjects(&self) -> Vec<SceneObject> {
        let mut all = self.objects.clone();
        all.extend(self.portal_objects());
        all
    }

    pub fn room_of(&self, p: Vec3) -> Option<usize> {
        self.rooms
            .iter()
            .position(|r| point_in_polygon(&r.floor, p.x, p.y))
            .or_else(|| self.rooms.iter().position(|r| r.contains_xy(p)))
    }

    /// Axis-aligned bounds over floors, walls and objects.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let mut pts: Vec<Vec3> = Vec::new();
        for r in &self.rooms {
            pts.extend(r.floor.iter().copied());
            for w in &r.walls {
                pts.push(w.a);
                pts.push(w.b + Vec3::new(0.0, 0.0, w.height));
            }
        }
        for o in &self.objects {
            pts.extend(o.bbox.corners());
        }
        let first = *pts.first()?;
        Some(pts.iter().fold((first, first), |(lo, hi), p| (lo.component_min(*p), hi.component_max(*p))))
    }

    /// Checks every scene invariant; an empty list means the scene is valid.
    pub fn validate(&self) -> Vec<SceneIssue> {
        let mut issues = Vec::new();
        let mut push = |subject: String, message: &str| {
            issues.push(SceneIssue { subject, message: message.to_string() })
        };
        for (ri, room) in self.rooms.iter().enumerate() {
            let rname = self.room_name(ri);
            if room.floor.len() < 3 {
                push(rname.clone(), "floor polygon needs at least 3 vertices");
            } else {
                if room.floor.iter().any(|v| !v.is_finite() || v.z != 0.0) {
                    push(rname.clone(), "floor vertices must be finite and at z = 0");
                }
                if !polygon_is_simple(&room.floor) {
                    push(rname.clone(), "floor polygon is self-intersecting");
                } else if signed_area(&room.floor) <= 0.0 {
                    push(rname.clone(), "floor polygon must be counter-clockwise");
                }
            }
            for (wi, wall) in room.walls.iter().enumerate() {
                let wname = format!("{rname}/wall{wi}");
                if !wall.a.is_finite() || !wall.b.is_finite() || wall.a.z != 0.0 || wall.b.z != 0.0 {
                    push(wname.clone(), "wall endpoints must be finite and at z = 0");
                }
                if !(wall.length() > 1e-9) {
                    push(wname.clone(), "wall endpoints coincide");
                }
                if !(wall.height > 0.0 && wall.height.is_finite()) {
                    push(wname.clone(), "wall height must be positive");
                }
                if !(wall.thickness >= 0.0 && wall.thickness.is_finite()) {
                    push(wname.clone(), "wall thickness must be non-negative");
                }
                for (pi, p) in wall.portals.iter().enumerate() {
                    let pname = p.id.clone().unwrap_or_else(|| format!("{wname}/portal{pi}"));
                    if !(p.width > 0.0) {
                        push(pname.clone(), "portal width must be positive");
                    }
                    if !(p.offset >= 0.0 && p.offset + p.width <= wall.length() + 1e-9) {
                        push(pname.clone(), "portal extends past the wall ends");
                    }
                    if !(p.sill >= 0.0 && p.sill < p.head && p.head <= wall.height + 1e-9) {
                        push(pname, "portal needs 0 <= sill < head <= wall height");
                    }
                }
            }
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                push(o.id.clone(), "duplicate object id");
            }
            if !o.bbox.is_valid() {
                push(o.id.clone(), "box needs finite center, positive half extents, yaw in [-pi, pi)");
            }
            if !(0.0..=1.0).contains(&o.confidence) {
                push(o.id.clone(), "confidence must lie in [0, 1]");
            }
            if o.bbox.bottom_height() < -FLOOR_TOLERANCE {
                push(o.id.clone(), "box extends below the floor");
            }
        }
        issues
    }
}
