use serde::{Deserialize, Serialize};

use super::{SimulateError, Speed};
use crate::scene::{distance_to_polygon_boundary, point_in_polygon, Pose, Room, Scene, Vec3};

pub const CAMERA_HEIGHT: f64 = 1.5;
/// Horizontal distance kept from an object while looking at it.
pub const VIEW_DISTANCE: f64 = 1.6;
const WALL_CLEARANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub timestamp: f64,
    pub pose: Pose,
    /// Index into `scene.objects` of the object being held in view.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub duration: f64,
    pub frame_rate: f64,
}

impl Trajectory {
    pub fn max_duration(speed: Speed) -> f64 {
        match speed {
            Speed::Fast => 60.0,
            Speed::Slow | Speed::Medium => 120.0,
        }
    }

    /// Frames spent holding `object` in view.
    pub fn dwell_frames(&self, object: usize) -> usize {
        self.samples.iter().filter(|s| s.focus == Some(object)).count()
    }
}

struct Motion {
    dwell: f64,
    walk_speed: f64,
    min_move: f64,
}

fn motion(speed: Speed) -> Motion {
    match speed {
        Speed::Slow => Motion { dwell: 1.1, walk_speed: 0.5, min_move: 0.8 },
        Speed::Medium => Motion { dwell: 0.55, walk_speed: 0.5, min_move: 0.8 },
        Speed::Fast => Motion { dwell: 0.0, walk_speed: 1.5, min_move: 0.6 },
    }
}

/// A stop on the path: where the camera stands and what it looks at.
#[derive(Clone, Copy)]
struct Stop {
    position: Vec3,
    target: Vec3,
    object: Option<usize>,
}

/// Walks each room in turn, stopping in front of every object. Slow and
/// medium scans hold each object in view; fast scans sweep past.
pub fn generate_trajectory(scene: &Scene, speed: Speed, frame_rate: f64) -> Result<Trajectory, SimulateError> {
    if scene.rooms.is_empty() {
        return Err(SimulateError::EmptyScene);
    }
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(SimulateError::InvalidConfig("frame rate must be positive".into()));
    }
    let stops = plan_stops(scene);
    let m = motion(speed);
    let limit = Trajectory::max_duration(speed);

    let moves: Vec<f64> = stops
        .windows(2)
        .map(|w| (w[0].position.distance(w[1].position) / m.walk_speed).max(m.min_move))
        .collect();
    let mut dwell = m.dwell;
    let budget = limit - 1.0 / frame_rate;
    if dwell * stops.len() as f64 > budget / 2.0 {
        dwell = budget / 2.0 / stops.len() as f64;
    }
    let walk_total: f64 = moves.iter().sum();
    let walk_budget = budget - dwell * stops.len() as f64;
    let walk_scale = if walk_total > walk_budget { walk_budget / walk_total } else { 1.0 };

    // Piecewise timeline: dwell at stop i, then move to stop i + 1.
    let mut segments = Vec::new();
    let mut t = 0.0;
    for (i, s) in stops.iter().enumerate() {
        if dwell > 0.0 {
            segments.push((t, t + dwell, *s, *s, true));
            t += dwell;
        }
        if let Some(mv) = moves.get(i) {
            let d = mv * walk_scale;
            segments.push((t, t + d, *s, stops[i + 1], false));
            t += d;
        }
    }
    if segments.is_empty() {
        // A single stop and no dwell: hold it for one frame.
        let s = stops[0];
        segments.push((0.0, 0.0, s, s, false));
    }
    let duration = t;
    let frames = (duration * frame_rate).floor() as usize + 1;
    let mut samples = Vec::with_capacity(frames);
    let mut seg = 0;
    let mut last_pose: Option<Pose> = None;
    for k in 0..frames {
        let ts = k as f64 / frame_rate;
        while seg + 1 < segments.len() && ts > segments[seg].1 + 1e-12 {
            seg += 1;
        }
        let (t0, t1, a, b, holding) = segments[seg];
        let u = if t1 > t0 { ((ts - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        let position = a.position.lerp(b.position, u);
        let target = a.target.lerp(b.target, u);
        let pose = Pose::look_at(position, target)
            .or_else(|| last_pose.map(|p| Pose { position, ..p }))
            .unwrap_or(Pose { position, ..Pose::default() });
        last_pose = Some(pose);
        samples.push(TrajectorySample { timestamp: ts, pose, focus: if holding { a.object } else { None } });
    }
    Ok(Trajectory { samples, duration, frame_rate })
}

fn plan_stops(scene: &Scene) -> Vec<Stop> {
    let mut stops = Vec::new();
    for (ri, room) in scene.rooms.iter().enumerate() {
        let centroid = room.centroid();
        let mut members: Vec<(f64, &str, usize)> = scene
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| scene.room_of(o.bbox.center) == Some(ri))
            .map(|(i, o)| {
                let d = o.bbox.center - centroid;
                (d.y.atan2(d.x), o.id.as_str(), i)
            })
            .collect();
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        if members.is_empty() {
            let eye = Vec3::new(centroid.x, centroid.y, CAMERA_HEIGHT);
            stops.push(Stop { position: eye, target: eye + Vec3::new(1.0, 0.0, -0.3), object: None });
            continue;
        }
        for (_, _, i) in members {
            let target = scene.objects[i].bbox.center;
            stops.push(Stop { position: viewpoint(room, target), target, object: Some(i) });
        }
    }
    stops
}

/// A standing point `VIEW_DISTANCE` from the target toward the room center,
/// pulled inward until it clears the walls.
fn viewpoint(room: &Room, target: Vec3) -> Vec3 {
    let c = room.centroid();
    let away = Vec3::new(c.x - target.x, c.y - target.y, 0.0);
    let dir = away.normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let mut p = Vec3::new(target.x, target.y, 0.0) + dir * VIEW_DISTANCE;
    for _ in 0..30 {
        if point_in_polygon(&room.floor, p.x, p.y)
            && distance_to_polygon_boundary(&room.floor, p.x, p.y) >= WALL_CLEARANCE
        {
            break;
        }
        p = p.lerp(Vec3::new(c.x, c.y, 0.0), 0.25);
    }
    Vec3::new(p.x, p.y, CAMERA_HEIGHT)
}
