//! Seeded scan simulation. A ground-truth scene plus scan conditions yields a
//! scan log: camera frames with noisy 2D detections, delayed and noisy 3D
//! boxes, and the scanned room structure.

mod calibration;
mod trajectory;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::perceive::{class_prior, BBox2d, CameraFrame, FrameDetection, ParametricObservation, ScanLog};
use crate::rulespec::{fold_name, Channel, ObjectClass};
use crate::scene::{
    ray_occluded, CameraIntrinsics, OrientedBox, Pose, Room, Scene, SceneObject, Vec3,
};

pub use calibration::{ByLighting, BySpeed, ByTidiness, NoiseCalibration};
pub use trajectory::{generate_trajectory, Trajectory, TrajectorySample, CAMERA_HEIGHT, VIEW_DISTANCE};

pub const DEFAULT_FRAME_RATE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lighting {
    /// Above 30 lux.
    WellLit,
    /// Around 5 lux.
    Partial,
    /// Below 1 lux.
    Poor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speed {
    Slow,
    Medium,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tidiness {
    Clean,
    Messy,
    VeryMessy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScanFactors {
    pub lighting: Lighting,
    pub speed: Speed,
    pub tidiness: Tidiness,
}

impl ScanFactors {
    pub const REFERENCE: ScanFactors =
        ScanFactors { lighting: Lighting::WellLit, speed: Speed::Medium, tidiness: Tidiness::Clean };

    pub const fn new(lighting: Lighting, tidiness: Tidiness, speed: Speed) -> Self {
        Self { lighting, speed, tidiness }
    }

    /// The six conditions of the factor study, in table order.
    pub fn study_conditions() -> [ScanFactors; 6] {
        use Lighting::*;
        use Speed::*;
        use Tidiness::*;
        [
            ScanFactors::new(WellLit, Clean, Medium),
            ScanFactors::new(Partial, Clean, Medium),
            ScanFactors::new(Poor, Clean, Medium),
            ScanFactors::new(WellLit, Messy, Medium),
            ScanFactors::new(WellLit, VeryMessy, Medium),
            ScanFactors::new(WellLit, Clean, Fast),
        ]
    }
}

impl fmt::Display for ScanFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.lighting {
            Lighting::WellLit => "well-lit",
            Lighting::Partial => "partial",
            Lighting::Poor => "poor",
        };
        let t = match self.tidiness {
            Tidiness::Clean => "clean",
            Tidiness::Messy => "messy",
            Tidiness::VeryMessy => "very-messy",
        };
        let s = match self.speed {
            Speed::Slow => "slow",
            Speed::Medium => "medium",
            Speed::Fast => "fast",
        };
        write!(f, "{l},{t},{s}")
    }
}

/// Parses a comma-separated list of factor levels in any order, e.g.
/// `"partial,messy,fast"`. Axes left out take their reference level.
impl FromStr for ScanFactors {
    type Err = SimulateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = ScanFactors::REFERENCE;
        let mut seen = [false; 3];
        for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let axis = match fold_name(token).as_str() {
                "welllit" | "well" | "lit" => { f.lighting = Lighting::WellLit; 0 }
                "partial" | "partiallylit" => { f.lighting = Lighting::Partial; 0 }
                "poor" | "poorlylit" | "dark" | "verydark" => { f.lighting = Lighting::Poor; 0 }
                "slow" => { f.speed = Speed::Slow; 1 }
                "medium" | "med" => { f.speed = Speed::Medium; 1 }
                "fast" => { f.speed = Speed::Fast; 1 }
                "clean" => { f.tidiness = Tidiness::Clean; 2 }
                "messy" | "moderatelymessy" => { f.tidiness = Tidiness::Messy; 2 }
                "verymessy" | "vmessy" => { f.tidiness = Tidiness::VeryMessy; 2 }
                _ => return Err(SimulateError::InvalidConfig(format!("unknown scan factor `{token}`"))),
            };
            if std::mem::replace(&mut seen[axis], true) {
                return Err(SimulateError::InvalidConfig(format!("scan factor axis given twice in `{s}`")));
            }
        }
        Ok(f)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("scene has no rooms to scan")]
    EmptyScene,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// A scan config file: conditions, seed and calibration overrides merged over
/// the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub factors: ScanFactors,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<serde_json::Value>,
}

fn default_frame_rate() -> f64 {
    DEFAULT_FRAME_RATE
}

impl ScanConfig {
    pub fn resolved_calibration(&self) -> Result<NoiseCalibration, SimulateError> {
        match &self.calibration {
            None => Ok(NoiseCalibration::default()),
            Some(v) => NoiseCalibration::default().with_overrides(v),
        }
    }
}

/// Where a simulated detection came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DetectionSource {
    /// Index into the ground-truth scene's objects.
    Object { index: usize, visible_fraction: f64 },
    /// A clutter item mistaken for an object of interest.
    Clutter { index: usize, visible_fraction: f64 },
}

/// Simulation side information used by tests and diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ScanTrace {
    /// Per frame, the source of each detection in order.
    pub sources: Vec<Vec<DetectionSource>>,
    /// Per ground-truth object, the number of frames it was visible in.
    pub visible_frames: Vec<usize>,
    pub clutter: Vec<SceneObject>,
    pub trajectory: Option<Trajectory>,
}

pub fn simulate_scan(scene: &Scene, factors: ScanFactors, calib: &NoiseCalibration, seed: u64) -> Result<ScanLog, SimulateError> {
    simulate_scan_traced(scene, factors, calib, seed, DEFAULT_FRAME_RATE).map(|(log, _)| log)
}

pub fn simulate_with_config(scene: &Scene, cfg: &ScanConfig) -> Result<ScanLog, SimulateError> {
    let calib = cfg.resolved_calibration()?;
    simulate_scan_traced(scene, cfg.factors, &calib, cfg.seed, cfg.frame_rate).map(|(log, _)| log)
}

const STREAM_CLUTTER: u64 = 1;
const STREAM_STRUCTURE: u64 = 2;
const STREAM_PARAMETRIC: u64 = 3;
const STREAM_FRAMES: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    // Always draw, so that one object's outcome never shifts the stream for
    // the next one between conditions.
    let u: f64 = rng.random();
    u < p
}

pub fn simulate_scan_traced(
    scene: &Scene,
    factors: ScanFactors,
    calib: &NoiseCalibration,
    seed: u64,
    frame_rate: f64,
) -> Result<(ScanLog, ScanTrace), SimulateError> {
    calib.validate()?;
    let trajectory = generate_trajectory(scene, factors.speed, frame_rate)?;
    let k = CameraIntrinsics::default();

    let clutter = place_clutter(scene, calib, factors.tidiness, &mut stream(seed, STREAM_CLUTTER));
    let mut world = scene.clone();
    world.objects.extend(clutter.iter().map(|c| c.object.clone()));
    let n_gt = scene.objects.len();

    let frame_objects: Vec<usize> =
        (0..n_gt).filter(|&i| scene.objects[i].class.channel() == Channel::FrameDetection).collect();
    let param_objects: Vec<usize> =
        (0..n_gt).filter(|&i| scene.objects[i].class.channel() == Channel::Parametric).collect();

    let noise_scale = calib.lighting_noise.get(factors.lighting) * calib.speed_noise.get(factors.speed);
    let det_mult = calib.lighting.get(factors.lighting)
        * calib.speed.get(factors.speed)
        * calib.clutter.get(factors.tidiness);
    let param_p = (calib.parametric_lighting.get(factors.lighting) * calib.parametric_speed.get(factors.speed)).clamp(0.0, 1.0);
    let conf_mean = calib.confidence_mean.get(factors.lighting);
    let needed = (calib.parametric_dwell_s * frame_rate).ceil().max(1.0) as usize;

    let mut frames_rng = stream(seed, STREAM_FRAMES);
    let mut param_rng = stream(seed, STREAM_PARAMETRIC);
    let mut seen_count = vec![0usize; n_gt];
    let mut emitted = vec![false; n_gt];
    let mut parametric = Vec::new();
    let mut frames = Vec::with_capacity(trajectory.samples.len());
    let mut trace = ScanTrace { visible_frames: vec![0; n_gt], ..Default::default() };

    for (fi, sample) in trajectory.samples.iter().enumerate() {
        let pose = sample.pose;
        let mut detections = Vec::new();
        let mut sources = Vec::new();

        for &oi in &frame_objects {
            let o = &scene.objects[oi];
            let anchor = class_prior(o.class).anchor_of(&o.bbox);
            let view = view_of(&world, oi, &o.bbox, anchor, &pose, &k, calib.min_visible_fraction);
            // Draws happen for every object and frame so streams stay aligned.
            let hit = bernoulli(&mut frames_rng, (calib.base_probability(o.class) * det_mult).clamp(0.0, 1.0));
            let u_class: f64 = frames_rng.random();
            let (nu, nv) = (normal(&mut frames_rng, calib.bbox_sigma_px * noise_scale), normal(&mut frames_rng, calib.bbox_sigma_px * noise_scale));
            let conf = (conf_mean + normal(&mut frames_rng, calib.confidence_sigma)).clamp(0.0, 1.0);
            let Some(view) = view else { continue };
            trace.visible_frames[oi] += 1;
            if !hit {
                continue;
            }
            let Some(class) = calib.sample_class(o.class, u_class) else { continue };
            if let Some(bbox) = noisy_bbox(&k, view, nu, nv) {
                detections.push(FrameDetection { class, bbox, confidence: conf });
                sources.push(DetectionSource::Object { index: oi, visible_fraction: view.fraction });
            }
        }

        for (ci, c) in clutter.iter().enumerate() {
            let Some(class) = c.lookalike else { continue };
            let anchor = class_prior(class).anchor_of(&c.object.bbox);
            let view = view_of(&world, n_gt + ci, &c.object.bbox, anchor, &pose, &k, calib.min_visible_fraction);
            let hit = bernoulli(&mut frames_rng, (calib.distractor_probability * calib.lighting.get(factors.lighting)).clamp(0.0, 1.0));
            let (nu, nv) = (normal(&mut frames_rng, calib.bbox_sigma_px * noise_scale), normal(&mut frames_rng, calib.bbox_sigma_px * noise_scale));
            let conf = (conf_mean + normal(&mut frames_rng, calib.confidence_sigma)).clamp(0.0, 1.0);
            let Some(view) = view else { continue };
            if !hit {
                continue;
            }
            if let Some(bbox) = noisy_bbox(&k, view, nu, nv) {
                detections.push(FrameDetection { class, bbox, confidence: conf });
                sources.push(DetectionSource::Clutter { index: ci, visible_fraction: view.fraction });
            }
        }

        for &oi in &param_objects {
            let counted = bernoulli(&mut param_rng, param_p);
            if emitted[oi] {
                continue;
            }
            let o = &scene.objects[oi];
            if view_of(&world, oi, &o.bbox, o.bbox.center, &pose, &k, calib.min_visible_fraction).is_none() || !counted {
                continue;
            }
            trace.visible_frames[oi] += 1;
            seen_count[oi] += 1;
            if seen_count[oi] >= needed {
                emitted[oi] = true;
                let mut rng = stream(seed, STREAM_PARAMETRIC + 16 + oi as u64);
                parametric.push(ParametricObservation {
                    class: o.class,
                    bbox: noisy_box(&o.bbox, calib.dimension_sigma_m * noise_scale, &mut rng),
                    confidence: (calib.parametric_confidence + normal(&mut rng, calib.confidence_sigma)).clamp(0.0, 1.0),
                    first_seen: sample.timestamp,
                });
            }
        }

        frames.push(CameraFrame { index: fi, timestamp: sample.timestamp, pose, detections });
        trace.sources.push(sources);
    }

    let mut srng = stream(seed, STREAM_STRUCTURE);
    let rooms = scene.rooms.iter().map(|r| noisy_room(r, calib.dimension_sigma_m * noise_scale, &mut srng)).collect();
    trace.clutter = clutter.into_iter().map(|c| c.object).collect();
    trace.trajectory = Some(trajectory);
    let log = ScanLog { intrinsics: k, frames, parametric, rooms, factors: Some(factors), seed: Some(seed) };
    Ok((log, trace))
}

#[derive(Debug, Clone, Copy)]
struct View {
    u: f64,
    v: f64,
    half_w: f64,
    half_h: f64,
    fraction: f64,
}

/// Projects an object into the camera. Visible means the anchor is in the
/// image and unoccluded and at least `min_fraction` of the anchor plus the
/// box corners are visible.
fn view_of(world: &Scene, index: usize, b: &OrientedBox, anchor: Vec3, pose: &Pose, k: &CameraIntrinsics, min_fraction: f64) -> Option<View> {
    let (u, v, _) = pose.project(k, anchor)?;
    if !k.in_image(u, v) || occluded(world, index, pose.position, anchor) {
        return None;
    }
    let mut visible = 1usize;
    let (mut half_w, mut half_h) = (0.0f64, 0.0f64);
    for c in b.corners() {
        match pose.project(k, c) {
            Some((cu, cv, _)) => {
                half_w = half_w.max((cu - u).abs());
                half_h = half_h.max((cv - v).abs());
                if k.in_image(cu, cv) && !occluded(world, index, pose.position, c) {
                    visible += 1;
                }
            }
            None => {
                half_w = f64::INFINITY;
                half_h = f64::INFINITY;
            }
        }
    }
    let fraction = visible as f64 / 9.0;
    (fraction >= min_fraction).then_some(View { u, v, half_w, half_h, fraction })
}

fn occluded(world: &Scene, index: usize, eye: Vec3, p: Vec3) -> bool {
    ray_occluded(world, eye, p - eye, 1.0 - 1e-9, Some(index))
}

/// A pixel box centered on the (noisy) anchor projection, shrunk
/// symmetrically to fit the image.
fn noisy_bbox(k: &CameraIntrinsics, view: View, nu: f64, nv: f64) -> Option<BBox2d> {
    let (u, v) = (view.u + nu, view.v + nv);
    if !k.in_image(u, v) {
        return None;
    }
    let half_w = view.half_w.max(1.0).min(u).min(k.width as f64 - u);
    let half_h = view.half_h.max(1.0).min(v).min(k.height as f64 - v);
    Some(BBox2d::centered(u, v, half_w, half_h))
}

/// Perturbs a box's top and bottom heights and its footprint. Boxes standing
/// on the floor stay on it.
fn noisy_box(b: &OrientedBox, sigma: f64, rng: &mut ChaCha8Rng) -> OrientedBox {
    if sigma <= 0.0 {
        return *b;
    }
    let bottom0 = b.bottom_height();
    let grounded = bottom0.abs() < 1e-6;
    let db = normal(rng, sigma);
    let dt = normal(rng, sigma);
    let bottom = if grounded { bottom0 } else { bottom0 + db };
    let top = (b.top_height() + dt).max(bottom + 0.01);
    let hx = (b.half_extents.x + normal(rng, sigma / 2.0)).max(0.005);
    let hy = (b.half_extents.y + normal(rng, sigma / 2.0)).max(0.005);
    let cx = b.center.x + normal(rng, sigma);
    let cy = b.center.y + normal(rng, sigma);
    let yaw = b.yaw + normal(rng, sigma / 4.0);
    OrientedBox::new(Vec3::new(cx, cy, (top + bottom) / 2.0), Vec3::new(hx, hy, (top - bottom) / 2.0), yaw)
}

fn noisy_room(room: &Room, sigma: f64, rng: &mut ChaCha8Rng) -> Room {
    let mut r = room.clone();
    for w in &mut r.walls {
        let len = w.length();
        for p in &mut w.portals {
            let d = normal(rng, sigma);
            let width = (p.width + d).clamp(0.05, len - p.offset);
            p.width = width;
        }
    }
    r
}

struct Clutter {
    object: SceneObject,
    lookalike: Option<ObjectClass>,
}

/// Classes clutter is dropped on, besides the floor.
const CLUTTER_SUPPORTS: &[ObjectClass] =
    &[ObjectClass::Rug, ObjectClass::Table, ObjectClass::Counter, ObjectClass::Sofa, ObjectClass::Bed, ObjectClass::Chair];

/// Drops clutter boxes on rugs, furniture tops and open floor.
fn place_clutter(scene: &Scene, calib: &NoiseCalibration, tidiness: Tidiness, rng: &mut ChaCha8Rng) -> Vec<Clutter> {
    let count = calib.clutter_count.get(tidiness);
    let supports: Vec<&SceneObject> = scene.objects.iter().filter(|o| CLUTTER_SUPPORTS.contains(&o.class)).collect();
    let mut out = Vec::new();
    for i in 0..count {
        let hx = rng.random_range(0.08..0.25);
        let hy = rng.random_range(0.08..0.2);
        let hz = rng.random_range(0.03..0.15);
        let yaw = rng.random_range(-3.0..3.0);
        let on_support = !supports.is_empty() && rng.random_bool(0.75);
        let (x, y, base) = if on_support {
            let s = supports[rng.random_range(0..supports.len())];
            let lx = rng.random_range(-1.0..1.0) * s.bbox.half_extents.x * 0.8;
            let ly = rng.random_range(-1.0..1.0) * s.bbox.half_extents.y * 0.8;
            let p = s.bbox.to_world(Vec3::new(lx, ly, 0.0));
            (p.x, p.y, s.bbox.top_height())
        } else {
            let room = &scene.rooms[rng.random_range(0..scene.rooms.len())];
            let c = room.centroid();
            let p = room.floor[rng.random_range(0..room.floor.len())].lerp(c, rng.random_range(0.2..0.8));
            (p.x, p.y, 0.0)
        };
        let lookalike = if calib.distractor_classes.is_empty() {
            None
        } else {
            let roll: f64 = rng.random();
            let pick = calib.distractor_classes[rng.random_range(0..calib.distractor_classes.len())];
            (roll < calib.distractor_fraction).then_some(pick)
        };
        let bbox = OrientedBox::new(Vec3::new(x, y, base + hz), Vec3::new(hx, hy, hz), yaw);
        out.push(Clutter { object: SceneObject::new(format!("clutter-{i}"), ObjectClass::Storage, bbox), lookalike });
    }
    out
}
