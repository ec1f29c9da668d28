//! Perception: turns a scan log into a perceived scene. Image detections are
//! raycast into the room, smoothed per track over a sliding window and fused
//! with the room scanner's 3D boxes.

mod priors;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::rulespec::ObjectClass;
use crate::scene::{
    ray_intersect, CameraIntrinsics, OrientedBox, Pose, Provenance, Room, Scene, SceneObject, Vec3,
};
use crate::simulate::ScanFactors;

pub use priors::{class_prior, ClassPrior, Placement};

/// Axis-aligned pixel rectangle, serialized as `[u_min, v_min, u_max, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox2d {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl From<[f64; 4]> for BBox2d {
    fn from([u_min, v_min, u_max, v_max]: [f64; 4]) -> Self {
        Self { u_min, v_min, u_max, v_max }
    }
}

impl From<BBox2d> for [f64; 4] {
    fn from(b: BBox2d) -> Self {
        [b.u_min, b.v_min, b.u_max, b.v_max]
    }
}

impl BBox2d {
    pub fn centered(u: f64, v: f64, half_w: f64, half_h: f64) -> Self {
        Self { u_min: u - half_w, v_min: v - half_h, u_max: u + half_w, v_max: v + half_h }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.u_min + self.u_max) / 2.0, (self.v_min + self.v_max) / 2.0)
    }

    pub fn area(&self) -> f64 {
        (self.u_max - self.u_min).max(0.0) * (self.v_max - self.v_min).max(0.0)
    }

    pub fn iou(&self, o: &BBox2d) -> f64 {
        let w = (self.u_max.min(o.u_max) - self.u_min.max(o.u_min)).max(0.0);
        let h = (self.v_max.min(o.v_max) - self.v_min.max(o.v_min)).max(0.0);
        let inter = w * h;
        let union = self.area() + o.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    pub fn is_valid_in(&self, k: &CameraIntrinsics) -> bool {
        self.u_min <= self.u_max
            && self.v_min <= self.v_max
            && k.in_image(self.u_min, self.v_min)
            && k.in_image(self.u_max, self.v_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetection {
    pub class: ObjectClass,
    pub bbox: BBox2d,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub index: usize,
    pub timestamp: f64,
    pub pose: Pose,
    #[serde(default)]
    pub detections: Vec<FrameDetection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricObservation {
    pub class: ObjectClass,
    #[serde(flatten)]
    pub bbox: OrientedBox,
    pub confidence: f64,
    pub first_seen: f64,
}

/// A recorded scan: camera frames with 2D detections, 3D boxes from the room
/// scanner, and the scanned room structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanLog {
    pub intrinsics: CameraIntrinsics,
    pub frames: Vec<CameraFrame>,
    #[serde(default)]
    pub parametric: Vec<ParametricObservation>,
    /// Walls, floors and wall openings as the scanner captured them.
    #[serde(default)]
    pub rooms: Vec<Room>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<ScanFactors>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScanLogError {
    #[error("scan log schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("scan log invalid: {0}")]
    Invalid(String),
}

impl ScanLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scan logs always serialize")
    }

    pub fn from_json(text: &str) -> Result<ScanLog, ScanLogError> {
        let log: ScanLog = serde_json::from_str(text)?;
        log.check()?;
        Ok(log)
    }

    fn check(&self) -> Result<(), ScanLogError> {
        let bad = |m: String| Err(ScanLogError::Invalid(m));
        if !self.intrinsics.is_valid() {
            return bad("intrinsics must have positive size and focal lengths".into());
        }
        for w in self.frames.windows(2) {
            if !(w[1].timestamp > w[0].timestamp) {
                return bad(format!("frame {} timestamp does not increase", w[1].index));
            }
        }
        for f in &self.frames {
            for d in &f.detections {
                if !d.bbox.is_valid_in(&self.intrinsics) || !(0.0..=1.0).contains(&d.confidence) {
                    return bad(format!("frame {} has a detection outside the image or confidence range", f.index));
                }
            }
        }
        if self.parametric.iter().any(|p| !p.bbox.is_valid() || !(0.0..=1.0).contains(&p.confidence)) {
            return bad("parametric observation with an invalid box or confidence".into());
        }
        Ok(())
    }
}

/// Localizes a detection by casting the ray through its box center.
pub fn localize(
    det: &FrameDetection,
    frame: &CameraFrame,
    intrinsics: &CameraIntrinsics,
    geometry: &Scene,
) -> Option<Vec3> {
    let (u, v) = det.bbox.center();
    let dir = frame.pose.unproject(intrinsics, u, v);
    ray_intersect(geometry, frame.pose.position, dir).map(|h| h.point)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub window: usize,
    pub iou_threshold: f64,
    /// Largest 3D distance between a detection's point and the track's last
    /// point for the two to be associated.
    pub gate_distance: f64,
    /// Frames without a sighting after which a track is closed.
    pub max_unseen: usize,
    /// Points a track needs to emit when it closes before filling a window.
    pub min_points: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { window: 5, iou_threshold: 0.3, gate_distance: 0.5, max_unseen: 15, min_points: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub class: ObjectClass,
    pub points: VecDeque<Vec3>,
    pub confidences: VecDeque<f64>,
    pub last_bbox: BBox2d,
    pub last_frame: usize,
    pub emitted: bool,
}

impl Track {
    fn mean(&self) -> LocalizedDetection {
        let n = self.points.len() as f64;
        let sum = self.points.iter().fold(Vec3::ZERO, |a, p| a + *p);
        LocalizedDetection {
            class: self.class,
            point: sum / n,
            confidence: self.confidences.iter().sum::<f64>() / n,
            frame: self.last_frame,
        }
    }
}

/// A smoothed 3D location for one track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedDetection {
    pub class: ObjectClass,
    pub point: Vec3,
    pub confidence: f64,
    pub frame: usize,
}

/// Feeds one frame's localized detections into the tracks, comparing boxes
/// where they were last seen. Emits a window mean whenever a track holds a
/// full window, and closes tracks that have gone unseen too long.
pub fn update_tracks(
    tracks: &mut Vec<Track>,
    frame: usize,
    detections: &[(FrameDetection, Vec3)],
    cfg: &TrackerConfig,
) -> Vec<LocalizedDetection> {
    update_tracks_in_view(tracks, frame, None, detections, cfg)
}

/// Like [`update_tracks`], but with the frame's camera: each track's last
/// box is first moved to where its last point projects, so camera motion
/// between frames does not break association.
pub fn update_tracks_in_view(
    tracks: &mut Vec<Track>,
    frame: usize,
    view: Option<(&Pose, &CameraIntrinsics)>,
    detections: &[(FrameDetection, Vec3)],
    cfg: &TrackerConfig,
) -> Vec<LocalizedDetection> {
    let predicted: Vec<BBox2d> = tracks.iter().map(|t| predict_bbox(t, view)).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (di, (d, p)) in detections.iter().enumerate() {
        for (ti, t) in tracks.iter().enumerate() {
            let near = t.points.back().is_some_and(|q| q.distance(*p) <= cfg.gate_distance);
            if t.class == d.class && near {
                let iou = predicted[ti].iou(&d.bbox);
                if iou >= cfg.iou_threshold {
                    pairs.push((iou, di, ti));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut det_track: Vec<Option<usize>> = vec![None; detections.len()];
    let mut track_used = vec![false; tracks.len()];
    for (_, di, ti) in pairs {
        if det_track[di].is_none() && !track_used[ti] {
            det_track[di] = Some(ti);
            track_used[ti] = true;
        }
    }

    let mut out = Vec::new();
    for (di, (d, p)) in detections.iter().enumerate() {
        let ti = det_track[di].unwrap_or_else(|| {
            tracks.push(Track {
                class: d.class,
                points: VecDeque::new(),
                confidences: VecDeque::new(),
                last_bbox: d.bbox,
                last_frame: frame,
                emitted: false,
            });
            tracks.len() - 1
        });
        let t = &mut tracks[ti];
        t.points.push_back(*p);
        t.confidences.push_back(d.confidence);
        if t.points.len() > cfg.window {
            t.points.pop_front();
            t.confidences.pop_front();
        }
        t.last_bbox = d.bbox;
        t.last_frame = frame;
        if t.points.len() == cfg.window {
            t.emitted = true;
            out.push(t.mean());
        }
    }

    tracks.retain(|t| {
        let stale = frame.saturating_sub(t.last_frame) >= cfg.max_unseen;
        if stale {
            out.extend(close(t, cfg));
        }
        !stale
    });
    out
}

fn predict_bbox(t: &Track, view: Option<(&Pose, &CameraIntrinsics)>) -> BBox2d {
    let b = t.last_bbox;
    let projected = view.zip(t.points.back()).and_then(|((pose, k), p)| pose.project(k, *p));
    match projected {
        Some((u, v, _)) => {
            let (cu, cv) = b.center();
            BBox2d { u_min: b.u_min + u - cu, v_min: b.v_min + v - cv, u_max: b.u_max + u - cu, v_max: b.v_max + v - cv }
        }
        None => b,
    }
}

/// Closes every remaining track, as at the end of a scan.
pub fn flush_tracks(tracks: &mut Vec<Track>, cfg: &TrackerConfig) -> Vec<LocalizedDetection> {
    tracks.drain(..).filter_map(|t| close(&t, cfg)).collect()
}

fn close(t: &Track, cfg: &TrackerConfig) -> Option<LocalizedDetection> {
    (!t.emitted && t.points.len() >= cfg.min_points).then(|| t.mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub dedupe_radius: f64,
    pub min_confidence: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { dedupe_radius: 0.25, min_confidence: 0.5 }
    }
}

/// Builds perceived objects from both channels, then deduplicates.
pub fn fuse(
    parametric: &[ParametricObservation],
    localized: &[LocalizedDetection],
    cfg: &FusionConfig,
) -> Vec<SceneObject> {
    let mut candidates = Vec::with_capacity(parametric.len() + localized.len());
    for (i, p) in parametric.iter().enumerate() {
        candidates.push(SceneObject {
            id: format!("{}-p{i}", p.class.dsl_name().to_lowercase().replace(' ', "-")),
            class: p.class,
            bbox: p.bbox,
            confidence: p.confidence,
            provenance: Provenance::Parametric,
        });
    }
    for (i, l) in localized.iter().enumerate() {
        let prior = class_prior(l.class);
        candidates.push(SceneObject {
            id: format!("{}-r{i}", l.class.dsl_name().to_lowercase().replace(' ', "-")),
            class: l.class,
            bbox: OrientedBox::new(prior.center_from_point(l.point), prior.half_extents, 0.0),
            confidence: l.confidence,
            provenance: Provenance::FrameRaycast,
        });
    }
    dedupe(candidates, cfg)
}

/// Drops low-confidence candidates and collapses same-class candidates
/// closer than the dedupe radius, keeping the most confident. Survivors keep
/// their input order.
pub fn dedupe(candidates: Vec<SceneObject>, cfg: &FusionConfig) -> Vec<SceneObject> {
    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].confidence >= cfg.min_confidence)
        .collect();
    order.sort_by(|&a, &b| candidates[b].confidence.total_cmp(&candidates[a].confidence).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let c = &candidates[i];
        let clash = kept.iter().any(|&k| {
            candidates[k].class == c.class && candidates[k].bbox.center.distance(c.bbox.center) <= cfg.dedupe_radius
        });
        if !clash {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let mut keep = vec![false; candidates.len()];
    for k in kept {
        keep[k] = true;
    }
    candidates.into_iter().zip(keep).filter_map(|(c, k)| k.then_some(c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerceptionConfig {
    #[serde(default)]
    pub tracker: TrackerConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
}

/// Runs the full pipeline over a scan log and returns the perceived scene.
pub fn perceive(log: &ScanLog, cfg: &PerceptionConfig) -> Scene {
    let geometry = localization_geometry(log);
    let mut tracks = Vec::new();
    let mut localized = Vec::new();
    for frame in &log.frames {
        let dets: Vec<(FrameDetection, Vec3)> = frame
            .detections
            .iter()
            .filter_map(|d| localize(d, frame, &log.intrinsics, &geometry).map(|p| (d.clone(), p)))
            .collect();
        let view = Some((&frame.pose, &log.intrinsics));
        localized.extend(update_tracks_in_view(&mut tracks, frame.index, view, &dets, &cfg.tracker));
    }
    localized.extend(flush_tracks(&mut tracks, &cfg.tracker));
    Scene { rooms: log.rooms.clone(), objects: fuse(&log.parametric, &localized, &cfg.fusion) }
}

/// Surfaces detections are raycast against: the scanned structure plus the
/// room scanner's boxes.
pub fn localization_geometry(log: &ScanLog) -> Scene {
    let objects = log
        .parametric
        .iter()
        .enumerate()
        .map(|(i, p)| SceneObject::new(format!("p{i}"), p.class, p.bbox))
        .collect();
    Scene { rooms: log.rooms.clone(), objects }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{PortalCutout, PortalKind, WallSegment};
    use proptest::prelude::*;

    fn det(class: ObjectClass, u: f64, v: f64, conf: f64) -> FrameDetection {
        FrameDetection { class, bbox: BBox2d::centered(u, v, 20.0, 20.0), confidence: conf }
    }

    fn wall_scene() -> Scene {
        let a = Vec3::new(3.0, -5.0, 0.0);
        let b = Vec3::new(3.0, 5.0, 0.0);
        let portals = vec![PortalCutout { id: None, kind: PortalKind::Window, offset: 6.0, width: 1.0, sill: 0.9, head: 2.1 }];
        let floor = vec![Vec3::new(-5.0, -5.0, 0.0), a, b, Vec3::new(-5.0, 5.0, 0.0)];
        Scene {
            rooms: vec![Room { name: "r".into(), floor, walls: vec![WallSegment { a, b, height: 2.5, thickness: 0.1, portals }] }],
            objects: vec![],
        }
    }

    #[test]
    fn principal_ray_hits_wall() {
        let k = CameraIntrinsics::default();
        let pose = Pose::look_at(Vec3::new(0.0, 0.0, 1.5), Vec3::new(1.0, 0.0, 1.5)).unwrap();
        let frame = CameraFrame { index: 0, timestamp: 0.0, pose, detections: vec![] };
        let p = localize(&det(ObjectClass::LightSwitch, 320.0, 240.0, 0.9), &frame, &k, &wall_scene()).unwrap();
        assert!(p.distance(Vec3::new(3.0, 0.0, 1.5)) < 1e-12);
        // Through the window at y in (1, 2).
        let pose = Pose::look_at(Vec3::new(0.0, 1.5, 1.5), Vec3::new(1.0, 1.5, 1.5)).unwrap();
        let frame = CameraFrame { index: 0, timestamp: 0.0, pose, detections: vec![] };
        assert!(localize(&det(ObjectClass::LightSwitch, 320.0, 240.0, 0.9), &frame, &k, &wall_scene()).is_none());
    }

    #[test]
    fn window_mean() {
        let cfg = TrackerConfig::default();
        let mut tracks = Vec::new();
        let mut out = Vec::new();
        for i in 0..5 {
            let d = det(ObjectClass::Knob, 100.0, 100.0, 0.8);
            out.extend(update_tracks(&mut tracks, i, &[(d, Vec3::new(i as f64 * 0.1, 0.0, 0.0))], &cfg));
        }
        assert_eq!(out.len(), 1);
        assert!(out[0].point.distance(Vec3::new(0.2, 0.0, 0.0)) < 1e-12);
        assert!((out[0].confidence - 0.8).abs() < 1e-12);
        // Sliding: the sixth point evicts the first.
        let d = det(ObjectClass::Knob, 100.0, 100.0, 0.8);
        let more = update_tracks(&mut tracks, 5, &[(d, Vec3::new(0.5, 0.0, 0.0))], &cfg);
        assert!(more[0].point.distance(Vec3::new(0.3, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn classes_never_merge() {
        let cfg = TrackerConfig::default();
        let mut tracks = Vec::new();
        let mut out = Vec::new();
        for i in 0..10 {
            let class = if i % 2 == 0 { ObjectClass::LightSwitch } else { ObjectClass::ElectricSocket };
            let p = Vec3::new(if i % 2 == 0 { 0.0 } else { 1.0 }, 0.0, 0.0);
            out.extend(update_tracks(&mut tracks, i, &[(det(class, 200.0, 200.0, 0.9), p)], &cfg));
        }
        assert_eq!(tracks.len(), 2);
        assert_eq!(out.len(), 2);
        for o in &out {
            let want = if o.class == ObjectClass::LightSwitch { 0.0 } else { 1.0 };
            assert_eq!(o.point.x, want);
        }
    }

    #[test]
    fn distant_points_start_new_tracks() {
        let cfg = TrackerConfig::default();
        let mut tracks = Vec::new();
        for i in 0..4 {
            let p = Vec3::new(if i % 2 == 0 { 0.0 } else { 1.0 }, 0.0, 0.0);
            update_tracks(&mut tracks, i, &[(det(ObjectClass::Knob, 200.0, 200.0, 0.9), p)], &cfg);
        }
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn panning_camera_keeps_one_track() {
        let cfg = TrackerConfig::default();
        let k = CameraIntrinsics::default();
        let target = Vec3::new(3.0, 0.0, 1.0);
        let mut compensated = Vec::new();
        let mut plain = Vec::new();
        for i in 0..5 {
            // The camera turns so the target slides ~60 px per frame.
            let look = Vec3::new(3.0, -0.4 + 0.4 * i as f64, 1.0);
            let pose = Pose::look_at(Vec3::new(0.0, 0.0, 1.0), look).unwrap();
            let (u, v, _) = pose.project(&k, target).unwrap();
            let d = FrameDetection { class: ObjectClass::Knob, bbox: BBox2d::centered(u, v, 8.0, 8.0), confidence: 0.9 };
            update_tracks_in_view(&mut compensated, i, Some((&pose, &k)), &[(d.clone(), target)], &cfg);
            update_tracks(&mut plain, i, &[(d, target)], &cfg);
        }
        assert_eq!(compensated.len(), 1);
        assert_eq!(plain.len(), 5);
    }

    #[test]
    fn short_tracks_close_with_three_points() {
        let cfg = TrackerConfig::default();
        let mut tracks = Vec::new();
        let mut out = Vec::new();
        for i in 0..3 {
            out.extend(update_tracks(&mut tracks, i, &[(det(ObjectClass::Rug, 50.0, 50.0, 0.9), Vec3::ZERO)], &cfg));
        }
        for i in 3..30 {
            out.extend(update_tracks(&mut tracks, i, &[], &cfg));
        }
        assert_eq!(out.len(), 1);
        assert!(tracks.is_empty());
        // Two sightings are a ghost.
        for i in 0..2 {
            update_tracks(&mut tracks, i, &[(det(ObjectClass::Rug, 50.0, 50.0, 0.9), Vec3::ZERO)], &cfg);
        }
        assert!(flush_tracks(&mut tracks, &cfg).is_empty());
    }

    fn loc(class: ObjectClass, p: [f64; 3], confidence: f64) -> LocalizedDetection {
        LocalizedDetection { class, point: p.into(), confidence, frame: 0 }
    }

    #[test]
    fn fuse_examples() {
        let cfg = FusionConfig::default();
        let knives = [loc(ObjectClass::Knives, [1.0, 1.0, 0.9], 0.8), loc(ObjectClass::Knives, [1.05, 1.0, 0.9], 0.6)];
        let f = fuse(&[], &knives, &cfg);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].confidence, 0.8);
        assert_eq!(f[0].provenance, Provenance::FrameRaycast);

        let table = ParametricObservation {
            class: ObjectClass::Table,
            bbox: OrientedBox::new(Vec3::new(1.0, 1.0, 0.4), Vec3::new(0.5, 0.3, 0.4), 0.0),
            confidence: 0.9,
            first_seen: 1.0,
        };
        let f = fuse(&[table], &[loc(ObjectClass::DoorHandle, [1.0, 1.0, 0.9], 0.7)], &cfg);
        assert_eq!(f.len(), 2);

        let apart = [loc(ObjectClass::Knives, [1.0, 1.0, 0.9], 0.8), loc(ObjectClass::Knives, [1.5, 1.0, 0.9], 0.6)];
        assert_eq!(fuse(&[], &apart, &cfg).len(), 2);
        assert!(fuse(&[], &[loc(ObjectClass::Knives, [0.0; 3], 0.4)], &cfg).is_empty());
    }

    #[test]
    fn scan_log_round_trip() {
        let log = ScanLog {
            intrinsics: CameraIntrinsics::default(),
            frames: vec![CameraFrame {
                index: 0,
                timestamp: 0.0,
                pose: Pose::look_at(Vec3::new(0.0, 0.0, 1.5), Vec3::new(1.0, 0.0, 1.5)).unwrap(),
                detections: vec![det(ObjectClass::Knob, 300.0, 200.0, 0.7)],
            }],
            parametric: vec![],
            rooms: wall_scene().rooms,
            factors: None,
            seed: Some(7),
        };
        assert_eq!(ScanLog::from_json(&log.to_json()).unwrap(), log);
        let mut bad = log.clone();
        bad.frames.push(bad.frames[0].clone());
        assert!(matches!(ScanLog::from_json(&bad.to_json()), Err(ScanLogError::Invalid(_))));
    }

    fn arb_point() -> impl Strategy<Value = Vec3> {
        (-10.0..10.0f64, -10.0..10.0f64, 0.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_candidates() -> impl Strategy<Value = Vec<SceneObject>> {
        let classes = [ObjectClass::Knives, ObjectClass::Rug, ObjectClass::Table, ObjectClass::LightSwitch];
        prop::collection::vec((0..4usize, arb_point(), 0.0..1.0f64), 0..40).prop_map(move |v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (c, p, conf))| {
                    let mut o = SceneObject::new(format!("c{i}"), classes[c], OrientedBox::new(p, Vec3::new(0.1, 0.1, 0.1), 0.0));
                    o.confidence = conf;
                    o
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn window_mean_in_hull(points in prop::collection::vec(arb_point(), 1..20)) {
            let cfg = TrackerConfig::default();
            let mut tracks = Vec::new();
            let mut out = Vec::new();
            for (i, p) in points.iter().enumerate() {
                out.extend(update_tracks(&mut tracks, i, &[(det(ObjectClass::Knob, 10.0, 10.0, 0.9), *p)], &cfg));
            }
            out.extend(flush_tracks(&mut tracks, &cfg));
            for o in &out {
                // The window ending at the emitting frame.
                let end = o.frame + 1;
                let start = end.saturating_sub(cfg.window);
                let (lo, hi) = points[start..end].iter().fold(
                    (Vec3::new(f64::MAX, f64::MAX, f64::MAX), Vec3::new(f64::MIN, f64::MIN, f64::MIN)),
                    |(lo, hi), p| (lo.component_min(*p), hi.component_max(*p)),
                );
                let eps = 1e-9;
                prop_assert!(o.point.x >= lo.x - eps && o.point.x <= hi.x + eps);
                prop_assert!(o.point.y >= lo.y - eps && o.point.y <= hi.y + eps);
                prop_assert!(o.point.z >= lo.z - eps && o.point.z <= hi.z + eps);
            }
        }

        #[test]
        fn dedupe_is_idempotent_and_never_grows(c in arb_candidates()) {
            let cfg = FusionConfig::default();
            let once = dedupe(c.clone(), &cfg);
            prop_assert!(once.len() <= c.len());
            prop_assert_eq!(dedupe(once.clone(), &cfg), once);
        }

        #[test]
        fn fuse_is_idempotent(
            locs in prop::collection::vec((0..3usize, arb_point(), 0.0..1.0f64), 0..30),
        ) {
            let classes = [ObjectClass::Knives, ObjectClass::Scissors, ObjectClass::LightSwitch];
            let l: Vec<LocalizedDetection> = locs.iter().map(|(c, p, conf)| loc(classes[*c], (*p).into(), *conf)).collect();
            let cfg = FusionConfig::default();
            let fused = fuse(&[], &l, &cfg);
            prop_assert!(fused.len() <= l.len());
            let as_parametric: Vec<ParametricObservation> = fused
                .iter()
                .map(|o| ParametricObservation { class: o.class, bbox: o.bbox, confidence: o.confidence, first_seen: 0.0 })
                .collect();
            let again = fuse(&as_parametric, &[], &cfg);
            prop_assert_eq!(again.len(), fused.len());
            for (a, b) in again.iter().zip(&fused) {
                prop_assert_eq!((a.class, a.bbox, a.confidence), (b.class, b.bbox, b.confidence));
            }
        }

        #[test]
        fn localized_points_lie_on_their_ray(
            px in -4.0..2.5f64, py in -4.0..4.0f64, pz in 0.3..2.4f64,
            tx in -4.0..2.9f64, ty in -4.0..4.0f64, tz in 0.0..2.5f64,
            u in 0.0..640.0f64, v in 0.0..480.0f64,
        ) {
            let geometry = wall_scene();
            let pos = Vec3::new(px, py, pz);
            prop_assume!(pos.horizontal_distance(Vec3::new(tx, ty, tz)) > 0.1);
            let pose = Pose::look_at(pos, Vec3::new(tx, ty, tz)).unwrap();
            let k = CameraIntrinsics::default();
            let frame = CameraFrame { index: 0, timestamp: 0.0, pose, detections: vec![] };
            let d = FrameDetection { class: ObjectClass::Knob, bbox: BBox2d::centered(u, v, 0.0, 0.0), confidence: 1.0 };
            if let Some(p) = localize(&d, &frame, &k, &geometry) {
                let dir = pose.unproject(&k, u, v);
                let t = (p - pos).dot(dir);
                prop_assert!((p - (pos + dir * t)).norm() < 1e-9);
            }
        }
    }
}
