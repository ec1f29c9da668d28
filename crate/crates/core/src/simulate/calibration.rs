use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Lighting, SimulateError, Speed, Tidiness};
use crate::rulespec::{Channel, ObjectClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByLighting<T> {
    pub well_lit: T,
    pub partial: T,
    pub poor: T,
}

impl<T: Copy> ByLighting<T> {
    pub fn get(&self, l: Lighting) -> T {
        match l {
            Lighting::WellLit => self.well_lit,
            Lighting::Partial => self.partial,
            Lighting::Poor => self.poor,
        }
    }

    fn values(&self) -> [T; 3] {
        [self.well_lit, self.partial, self.poor]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BySpeed<T> {
    pub slow: T,
    pub medium: T,
    pub fast: T,
}

impl<T: Copy> BySpeed<T> {
    pub fn get(&self, s: Speed) -> T {
        match s {
            Speed::Slow => self.slow,
            Speed::Medium => self.medium,
            Speed::Fast => self.fast,
        }
    }

    fn values(&self) -> [T; 3] {
        [self.slow, self.medium, self.fast]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByTidiness<T> {
    pub clean: T,
    pub messy: T,
    pub very_messy: T,
}

impl<T: Copy> ByTidiness<T> {
    pub fn get(&self, t: Tidiness) -> T {
        match t {
            Tidiness::Clean => self.clean,
            Tidiness::Messy => self.messy,
            Tidiness::VeryMessy => self.very_messy,
        }
    }

    fn values(&self) -> [T; 3] {
        [self.clean, self.messy, self.very_messy]
    }
}

/// Every knob of the scan simulator. Multipliers scale per-frame detection
/// probabilities; noise scales multiply the pixel and dimension sigmas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCalibration {
    /// Per-frame detection probability of a fully visible object.
    pub detection_probability: BTreeMap<ObjectClass, f64>,
    pub default_detection_probability: f64,
    pub lighting: ByLighting<f64>,
    pub speed: BySpeed<f64>,
    pub clutter: ByTidiness<f64>,
    /// Probability that a frame in which a 3D-scanned object is visible
    /// counts toward its capture.
    pub parametric_lighting: ByLighting<f64>,
    pub parametric_speed: BySpeed<f64>,
    /// Seconds of counted frames before a 3D box is reported.
    pub parametric_dwell_s: f64,
    /// Row: true class; entries: probability of each reported class. The
    /// remainder of a row is a miss. Classes without a row are always
    /// reported as themselves.
    pub confusion: BTreeMap<ObjectClass, BTreeMap<ObjectClass, f64>>,
    pub bbox_sigma_px: f64,
    pub dimension_sigma_m: f64,
    pub lighting_noise: ByLighting<f64>,
    pub speed_noise: BySpeed<f64>,
    pub clutter_count: ByTidiness<usize>,
    /// Share of clutter items that look like an object of interest.
    pub distractor_fraction: f64,
    pub distractor_classes: Vec<ObjectClass>,
    /// Per-frame probability that a lookalike clutter item is detected.
    pub distractor_probability: f64,
    pub confidence_mean: ByLighting<f64>,
    pub confidence_sigma: f64,
    pub parametric_confidence: f64,
    pub min_visible_fraction: f64,
}

impl Default for NoiseCalibration {
    fn default() -> Self {
        default_calibration()
    }
}

/// The shipped calibration, tuned so the six study conditions rank as in
/// the field study on the golden apartment.
pub fn default_calibration() -> NoiseCalibration {
    use ObjectClass::*;
    let probs = [
        (DoorHandle, 0.35),
        (ElectricSocket, 0.35),
        (LightSwitch, 0.35),
        (GrabBar, 0.4),
        (SmokeAlarm, 0.4),
        (Knob, 0.3),
        (Knives, 0.35),
        (Scissors, 0.35),
        (Medication, 0.3),
        (Rug, 0.4),
    ];
    let confusion = [
        (LightSwitch, vec![(LightSwitch, 0.92), (ElectricSocket, 0.05)]),
        (ElectricSocket, vec![(ElectricSocket, 0.92), (LightSwitch, 0.05)]),
        (Knives, vec![(Knives, 0.92), (DoorHandle, 0.04)]),
        (DoorHandle, vec![(DoorHandle, 0.94), (Knives, 0.03)]),
    ];
    NoiseCalibration {
        detection_probability: probs.into_iter().collect(),
        default_detection_probability: 0.8,
        lighting: ByLighting { well_lit: 1.0, partial: 0.6, poor: 0.35 },
        speed: BySpeed { slow: 1.0, medium: 1.0, fast: 0.6 },
        clutter: ByTidiness { clean: 1.0, messy: 0.6, very_messy: 0.35 },
        parametric_lighting: ByLighting { well_lit: 1.0, partial: 0.9, poor: 0.15 },
        parametric_speed: BySpeed { slow: 1.0, medium: 1.0, fast: 0.6 },
        parametric_dwell_s: 1.0,
        confusion: confusion.into_iter().map(|(c, row)| (c, row.into_iter().collect())).collect(),
        bbox_sigma_px: 3.0,
        dimension_sigma_m: 0.01,
        lighting_noise: ByLighting { well_lit: 1.0, partial: 1.5, poor: 3.0 },
        speed_noise: BySpeed { slow: 1.0, medium: 1.0, fast: 2.0 },
        clutter_count: ByTidiness { clean: 0, messy: 12, very_messy: 24 },
        distractor_fraction: 0.3,
        distractor_classes: vec![Knives, Scissors, Medication],
        distractor_probability: 0.3,
        confidence_mean: ByLighting { well_lit: 0.85, partial: 0.72, poor: 0.45 },
        confidence_sigma: 0.1,
        parametric_confidence: 0.9,
        min_visible_fraction: 0.3,
    }
}

impl NoiseCalibration {
    /// Noise-free calibration: every visible object is detected as itself in
    /// every frame, 3D boxes are captured on first sight, boxes are exact and
    /// there is no clutter.
    pub fn perfect() -> NoiseCalibration {
        let one = |_| 1.0;
        NoiseCalibration {
            detection_probability: ObjectClass::ALL
                .iter()
                .filter(|c| c.channel() == Channel::FrameDetection)
                .map(|c| (*c, one(c)))
                .collect(),
            default_detection_probability: 1.0,
            lighting: ByLighting { well_lit: 1.0, partial: 1.0, poor: 1.0 },
            speed: BySpeed { slow: 1.0, medium: 1.0, fast: 1.0 },
            clutter: ByTidiness { clean: 1.0, messy: 1.0, very_messy: 1.0 },
            parametric_lighting: ByLighting { well_lit: 1.0, partial: 1.0, poor: 1.0 },
            parametric_speed: BySpeed { slow: 1.0, medium: 1.0, fast: 1.0 },
            parametric_dwell_s: 0.0,
            confusion: BTreeMap::new(),
            bbox_sigma_px: 0.0,
            dimension_sigma_m: 0.0,
            lighting_noise: ByLighting { well_lit: 1.0, partial: 1.0, poor: 1.0 },
            speed_noise: BySpeed { slow: 1.0, medium: 1.0, fast: 1.0 },
            clutter_count: ByTidiness { clean: 0, messy: 0, very_messy: 0 },
            distractor_fraction: 0.0,
            distractor_classes: Vec::new(),
            distractor_probability: 0.0,
            confidence_mean: ByLighting { well_lit: 1.0, partial: 1.0, poor: 1.0 },
            confidence_sigma: 0.0,
            parametric_confidence: 1.0,
            min_visible_fraction: 0.3,
        }
    }

    pub fn base_probability(&self, class: ObjectClass) -> f64 {
        self.detection_probability.get(&class).copied().unwrap_or(self.default_detection_probability)
    }

    /// Picks the reported class for a detection of `truth` given a uniform
    /// draw `u` in [0, 1); `None` is a miss.
    pub fn sample_class(&self, truth: ObjectClass, u: f64) -> Option<ObjectClass> {
        let Some(row) = self.confusion.get(&truth) else { return Some(truth) };
        // The true class takes the bottom of the interval, so the same draw
        // keeps a correct detection correct across calibrations.
        let own = row.get(&truth).map(|p| (&truth, p));
        let mut acc = 0.0;
        for (class, p) in own.into_iter().chain(row.iter().filter(|(c, _)| **c != truth)) {
            acc += p;
            if u < acc {
                return Some(*class);
            }
        }
        None
    }

    /// Every class a detection can be reported as.
    pub fn reported_classes(&self) -> BTreeSet<ObjectClass> {
        let mut out: BTreeSet<ObjectClass> =
            ObjectClass::ALL.iter().copied().filter(|c| !self.confusion.contains_key(c)).collect();
        out.extend(self.confusion.values().flat_map(|row| row.keys().copied()));
        out.extend(self.distractor_classes.iter().copied());
        out
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        let bad = |m: &str| Err(SimulateError::InvalidConfig(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let mult = |m: f64| m.is_finite() && m >= 0.0;
        if !self.detection_probability.values().copied().chain([self.default_detection_probability]).all(prob) {
            return bad("detection probabilities must lie in [0, 1]");
        }
        let multipliers = self
            .lighting
            .values()
            .into_iter()
            .chain(self.speed.values())
            .chain(self.clutter.values())
            .chain(self.parametric_lighting.values())
            .chain(self.parametric_speed.values())
            .chain(self.lighting_noise.values())
            .chain(self.speed_noise.values());
        if !multipliers.into_iter().all(mult) {
            return bad("multipliers and noise scales must be non-negative");
        }
        if self.lighting.well_lit != 1.0 {
            return bad("the well-lit multiplier is the reference and must be 1.0");
        }
        for row in self.confusion.values() {
            if !row.values().copied().all(prob) || row.values().sum::<f64>() > 1.0 + 1e-9 {
                return bad("confusion rows need entries in [0, 1] summing to at most 1");
            }
        }
        if ![self.bbox_sigma_px, self.dimension_sigma_m, self.confidence_sigma].into_iter().all(mult) {
            return bad("sigmas must be non-negative");
        }
        let probs = [
            self.distractor_fraction,
            self.distractor_probability,
            self.parametric_confidence,
            self.min_visible_fraction,
        ];
        if !probs.into_iter().chain(self.confidence_mean.values()).all(prob) {
            return bad("fractions, confidences and probabilities must lie in [0, 1]");
        }
        if !(self.parametric_dwell_s >= 0.0 && self.parametric_dwell_s.is_finite()) {
            return bad("parametric dwell must be non-negative");
        }
        Ok(())
    }

    /// Applies a partial JSON object over this calibration, key by key.
    pub fn with_overrides(&self, overrides: &Value) -> Result<NoiseCalibration, SimulateError> {
        let mut base = serde_json::to_value(self).expect("calibration serializes");
        merge(&mut base, overrides);
        let out: NoiseCalibration =
            serde_json::from_value(base).map_err(|e| SimulateError::InvalidConfig(e.to_string()))?;
        out.validate()?;
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<NoiseCalibration, SimulateError> {
        let v: Value = serde_json::from_str(text).map_err(|e| SimulateError::InvalidConfig(e.to_string()))?;
        default_calibration().with_overrides(&v)
    }
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}
