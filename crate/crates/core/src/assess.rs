//! Rule evaluation: measure objects, check constraints and emit anchored
//! findings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rulespec::{
    filter_by_community, Community, DimensionConstraint, Existence, IssueCategory, IssueRule,
    Measurement, ObjectClass, RuleSet, INCHES_PER_METER,
};
use crate::scene::{is_supported_by, Provenance, Scene, SceneObject, Support, Vec3};

/// Height at which absence findings are anchored above a room's centroid.
pub const ABSENCE_ANCHOR_HEIGHT: f64 = 1.5;

/// Which part of a box a height measurement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightAnchor {
    Top,
    Bottom,
    Center,
}

/// Seats and work surfaces are measured at their top, wall cabinets at their
/// mounting edge, small fixtures at their center.
pub fn height_anchor(class: ObjectClass) -> HeightAnchor {
    use crate::rulespec::Channel;
    use ObjectClass::*;
    match class {
        Table | Counter | Toilet | Sofa | Sink | Chair | Bed => HeightAnchor::Top,
        Cabinet => HeightAnchor::Bottom,
        Knob | DoorHandle | LightSwitch | ElectricSocket | GrabBar => HeightAnchor::Center,
        c if c.channel() == Channel::FrameDetection => HeightAnchor::Center,
        _ => HeightAnchor::Top,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{measurement} cannot be measured on {class}")]
pub struct MeasureError {
    pub class: ObjectClass,
    pub measurement: Measurement,
}

/// Measures `obj` in inches.
pub fn measure(obj: &SceneObject, measurement: Measurement) -> Result<f64, MeasureError> {
    if !measurement.applies_to(obj.class) || measurement.is_existential() {
        return Err(MeasureError { class: obj.class, measurement });
    }
    let b = &obj.bbox;
    let meters = match measurement {
        Measurement::Height => match height_anchor(obj.class) {
            HeightAnchor::Top => b.top_height(),
            HeightAnchor::Bottom => b.bottom_height(),
            HeightAnchor::Center => b.center_height(),
        },
        Measurement::Radius => 2.0 * b.half_extents.x,
        Measurement::Depth => 2.0 * b.half_extents.y,
        Measurement::Presence | Measurement::Absence => unreachable!(),
    };
    Ok(meters * INCHES_PER_METER)
}

/// `true` when the value satisfies the constraint, i.e. is accessible.
pub fn check_constraint(value: f64, c: &DimensionConstraint) -> bool {
    c.is_satisfied_by(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    /// The offending object; absent for missing-object findings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    /// The room lacking a required object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<String>,
    pub class: ObjectClass,
    pub category: IssueCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<DimensionConstraint>,
    pub anchor: Vec3,
    pub communities: BTreeSet<Community>,
    pub description: String,
}

impl Finding {
    /// Subject id, or room name for absence findings.
    pub fn key(&self) -> &str {
        self.subject.as_deref().or(self.room.as_deref()).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub findings: Vec<Finding>,
    pub evaluated_rule_ids: Vec<String>,
    pub object_count: usize,
    #[serde(default)]
    pub metadata: ReportMetadata,
}

impl Assessment {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assessments always serialize")
    }
}

pub fn evaluate_rule(rule: &IssueRule, scene: &Scene) -> Vec<Finding> {
    evaluate_rule_on(rule, scene, &scene.subjects())
}

fn evaluate_rule_on(rule: &IssueRule, scene: &Scene, subjects: &[SceneObject]) -> Vec<Finding> {
    let finding = |subject: Option<&SceneObject>, room: Option<String>, measured, anchor| Finding {
        rule_id: rule.rule_id(),
        subject: subject.map(|o| o.id.clone()),
        room,
        class: rule.object_class,
        category: rule.category,
        measured,
        constraint: if rule.is_existential() { None } else { rule.dimension.clone() },
        anchor,
        communities: rule.communities.clone(),
        description: rule.description.clone(),
    };
    let of_class = subjects.iter().filter(|o| o.class == rule.object_class);
    let mut out: Vec<Finding> = match (rule.existence, &rule.dimension) {
        (Existence::Unset, None) => Vec::new(),
        (Existence::Unset, Some(c)) => of_class
            .filter(|o| !(rule.category == IssueCategory::Dimension && o.provenance == Provenance::FrameRaycast))
            .filter_map(|o| {
                let v = measure(o, rule.measurement).ok()?;
                (!check_constraint(v, c)).then(|| finding(Some(o), None, Some(v), o.bbox.center))
            })
            .collect(),
        (Existence::MustNotExist, _) => of_class
            .filter(|o| rule.dependencies.is_empty() || rests_on_dependency(o, rule, scene))
            .map(|o| finding(Some(o), None, None, o.bbox.center))
            .collect(),
        (Existence::MustExist, _) => scene
            .rooms
            .iter()
            .enumerate()
            .filter(|(_, room)| {
                !subjects.iter().any(|o| o.class == rule.object_class && room.contains_xy(o.bbox.center))
            })
            .map(|(i, room)| {
                let c = room.centroid();
                finding(None, Some(scene.room_name(i)), None, Vec3::new(c.x, c.y, ABSENCE_ANCHOR_HEIGHT))
            })
            .collect(),
    };
    out.sort_by(|a, b| a.key().cmp(b.key()));
    out
}

fn rests_on_dependency(obj: &SceneObject, rule: &IssueRule, scene: &Scene) -> bool {
    if rule.dependencies.contains(&ObjectClass::Floor)
        && is_supported_by(&obj.bbox, Support::Floor(&scene.rooms))
    {
        return true;
    }
    scene.objects.iter().any(|s| {
        s.id != obj.id
            && rule.dependencies.contains(&s.class)
            && is_supported_by(&obj.bbox, Support::Object(&s.bbox))
    })
}

/// Evaluates every enabled rule relevant to `communities`. Findings are
/// ordered by rule id, then subject.
pub fn evaluate_scene(rs: &RuleSet, scene: &Scene, communities: &BTreeSet<Community>) -> Assessment {
    let subjects = scene.subjects();
    let selected = filter_by_community(rs, communities);
    let mut findings = Vec::new();
    let mut evaluated = Vec::new();
    for rule in selected.rules.iter().filter(|r| r.is_enabled()) {
        evaluated.push(rule.rule_id());
        findings.extend(evaluate_rule_on(rule, scene, &subjects));
    }
    findings.sort_by(|a, b| (a.rule_id.as_str(), a.key()).cmp(&(b.rule_id.as_str(), b.key())));
    findings.dedup_by(|a, b| a.rule_id == b.rule_id && a.key() == b.key());
    evaluated.sort();
    evaluated.dedup();
    Assessment {
        findings,
        evaluated_rule_ids: evaluated,
        object_count: subjects.len(),
        metadata: ReportMetadata::default(),
    }
}
