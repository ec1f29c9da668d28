use std::collections::BTreeSet;

use super::{
    Community, Comparison, DimensionConstraint, Existence, IssueCategory, IssueRule, Measurement,
    ObjectClass, RuleSet, RuleSource,
};

use Community::*;

const REACHABLE_SURFACES: [ObjectClass; 6] = [
    ObjectClass::Table,
    ObjectClass::Sofa,
    ObjectClass::Counter,
    ObjectClass::Floor,
    ObjectClass::Bed,
    ObjectClass::Chair,
];

struct Row {
    name: &'static str,
    class: ObjectClass,
    measurement: Measurement,
    category: IssueCategory,
    communities: &'static [Community],
    dependencies: &'static [ObjectClass],
    dimension: Option<(Comparison, &'static [f64])>,
    existence: Existence,
    description: &'static str,
}

const fn dim(
    name: &'static str,
    class: ObjectClass,
    measurement: Measurement,
    category: IssueCategory,
    communities: &'static [Community],
    dimension: Option<(Comparison, &'static [f64])>,
    description: &'static str,
) -> Row {
    Row {
        name,
        class,
        measurement,
        category,
        communities,
        dependencies: &[],
        dimension,
        existence: Existence::Unset,
        description,
    }
}

const fn exists(
    name: &'static str,
    class: ObjectClass,
    existence: Existence,
    communities: &'static [Community],
    dependencies: &'static [ObjectClass],
    description: &'static str,
) -> Row {
    Row {
        name,
        class,
        measurement: match existence {
            Existence::MustExist => Measurement::Absence,
            _ => Measurement::Presence,
        },
        category: IssueCategory::Existence,
        communities,
        dependencies,
        dimension: None,
        existence,
        description,
    }
}

const ALL: &[Community] = &[Children, OlderAdults, BlindLowVision, WheelchairUser];
const WHEELCHAIR: &[Community] = &[WheelchairUser];
const CHILDREN: &[Community] = &[Children];

use Comparison::{Between, Ge, Le};
use IssueCategory::{Dimension, Position};
use Measurement::{Depth, Height, Radius};

const ROWS: &[Row] = &[
    dim("Table", ObjectClass::Table, Height, Dimension, WHEELCHAIR, Some((Between, &[28.0, 34.0])),
        "Table surfaces should be between 28 and 34 inches above the floor."),
    dim("Counter", ObjectClass::Counter, Height, Dimension, WHEELCHAIR, Some((Between, &[28.0, 34.0])),
        "Counter tops should be between 28 and 34 inches above the floor."),
    dim("Toilet", ObjectClass::Toilet, Height, Dimension, WHEELCHAIR, Some((Between, &[17.0, 19.0])),
        "Toilet seats should be between 17 and 19 inches above the floor."),
    // No threshold is published for sofa height or chair depth.
    dim("Sofa", ObjectClass::Sofa, Height, Dimension, WHEELCHAIR, None,
        "Sofa seat height (no threshold defined; not evaluated)."),
    dim("Sink", ObjectClass::Sink, Height, Dimension, WHEELCHAIR, Some((Le, &[17.0])),
        "Sink height should be 17 inches or less."),
    dim("Chair", ObjectClass::Chair, Depth, Dimension, WHEELCHAIR, None,
        "Chair seat depth (no threshold defined; not evaluated)."),
    dim("Door", ObjectClass::Door, Radius, Dimension, WHEELCHAIR, Some((Ge, &[32.0])),
        "Door openings shall provide a clear width of 32 inches minimum."),
    dim("Cabinet", ObjectClass::Cabinet, Height, Position, WHEELCHAIR, Some((Le, &[27.0])),
        "Wall cabinets should be mounted no higher than 27 inches."),
    dim("Knob", ObjectClass::Knob, Height, Position, WHEELCHAIR, Some((Between, &[34.0, 48.0])),
        "Knobs should be between 34 and 48 inches above the floor."),
    dim("Door Handle", ObjectClass::DoorHandle, Height, Position, WHEELCHAIR, Some((Between, &[34.0, 48.0])),
        "Door handles should be between 34 and 48 inches above the floor."),
    dim("Light Switch", ObjectClass::LightSwitch, Height, Position, WHEELCHAIR, Some((Between, &[15.0, 48.0])),
        "Light switches should be between 15 and 48 inches above the floor."),
    dim("Grab Bar-Children", ObjectClass::GrabBar, Height, Position, CHILDREN, Some((Between, &[18.0, 27.0])),
        "Grab bars for children should be between 18 and 27 inches above the floor."),
    dim("Grab Bar-Adults", ObjectClass::GrabBar, Height, Position, &[OlderAdults, BlindLowVision, WheelchairUser],
        Some((Between, &[33.0, 36.0])),
        "Grab bars for adults should be between 33 and 36 inches above the floor."),
    dim("Electric Socket", ObjectClass::ElectricSocket, Height, Position, ALL, Some((Between, &[15.0, 48.0])),
        "Electric sockets should be between 15 and 48 inches above the floor."),
    exists("Rug", ObjectClass::Rug, Existence::MustNotExist, ALL, &[ObjectClass::Floor],
        "Throw rugs are a tripping hazard."),
    exists("Scissors", ObjectClass::Scissors, Existence::MustNotExist, CHILDREN, &REACHABLE_SURFACES,
        "For safety, no scissors should be present on reachable surfaces."),
    exists("Knives", ObjectClass::Knives, Existence::MustNotExist, CHILDREN, &REACHABLE_SURFACES,
        "For safety, no knives should be present on reachable surfaces."),
    exists("Medication", ObjectClass::Medication, Existence::MustNotExist, CHILDREN, &REACHABLE_SURFACES,
        "For safety, no medication should be present on reachable surfaces."),
    exists("Smoke Alarm", ObjectClass::SmokeAlarm, Existence::MustExist, ALL, &[],
        "Every room should have a working smoke alarm."),
];

/// The shipped rule pack: 18 issues as 19 rules (grab bar height differs for
/// children and adults). Thresholds are inclusive and in inches.
pub fn builtin_rule_pack() -> RuleSet {
    let rules = ROWS
        .iter()
        .map(|row| IssueRule {
            object_name: row.name.to_string(),
            object_class: row.class,
            measurement: row.measurement,
            communities: row.communities.iter().copied().collect(),
            dependencies: row.dependencies.iter().copied().collect::<BTreeSet<_>>(),
            dimension: row.dimension.map(|(op, v)| DimensionConstraint::new(op, v.to_vec())),
            existence: row.existence,
            category: row.category,
            description: row.description.to_string(),
        })
        .collect();
    RuleSet::new(rules, RuleSource::BuiltIn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulespec::{filter_by_community, parse_rule_spec, serialize_rule_spec, validate_rule_set};

    fn rule(id: &str) -> IssueRule {
        builtin_rule_pack().get(id).cloned().unwrap_or_else(|| panic!("missing {id}"))
    }

    #[test]
    fn pack_shape() {
        let pack = builtin_rule_pack();
        assert_eq!(pack.len(), 19);
        let disabled: Vec<String> =
            pack.rules.iter().filter(|r| !r.is_enabled()).map(|r| r.rule_id()).collect();
        assert_eq!(disabled, ["Sofa-Height", "Chair-Depth"]);
        let classes: BTreeSet<ObjectClass> = pack.rules.iter().map(|r| r.object_class).collect();
        assert_eq!(classes.len(), 18);
    }

    #[test]
    fn toilet_row() {
        let r = rule("Toilet-Height");
        assert_eq!(r.dimension, Some(DimensionConstraint::between(17.0, 19.0)));
        assert_eq!(r.communities, [WheelchairUser].into());
    }

    #[test]
    fn smoke_alarm_row() {
        let r = rule("Smoke Alarm-Absence");
        assert_eq!(r.existence, Existence::MustExist);
        assert_eq!(r.communities, Community::all());
    }

    #[test]
    fn grab_bar_rows() {
        let child = rule("Grab Bar-Children-Height");
        assert_eq!(child.dimension, Some(DimensionConstraint::between(18.0, 27.0)));
        assert_eq!(child.communities, [Children].into());
        let adult = rule("Grab Bar-Adults-Height");
        assert_eq!(adult.dimension, Some(DimensionConstraint::between(33.0, 36.0)));
        assert_eq!(adult.communities, [OlderAdults, BlindLowVision, WheelchairUser].into());
    }

    /// Every printed threshold holds at its bounds and fails one inch outside.
    #[test]
    fn thresholds_are_inclusive() {
        let printed: &[(&str, Option<f64>, Option<f64>)] = &[
            ("Table-Height", Some(28.0), Some(34.0)),
            ("Counter-Height", Some(28.0), Some(34.0)),
            ("Toilet-Height", Some(17.0), Some(19.0)),
            ("Sink-Height", None, Some(17.0)),
            ("Door-Radius", Some(32.0), None),
            ("Cabinet-Height", None, Some(27.0)),
            ("Knob-Height", Some(34.0), Some(48.0)),
            ("Door Handle-Height", Some(34.0), Some(48.0)),
            ("Light Switch-Height", Some(15.0), Some(48.0)),
            ("Grab Bar-Children-Height", Some(18.0), Some(27.0)),
            ("Grab Bar-Adults-Height", Some(33.0), Some(36.0)),
            ("Electric Socket-Height", Some(15.0), Some(48.0)),
        ];
        for (id, lo, hi) in printed {
            let c = rule(id).dimension.unwrap();
            if let Some(lo) = lo {
                assert!(c.is_satisfied_by(*lo), "{id} at {lo}");
                assert!(!c.is_satisfied_by(lo - 1.0), "{id} below {lo}");
            }
            if let Some(hi) = hi {
                assert!(c.is_satisfied_by(*hi), "{id} at {hi}");
                assert!(!c.is_satisfied_by(hi + 1.0), "{id} above {hi}");
            }
        }
    }

    #[test]
    fn pack_validates_and_round_trips() {
        let pack = builtin_rule_pack();
        assert!(validate_rule_set(&pack).is_empty());
        let doc = serialize_rule_spec(&pack);
        let back = parse_rule_spec(&doc).unwrap();
        assert_eq!(back.rules, pack.rules);
    }

    #[test]
    fn community_filter() {
        let pack = builtin_rule_pack();
        let kids = filter_by_community(&pack, &[Children].into());
        for id in ["Knives-Presence", "Scissors-Presence", "Medication-Presence"] {
            assert!(kids.get(id).is_some(), "{id}");
        }
        assert!(kids.get("Door-Radius").is_none());
        assert_eq!(filter_by_community(&pack, &Community::all()), pack);
        assert_eq!(filter_by_community(&kids, &[Children].into()), kids);
    }
}
