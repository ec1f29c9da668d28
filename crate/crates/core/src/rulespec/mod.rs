//! The issue-specification rule language: object classes, communities,
//! dimension constraints, and the JSON document format that carries them.

mod builtin;
mod parse;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use builtin::builtin_rule_pack;
pub use parse::{parse_rule_spec, serialize_rule_spec, RuleSpecError};
pub use validate::{validate_rule_set, Diagnostic, Severity};

/// Lengths in rule documents are inches; scene geometry is meters.
pub const INCHES_PER_METER: f64 = 39.3701;

/// Folds a DSL name to a comparison key: lowercase, no whitespace, hyphens,
/// underscores or slashes.
pub(crate) fn fold_name(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace() && !matches!(c, '-' | '_' | '/'))
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Community {
    Children,
    OlderAdults,
    BlindLowVision,
    WheelchairUser,
}

impl Community {
    pub const ALL: [Community; 4] = [
        Community::Children,
        Community::OlderAdults,
        Community::BlindLowVision,
        Community::WheelchairUser,
    ];

    pub fn all() -> BTreeSet<Community> {
        Self::ALL.into_iter().collect()
    }

    /// Tolerant of case, whitespace, hyphens and plurals.
    pub fn parse(s: &str) -> Option<Community> {
        match fold_name(s).as_str() {
            "children" | "child" | "childrencaregivers" => Some(Community::Children),
            "olderadults" | "olderadult" | "elderly" => Some(Community::OlderAdults),
            "blindorlowvision" | "blindlowvision" | "blv" | "lowvision" => {
                Some(Community::BlindLowVision)
            }
            "wheelchairuser" | "wheelchairusers" | "wheelchair" => Some(Community::WheelchairUser),
            _ => None,
        }
    }

    pub fn dsl_name(self) -> &'static str {
        match self {
            Community::Children => "Children",
            Community::OlderAdults => "Older Adults",
            Community::BlindLowVision => "Blind or Low Vision",
            Community::WheelchairUser => "Wheelchair User",
        }
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dsl_name())
    }
}

/// How an object class is observed during a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Reported by the room-scanning API as a 3D box.
    Parametric,
    /// Found by the 2D image detector and localized by raycasting.
    FrameDetection,
    /// Walls, floors and wall openings.
    Structural,
}

macro_rules! object_classes {
    ($( $variant:ident => $name:literal, $channel:ident; )*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum ObjectClass {
            $( $variant, )*
        }

        impl ObjectClass {
            pub const ALL: &'static [ObjectClass] = &[ $( ObjectClass::$variant, )* ];

            pub fn dsl_name(self) -> &'static str {
                match self {
                    $( ObjectClass::$variant => $name, )*
                }
            }

            pub fn channel(self) -> Channel {
                match self {
                    $( ObjectClass::$variant => Channel::$channel, )*
                }
            }
        }
    };
}

object_classes! {
    Cabinet => "Cabinet", Parametric;
    Chair => "Chair", Parametric;
    Counter => "Counter", Parametric;
    Door => "Door", Structural;
    DoorHandle => "Door Handle", FrameDetection;
    ElectricSocket => "Electric Socket", FrameDetection;
    GrabBar => "Grab Bar", FrameDetection;
    Knives => "Knives", FrameDetection;
    Knob => "Knob", FrameDetection;
    LightSwitch => "Light Switch", FrameDetection;
    Medication => "Medication", FrameDetection;
    Rug => "Rug", FrameDetection;
    Sink => "Sink", Parametric;
    Scissors => "Scissors", FrameDetection;
    SmokeAlarm => "Smoke Alarm", FrameDetection;
    Sofa => "Sofa", Parametric;
    Table => "Table", Parametric;
    Toilet => "Toilet", Parametric;
    Wall => "Wall", Structural;
    Window => "Window", Structural;
    Opening => "Opening", Structural;
    Floor => "Floor", Structural;
    Bed => "Bed", Parametric;
    Bathtub => "Bathtub", Parametric;
    Dishwasher => "Dishwasher", Parametric;
    Fireplace => "Fireplace", Parametric;
    Oven => "Oven", Parametric;
    Refrigerator => "Refrigerator", Parametric;
    Stairs => "Stairs", Parametric;
    Storage => "Storage", Parametric;
    Stove => "Stove", Parametric;
    Television => "Television", Parametric;
    WasherDryer => "Washer Dryer", Parametric;
}

impl ObjectClass {
    /// Matches a DSL object name, ignoring case, spaces and hyphens.
    pub fn parse(s: &str) -> Option<ObjectClass> {
        let key = fold_name(s);
        if let Some(c) = ObjectClass::ALL.iter().find(|c| fold_name(c.dsl_name()) == key) {
            return Some(*c);
        }
        match key.as_str() {
            "knife" => Some(ObjectClass::Knives),
            "grabbars" => Some(ObjectClass::GrabBar),
            "doorhandles" => Some(ObjectClass::DoorHandle),
            "lightswitches" => Some(ObjectClass::LightSwitch),
            "electricsockets" | "socket" | "outlet" => Some(ObjectClass::ElectricSocket),
            "smokedetector" => Some(ObjectClass::SmokeAlarm),
            "tables" => Some(ObjectClass::Table),
            "chairs" => Some(ObjectClass::Chair),
            "tv" => Some(ObjectClass::Television),
            "washer" | "dryer" => Some(ObjectClass::WasherDryer),
            _ => None,
        }
    }

    /// Splits an object key such as `"Door-Opening"` into its class and an
    /// optional free-form suffix. The longest matching prefix of words wins.
    pub fn parse_with_suffix(key: &str) -> Option<(ObjectClass, &str)> {
        let boundaries: Vec<usize> = key
            .char_indices()
            .filter(|(_, c)| c.is_whitespace() || matches!(c, '-' | '_'))
            .map(|(i, _)| i)
            .chain(std::iter::once(key.len()))
            .collect();
        boundaries.iter().rev().find_map(|&end| {
            ObjectClass::parse(&key[..end])
                .map(|c| (c, key[end..].trim_start_matches(|ch: char| ch.is_whitespace() || ch == '-' || ch == '_')))
        })
    }

    pub fn is_portal(self) -> bool {
        matches!(self, ObjectClass::Door | ObjectClass::Window | ObjectClass::Opening)
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dsl_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measurement {
    Height,
    Radius,
    Depth,
    Presence,
    Absence,
}

impl Measurement {
    pub fn parse(s: &str) -> Option<Measurement> {
        match fold_name(s).as_str() {
            "height" => Some(Measurement::Height),
            "radius" => Some(Measurement::Radius),
            "depth" => Some(Measurement::Depth),
            "presence" => Some(Measurement::Presence),
            "absence" => Some(Measurement::Absence),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measurement::Height => "Height",
            Measurement::Radius => "Radius",
            Measurement::Depth => "Depth",
            Measurement::Presence => "Presence",
            Measurement::Absence => "Absence",
        }
    }

    pub fn is_existential(self) -> bool {
        matches!(self, Measurement::Presence | Measurement::Absence)
    }

    /// Whether a dimensional measurement can be taken on objects of `class`.
    /// Radius is a clear width and only exists for wall openings; depth needs
    /// a measured box.
    pub fn applies_to(self, class: ObjectClass) -> bool {
        match self {
            Measurement::Height => !matches!(class, ObjectClass::Wall | ObjectClass::Floor),
            Measurement::Radius => class.is_portal(),
            Measurement::Depth => class.channel() == Channel::Parametric,
            Measurement::Presence | Measurement::Absence => true,
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Between,
}

impl Comparison {
    pub fn parse(s: &str) -> Option<Comparison> {
        match s.trim() {
            "<" => Some(Comparison::Lt),
            "<=" => Some(Comparison::Le),
            "==" | "=" => Some(Comparison::Eq),
            ">=" => Some(Comparison::Ge),
            ">" => Some(Comparison::Gt),
            other if other.eq_ignore_ascii_case("between") => Some(Comparison::Between),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Eq => "==",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
            Comparison::Between => "between",
        }
    }

    pub fn arity(self) -> usize {
        if self == Comparison::Between {
            2
        } else {
            1
        }
    }
}

/// Tolerance applied by [`Comparison::Eq`], in inches.
pub const EQ_TOLERANCE_IN: f64 = 0.25;

/// A length requirement in inches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstraint {
    pub op: Comparison,
    pub values: Vec<f64>,
}

impl DimensionConstraint {
    pub fn new(op: Comparison, values: Vec<f64>) -> Self {
        Self { op, values }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        Self::new(Comparison::Between, vec![lo, hi])
    }

    /// `true` when `value` (inches) satisfies the requirement. Between is
    /// inclusive on both ends.
    pub fn is_satisfied_by(&self, value: f64) -> bool {
        let v = &self.values;
        match self.op {
            Comparison::Lt => value < v[0],
            Comparison::Le => value <= v[0],
            Comparison::Eq => (value - v[0]).abs() <= EQ_TOLERANCE_IN,
            Comparison::Ge => value >= v[0],
            Comparison::Gt => value > v[0],
            Comparison::Between => value >= v[0] && value <= v[1],
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.values.len() == self.op.arity()
            && self.values.iter().all(|v| v.is_finite() && *v > 0.0)
            && (self.op != Comparison::Between || self.values[0] <= self.values[1])
    }
}

impl fmt::Display for DimensionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.op, self.values.as_slice()) {
            (Comparison::Between, [lo, hi]) => write!(f, ">={lo} & <={hi} in"),
            (op, [v]) => write!(f, "{}{v} in", op.symbol()),
            (op, vs) => write!(f, "{} {vs:?}", op.symbol()),
        }
    }
}

/// Tri-state existence flag: JSON `null`, `false`, `true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Existence {
    #[default]
    Unset,
    MustNotExist,
    MustExist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCategory {
    Dimension,
    Position,
    Existence,
}

impl IssueCategory {
    pub fn parse(s: &str) -> Option<IssueCategory> {
        match fold_name(s).as_str() {
            "dimension" => Some(IssueCategory::Dimension),
            "position" => Some(IssueCategory::Position),
            "existence" => Some(IssueCategory::Existence),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IssueCategory::Dimension => "Dimension",
            IssueCategory::Position => "Position",
            IssueCategory::Existence => "Existence",
        }
    }

    /// Category assumed when a rule document does not state one.
    pub fn default_for(class: ObjectClass, existence: Existence) -> IssueCategory {
        if existence != Existence::Unset {
            IssueCategory::Existence
        } else if class.channel() == Channel::FrameDetection {
            IssueCategory::Position
        } else {
            IssueCategory::Dimension
        }
    }
}

/// One entry of a rule document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueRule {
    /// The top-level document key, e.g. `"Door-Opening"`.
    pub object_name: String,
    pub object_class: ObjectClass,
    pub measurement: Measurement,
    pub communities: BTreeSet<Community>,
    pub dependencies: BTreeSet<ObjectClass>,
    pub dimension: Option<DimensionConstraint>,
    pub existence: Existence,
    pub category: IssueCategory,
    pub description: String,
}

impl IssueRule {
    /// `"<ObjectName>-<Measurement>"`.
    pub fn rule_id(&self) -> String {
        format!("{}-{}", self.object_name, self.measurement)
    }

    /// A rule with neither a constraint nor an existence flag is kept for
    /// coverage but never evaluated.
    pub fn is_enabled(&self) -> bool {
        self.dimension.is_some() || self.existence != Existence::Unset
    }

    pub fn is_existential(&self) -> bool {
        self.existence != Existence::Unset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSource {
    BuiltIn,
    UserFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<IssueRule>,
    pub source: RuleSource,
}

impl RuleSet {
    pub fn new(rules: Vec<IssueRule>, source: RuleSource) -> Self {
        Self { rules, source }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, rule_id: &str) -> Option<&IssueRule> {
        self.rules.iter().find(|r| r.rule_id() == rule_id)
    }

    /// Rules appended from `other` replace same-id rules of `self`.
    pub fn extended_with(&self, other: &RuleSet) -> RuleSet {
        let incoming: BTreeSet<String> = other.rules.iter().map(IssueRule::rule_id).collect();
        let mut rules: Vec<IssueRule> = self
            .rules
            .iter()
            .filter(|r| !incoming.contains(&r.rule_id()))
            .cloned()
            .collect();
        rules.extend(other.rules.iter().cloned());
        RuleSet::new(rules, RuleSource::UserFile)
    }
}

/// Keeps the rules whose community set intersects `selected`.
pub fn filter_by_community(rs: &RuleSet, selected: &BTreeSet<Community>) -> RuleSet {
    RuleSet {
        rules: rs
            .rules
            .iter()
            .filter(|r| !r.communities.is_disjoint(selected))
            .cloned()
            .collect(),
        source: rs.source,
    }
}
