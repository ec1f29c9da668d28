use std::collections::BTreeSet;
use std::fmt;
use std::marker::PhantomData;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;

use super::{
    Community, Comparison, DimensionConstraint, Existence, IssueCategory, IssueRule, Measurement,
    ObjectClass, RuleSet, RuleSource,
};

#[derive(Debug, thiserror::Error)]
pub enum RuleSpecError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: expected a JSON object")]
    NotAnObject { path: String },
    #[error("unknown object of interest `{0}`")]
    UnknownObject(String),
    #[error("{rule}: unknown measurement `{key}`")]
    UnknownMeasurement { rule: String, key: String },
    #[error("{rule}: unknown community `{value}`")]
    UnknownCommunity { rule: String, value: String },
    #[error("{rule}: unknown object class `{value}` in Dependency")]
    UnknownDependency { rule: String, value: String },
    #[error("{rule}: Dimension must be null when Existence is set")]
    DimensionOnExistential { rule: String },
    #[error("{rule}: comparison `{op}` takes {expected} value(s), got {got}")]
    Arity { rule: String, op: String, expected: usize, got: usize },
    #[error("{rule}: Dimension.Value given without a Comparison")]
    ValueWithoutComparison { rule: String },
    #[error("{rule}: unknown comparison `{op}`")]
    UnknownComparison { rule: String, op: String },
    #[error("{rule}: dimension values must be positive finite inches, got {value}")]
    InvalidValue { rule: String, value: String },
    #[error("{rule}: rule has neither a Dimension nor an Existence check")]
    EmptyRule { rule: String },
    #[error("{rule}: disabled rule must not carry a Dimension or Existence check")]
    DisabledWithCheck { rule: String },
    #[error("{rule}: measurement `{measurement}` requires Existence to be set")]
    ExistentialMeasurement { rule: String, measurement: String },
    #[error("{rule}: category `{category}` conflicts with the rule body")]
    CategoryMismatch { rule: String, category: String },
    #[error("{rule}: unknown key `{key}`")]
    UnknownKey { rule: String, key: String },
    #[error("{rule}: `{key}` must be {expected}")]
    BadType { rule: String, key: String, expected: &'static str },
}

/// A JSON object read with its entries in document order, duplicates kept.
struct OrderedObject<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for OrderedObject<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Entries<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for Entries<V> {
            type Value = OrderedObject<V>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<OrderedObject<V>, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, V>()? {
                    entries.push((k, v));
                }
                Ok(OrderedObject(entries))
            }
        }
        d.deserialize_map(Entries(PhantomData))
    }
}

/// Parses a two-level rule document: object name → measurement → body.
pub fn parse_rule_spec(text: &str) -> Result<RuleSet, RuleSpecError> {
    let top: Value = serde_json::from_str(text)?;
    if !top.is_object() {
        return Err(RuleSpecError::NotAnObject { path: "<root>".into() });
    }
    // Measurement level stays raw so repeated keys inside an object survive
    // to validation.
    let top: OrderedObject<Box<RawValue>> = serde_json::from_str(text)?;
    let mut rules = Vec::new();
    for (object_name, inner) in top.0 {
        let (object_class, _) = ObjectClass::parse_with_suffix(&object_name)
            .ok_or_else(|| RuleSpecError::UnknownObject(object_name.clone()))?;
        if !inner.get().starts_with('{') {
            return Err(RuleSpecError::NotAnObject { path: object_name });
        }
        let inner: OrderedObject<Value> = serde_json::from_str(inner.get())?;
        for (key, body) in inner.0 {
            rules.push(parse_rule(&object_name, object_class, &key, &body)?);
        }
    }
    Ok(RuleSet::new(rules, RuleSource::UserFile))
}

fn parse_rule(
    object_name: &str,
    object_class: ObjectClass,
    key: &str,
    body: &Value,
) -> Result<IssueRule, RuleSpecError> {
    let rule = format!("{object_name}-{key}");
    let measurement_key = Measurement::parse(key).ok_or_else(|| RuleSpecError::UnknownMeasurement {
        rule: rule.clone(),
        key: key.to_string(),
    })?;
    let body = body
        .as_object()
        .ok_or_else(|| RuleSpecError::NotAnObject { path: rule.clone() })?;
    const KEYS: [&str; 7] =
        ["Community", "Dependency", "Dimension", "Existence", "Description", "Category", "Disabled"];
    if let Some(k) = body.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(RuleSpecError::UnknownKey { rule, key: k.clone() });
    }
    let bad = |key: &str, expected| RuleSpecError::BadType { rule: rule.clone(), key: key.into(), expected };

    let communities = string_list(body.get("Community"), || bad("Community", "an array of strings"))?
        .into_iter()
        .map(|s| {
            Community::parse(&s)
                .ok_or_else(|| RuleSpecError::UnknownCommunity { rule: rule.clone(), value: s })
        })
        .collect::<Result<BTreeSet<_>, _>>()?;

    let dependencies = string_list(body.get("Dependency"), || bad("Dependency", "an array of strings"))?
        .into_iter()
        .map(|s| {
            ObjectClass::parse(&s)
                .ok_or_else(|| RuleSpecError::UnknownDependency { rule: rule.clone(), value: s })
        })
        .collect::<Result<BTreeSet<_>, _>>()?;

    let existence = match body.get("Existence") {
        None | Some(Value::Null) => Existence::Unset,
        Some(Value::Bool(false)) => Existence::MustNotExist,
        Some(Value::Bool(true)) => Existence::MustExist,
        Some(_) => return Err(bad("Existence", "null, true or false")),
    };

    let (comparison, values) = match body.get("Dimension") {
        None | Some(Value::Null) => (None, None),
        Some(Value::Object(dim)) => {
            let cmp = match dim.get("Comparison") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(_) => return Err(bad("Dimension.Comparison", "a string or null")),
            };
            let vals = match dim.get("Value") {
                None | Some(Value::Null) => None,
                Some(Value::Array(a)) => Some(
                    a.iter()
                        .map(|v| v.as_f64().ok_or_else(|| bad("Dimension.Value", "an array of numbers")))
                        .collect::<Result<Vec<f64>, _>>()?,
                ),
                Some(_) => return Err(bad("Dimension.Value", "an array of numbers or null")),
            };
            (cmp, vals)
        }
        Some(_) => return Err(bad("Dimension", "an object or null")),
    };

    let disabled = match body.get("Disabled") {
        None | Some(Value::Null) | Some(Value::Bool(false)) => false,
        Some(Value::Bool(true)) => true,
        Some(_) => return Err(bad("Disabled", "a boolean")),
    };

    let dimension = match (comparison, values) {
        (None, None) => None,
        (None, Some(_)) => return Err(RuleSpecError::ValueWithoutComparison { rule }),
        (Some(op), vals) => {
            if existence != Existence::Unset {
                return Err(RuleSpecError::DimensionOnExistential { rule });
            }
            let cmp = Comparison::parse(&op)
                .ok_or_else(|| RuleSpecError::UnknownComparison { rule: rule.clone(), op: op.clone() })?;
            let vals = vals.unwrap_or_default();
            if vals.len() != cmp.arity() {
                return Err(RuleSpecError::Arity {
                    rule,
                    op,
                    expected: cmp.arity(),
                    got: vals.len(),
                });
            }
            if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(RuleSpecError::InvalidValue { rule, value: v.to_string() });
            }
            Some(DimensionConstraint::new(cmp, vals))
        }
    };

    if disabled {
        if dimension.is_some() || existence != Existence::Unset {
            return Err(RuleSpecError::DisabledWithCheck { rule });
        }
    } else if dimension.is_none() && existence == Existence::Unset {
        return Err(RuleSpecError::EmptyRule { rule });
    }

    // The measurement key of an existential rule is informational only.
    let measurement = match existence {
        Existence::MustNotExist => Measurement::Presence,
        Existence::MustExist => Measurement::Absence,
        Existence::Unset if measurement_key.is_existential() => {
            return Err(RuleSpecError::ExistentialMeasurement {
                rule,
                measurement: measurement_key.to_string(),
            })
        }
        Existence::Unset => measurement_key,
    };

    let default_category = IssueCategory::default_for(object_class, existence);
    let category = match body.get("Category") {
        None | Some(Value::Null) => default_category,
        Some(Value::String(s)) => {
            let c = IssueCategory::parse(s).ok_or_else(|| bad("Category", "Dimension, Position or Existence"))?;
            let consistent = (c == IssueCategory::Existence) == (existence != Existence::Unset);
            if !consistent {
                return Err(RuleSpecError::CategoryMismatch { rule, category: s.clone() });
            }
            c
        }
        Some(_) => return Err(bad("Category", "a string")),
    };

    let description = match body.get("Description") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(bad("Description", "a string")),
    };

    Ok(IssueRule {
        object_name: object_name.to_string(),
        object_class,
        measurement,
        communities,
        dependencies,
        dimension,
        existence,
        category,
        description,
    })
}

fn string_list(
    v: Option<&Value>,
    err: impl Fn() -> RuleSpecError,
) -> Result<Vec<String>, RuleSpecError> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::String(s)) => Ok(vec![s.clone()]),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| i.as_str().map(str::to_string).ok_or_else(&err))
            .collect(),
        Some(_) => Err(err()),
    }
}

#[derive(Serialize)]
struct DimensionOut<'a> {
    #[serde(rename = "Comparison")]
    comparison: Option<&'static str>,
    #[serde(rename = "Value")]
    value: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct BodyOut<'a> {
    #[serde(rename = "Community")]
    community: Vec<&'static str>,
    #[serde(rename = "Dependency")]
    dependency: Vec<&'static str>,
    #[serde(rename = "Dimension")]
    dimension: DimensionOut<'a>,
    #[serde(rename = "Existence")]
    existence: Option<bool>,
    #[serde(rename = "Description")]
    description: &'a str,
    #[serde(rename = "Category")]
    category: &'static str,
    #[serde(rename = "Disabled", skip_serializing_if = "std::ops::Not::not")]
    disabled: bool,
}

impl<'a> From<&'a IssueRule> for BodyOut<'a> {
    fn from(r: &'a IssueRule) -> Self {
        BodyOut {
            community: r.communities.iter().map(|c| c.dsl_name()).collect(),
            dependency: r.dependencies.iter().map(|c| c.dsl_name()).collect(),
            dimension: DimensionOut {
                comparison: r.dimension.as_ref().map(|d| d.op.symbol()),
                value: r.dimension.as_ref().map(|d| d.values.as_slice()),
            },
            existence: match r.existence {
                Existence::Unset => None,
                Existence::MustNotExist => Some(false),
                Existence::MustExist => Some(true),
            },
            description: &r.description,
            category: r.category.name(),
            disabled: !r.is_enabled(),
        }
    }
}

struct Group<'a>(&'a [IssueRule]);

impl Serialize for Group<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for r in self.0 {
            m.serialize_entry(r.measurement.name(), &BodyOut::from(r))?;
        }
        m.end()
    }
}

struct Document<'a>(Vec<&'a [IssueRule]>);

impl Serialize for Document<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for g in &self.0 {
            m.serialize_entry(&g[0].object_name, &Group(g))?;
        }
        m.end()
    }
}

/// Writes the canonical document. Consecutive rules sharing an object name
/// are nested under one key; rule order is preserved.
pub fn serialize_rule_spec(rs: &RuleSet) -> String {
    let groups: Vec<&[IssueRule]> = rs
        .rules
        .chunk_by(|a, b| a.object_name == b.object_name)
        .collect();
    serde_json::to_string_pretty(&Document(groups)).expect("rule documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIGURE_DOOR: &str = include_str!("../../fixtures/rules/door_opening.json");

    pub(crate) const FIGURE_KNIVES: &str = include_str!("../../fixtures/rules/knives.json");

    #[test]
    fn repeated_measurement_keys_are_kept() {
        let body = r#"{"Community": ["Children"], "Existence": false, "Description": "x"}"#;
        let text = format!(r#"{{"Knives": {{"Presence": {body}, "Presence": {body}}}}}"#);
        let rs = parse_rule_spec(&text).unwrap();
        assert_eq!(rs.len(), 2);
        let diags = crate::rulespec::validate_rule_set(&rs);
        assert!(diags.iter().any(|d| d.message == "duplicate rule id"));
    }

    #[test]
    fn door_example() {
        let rs = parse_rule_spec(FIGURE_DOOR).unwrap();
        assert_eq!(rs.len(), 1);
        let r = &rs.rules[0];
        assert_eq!(r.rule_id(), "Door-Opening-Radius");
        assert_eq!(r.object_class, ObjectClass::Door);
        assert_eq!(r.measurement, Measurement::Radius);
        assert_eq!(r.communities, [Community::WheelchairUser].into());
        assert_eq!(r.dependencies, [ObjectClass::Door].into());
        assert_eq!(r.dimension, Some(DimensionConstraint::new(Comparison::Gt, vec![32.0])));
        assert_eq!(r.existence, Existence::Unset);
        assert_eq!(r.category, IssueCategory::Dimension);
        assert!(r.description.ends_with("clear width of 32 inches minimum."));
    }

    #[test]
    fn knives_example() {
        let rs = parse_rule_spec(FIGURE_KNIVES).unwrap();
        let r = &rs.rules[0];
        assert_eq!(r.object_class, ObjectClass::Knives);
        assert_eq!(r.measurement, Measurement::Presence);
        assert_eq!(r.rule_id(), "Knives-Presence");
        assert_eq!(
            r.dependencies,
            [
                ObjectClass::Table,
                ObjectClass::Sofa,
                ObjectClass::Counter,
                ObjectClass::Floor,
                ObjectClass::Bed,
                ObjectClass::Chair
            ]
            .into()
        );
        assert_eq!(r.dimension, None);
        assert_eq!(r.existence, Existence::MustNotExist);
        assert_eq!(r.category, IssueCategory::Existence);
    }

    #[test]
    fn empty_document() {
        let rs = parse_rule_spec("{}").unwrap();
        assert!(rs.is_empty());
        assert_eq!(serialize_rule_spec(&rs), "{}");
    }

    #[test]
    fn figure_rules_round_trip() {
        for doc in [FIGURE_DOOR, FIGURE_KNIVES] {
            let rs = parse_rule_spec(doc).unwrap();
            assert_eq!(parse_rule_spec(&serialize_rule_spec(&rs)).unwrap(), rs);
        }
    }

    #[test]
    fn duplicate_keys_are_kept_in_order() {
        let doc = r#"{"Rug": {"Presence": {"Community": ["Children"], "Existence": false}},
                      "Rug": {"Presence": {"Community": ["Children"], "Existence": false}}}"#;
        let rs = parse_rule_spec(doc).unwrap();
        assert_eq!(rs.len(), 2);
    }

    fn err(doc: &str) -> RuleSpecError {
        parse_rule_spec(doc).unwrap_err()
    }

    #[test]
    fn rejections() {
        assert!(matches!(err("{"), RuleSpecError::Json(_)));
        assert!(matches!(err("[]"), RuleSpecError::NotAnObject { .. }));
        assert!(matches!(
            err(r#"{"Rug": {"Presence": {"Community": ["Pets"], "Existence": false}}}"#),
            RuleSpecError::UnknownCommunity { .. }
        ));
        assert!(matches!(
            err(r#"{"Rug": {"Presence": {"Community": ["Children"], "Dependency": ["Moon"], "Existence": false}}}"#),
            RuleSpecError::UnknownDependency { .. }
        ));
        assert!(matches!(
            err(r#"{"Rug": {"Presence": {"Community": ["Children"], "Dimension": {"Comparison": ">", "Value": [3]}, "Existence": false}}}"#),
            RuleSpecError::DimensionOnExistential { .. }
        ));
        assert!(matches!(
            err(r#"{"Table": {"Height": {"Community": ["Children"], "Dimension": {"Comparison": "between", "Value": [3]}}}}"#),
            RuleSpecError::Arity { .. }
        ));
        assert!(matches!(
            err(r#"{"Table": {"Height": {"Community": ["Children"], "Dimension": {"Comparison": null, "Value": null}, "Existence": null}}}"#),
            RuleSpecError::EmptyRule { .. }
        ));
        assert!(matches!(
            err(r#"{"Spaceship": {"Height": {"Community": ["Children"], "Existence": true}}}"#),
            RuleSpecError::UnknownObject(_)
        ));
        assert!(matches!(
            err(r#"{"Table": {"Width": {"Community": ["Children"], "Existence": true}}}"#),
            RuleSpecError::UnknownMeasurement { .. }
        ));
        assert!(matches!(
            err(r#"{"Table": {"Presence": {"Community": ["Children"], "Dimension": {"Comparison": "<", "Value": [3]}}}}"#),
            RuleSpecError::ExistentialMeasurement { .. }
        ));
        assert!(matches!(
            err(r#"{"Table": {"Height": {"Community": ["Children"], "Dimension": {"Comparison": "<", "Value": [-3]}}}}"#),
            RuleSpecError::InvalidValue { .. }
        ));
        assert!(matches!(
            err(r#"{"Table": {"Height": {"Community": ["Children"], "Dimension": {"Comparison": "~", "Value": [3]}}}}"#),
            RuleSpecError::UnknownComparison { .. }
        ));
        assert!(matches!(
            err(r#"{"Table": {"Height": {"Community": ["Children"], "Colour": "red", "Existence": true}}}"#),
            RuleSpecError::UnknownKey { .. }
        ));
    }

    #[test]
    fn between_bounds_are_not_reordered() {
        let rs = parse_rule_spec(
            r#"{"Light Switch": {"Height": {"Community": ["Wheelchair User"], "Dimension": {"Comparison": "between", "Value": [48, 15]}}}}"#,
        )
        .unwrap();
        assert_eq!(rs.rules[0].dimension.as_ref().unwrap().values, vec![48.0, 15.0]);
    }
}
