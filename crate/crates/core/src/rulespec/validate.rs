use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Comparison, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule_id: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.rule_id, self.message)
    }
}

/// Structural checks beyond what parsing enforces. An empty result means the
/// rule set is valid.
pub fn validate_rule_set(rs: &RuleSet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for rule in &rs.rules {
        let id = rule.rule_id();
        let mut push = |severity, message: String| {
            out.push(Diagnostic { severity, rule_id: id.clone(), message })
        };
        let count = seen.entry(id.clone()).or_default();
        *count += 1;
        if *count == 2 {
            push(Severity::Error, "duplicate rule id".into());
        }
        if rule.communities.is_empty() {
            push(Severity::Error, "community set is empty".into());
        }
        if rule.is_existential() {
            if rule.dimension.is_some() {
                push(Severity::Error, "existential rule carries a dimension constraint".into());
            }
            if rule.dependencies.contains(&rule.object_class) {
                push(Severity::Warning, "existential rule depends on its own object class".into());
            }
        } else if rule.measurement.is_existential() {
            push(
                Severity::Error,
                format!("measurement {} requires an existence flag", rule.measurement),
            );
        }
        if let Some(c) = &rule.dimension {
            if !rule.measurement.applies_to(rule.object_class) {
                push(
                    Severity::Error,
                    format!("{} cannot be measured on {}", rule.measurement, rule.object_class),
                );
            }
            if c.values.len() != c.op.arity() {
                push(
                    Severity::Error,
                    format!("`{}` takes {} value(s), got {}", c.op.symbol(), c.op.arity(), c.values.len()),
                );
            } else if c.op == Comparison::Between && c.values[0] > c.values[1] {
                push(
                    Severity::Error,
                    format!("between bounds are reversed: [{}, {}]", c.values[0], c.values[1]),
                );
            }
            if c.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                push(Severity::Error, "dimension values must be positive".into());
            }
        }
    }
    out
}
