//! Scoring assessments against annotated ground truth, and batch runs of the
//! full simulate, perceive, assess pipeline over scan conditions.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assess::{evaluate_scene, Assessment};
use crate::perceive::{perceive, PerceptionConfig};
use crate::rulespec::{Community, ObjectClass, RuleSet};
use crate::scene::{Scene, Vec3};
use crate::simulate::{simulate_scan, NoiseCalibration, ScanFactors, SimulateError};

pub const DEFAULT_MATCH_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Issue,
    NonIssue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthCase {
    pub kind: CaseKind,
    /// The rule an issue should trigger.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    pub class: ObjectClass,
    pub anchor: Vec3,
    pub label: String,
}

/// Outcome tallies. Fractional after averaging over scans.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub tp: f64,
    pub tn: f64,
    /// A finding at an issue or non-issue with the wrong class or rule.
    pub fp_misc: f64,
    /// A finding where nothing was annotated.
    pub fp_e: f64,
    /// A non-issue object flagged for its dimensions or position.
    pub fp_dp: f64,
    /// An issue whose object was never perceived.
    pub fn_m: f64,
    /// An issue whose object was perceived but not flagged.
    pub fn_dp: f64,
}

impl OutcomeCounts {
    pub fn fp(&self) -> f64 {
        self.fp_misc + self.fp_e + self.fp_dp
    }

    pub fn fn_(&self) -> f64 {
        self.fn_m + self.fn_dp
    }

    fn fields(&self) -> [f64; 7] {
        [self.tp, self.tn, self.fp_misc, self.fp_e, self.fp_dp, self.fn_m, self.fn_dp]
    }

    fn from_fields(f: [f64; 7]) -> Self {
        let [tp, tn, fp_misc, fp_e, fp_dp, fn_m, fn_dp] = f;
        Self { tp, tn, fp_misc, fp_e, fp_dp, fn_m, fn_dp }
    }

    /// Componentwise mean.
    pub fn mean(all: &[OutcomeCounts]) -> OutcomeCounts {
        if all.is_empty() {
            return OutcomeCounts::default();
        }
        let mut sum = [0.0; 7];
        for c in all {
            for (s, v) in sum.iter_mut().zip(c.fields()) {
                *s += v;
            }
        }
        OutcomeCounts::from_fields(sum.map(|s| s / all.len() as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Set when any ratio was 0/0 and reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum EvaluateError {
    #[error("match radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("ground truth `{a}` and `{b}` are closer than twice the match radius")]
    AmbiguousGroundTruth { a: String, b: String },
    #[error("ground truth `{label}`: {message}")]
    BadCase { label: String, message: String },
    #[error("no ground-truth cases to score against")]
    NoCases,
    #[error("at least one scan per condition is required")]
    NoScans,
    #[error("ground truth schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
}

pub fn load_ground_truth(text: &str) -> Result<Vec<GroundTruthCase>, EvaluateError> {
    let cases: Vec<GroundTruthCase> = serde_json::from_str(text)?;
    for c in &cases {
        check_case(c)?;
    }
    Ok(cases)
}

pub fn save_ground_truth(cases: &[GroundTruthCase]) -> String {
    serde_json::to_string_pretty(cases).expect("ground truth always serializes")
}

fn check_case(c: &GroundTruthCase) -> Result<(), EvaluateError> {
    let bad = |m: &str| Err(EvaluateError::BadCase { label: c.label.clone(), message: m.into() });
    match (c.kind, &c.rule_id) {
        (CaseKind::Issue, None) => bad("issue cases need a rule_id"),
        (CaseKind::NonIssue, Some(_)) => bad("non-issue cases carry no rule_id"),
        _ if !c.anchor.is_finite() => bad("anchor must be finite"),
        _ => Ok(()),
    }
}

/// Checks the cases against a rule set: every issue names an enabled rule
/// for its class, and anchors are pairwise at least twice the match radius
/// apart.
pub fn validate_ground_truth(gt: &[GroundTruthCase], rules: &RuleSet, radius: f64) -> Result<(), EvaluateError> {
    if !(radius > 0.0) {
        return Err(EvaluateError::BadRadius(radius));
    }
    for c in gt {
        check_case(c)?;
        if let Some(id) = &c.rule_id {
            match rules.get(id) {
                Some(r) if r.is_enabled() && r.object_class == c.class => {}
                _ => {
                    return Err(EvaluateError::BadCase {
                        label: c.label.clone(),
                        message: format!("`{id}` is not an enabled rule for {}", c.class),
                    })
                }
            }
        }
    }
    check_spacing(gt, radius)
}

fn check_spacing(gt: &[GroundTruthCase], radius: f64) -> Result<(), EvaluateError> {
    for (i, a) in gt.iter().enumerate() {
        for b in &gt[i + 1..] {
            if a.anchor.distance(b.anchor) < 2.0 * radius {
                return Err(EvaluateError::AmbiguousGroundTruth { a: a.label.clone(), b: b.label.clone() });
            }
        }
    }
    Ok(())
}

fn cmp_vec(a: Vec3, b: Vec3) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// Scores `assessment` against `gt`. `perceived` is the scene the assessment
/// was run on; it separates missed objects from seen but unflagged ones.
///
/// Findings and cases are paired one to one, nearest first, within
/// `radius`. Ties break on a canonical order, so the result does not depend
/// on the order of either list.
pub fn classify_outcomes(
    assessment: &Assessment,
    perceived: &Scene,
    gt: &[GroundTruthCase],
    radius: f64,
) -> Result<OutcomeCounts, EvaluateError> {
    if !(radius > 0.0) {
        return Err(EvaluateError::BadRadius(radius));
    }
    check_spacing(gt, radius)?;

    let mut findings: Vec<_> = assessment.findings.iter().collect();
    findings.sort_by(|a, b| {
        a.rule_id.cmp(&b.rule_id).then(cmp_vec(a.anchor, b.anchor)).then(a.key().cmp(b.key()))
    });
    let mut cases: Vec<_> = gt.iter().collect();
    cases.sort_by(|a, b| cmp_vec(a.anchor, b.anchor).then(a.label.cmp(&b.label)));

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (fi, f) in findings.iter().enumerate() {
        for (ci, c) in cases.iter().enumerate() {
            let d = f.anchor.distance(c.anchor);
            if d <= radius {
                pairs.push((d, fi, ci));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut finding_used = vec![false; findings.len()];
    let mut case_match: Vec<Option<usize>> = vec![None; cases.len()];
    for (_, fi, ci) in pairs {
        if !finding_used[fi] && case_match[ci].is_none() {
            finding_used[fi] = true;
            case_match[ci] = Some(fi);
        }
    }

    let subjects = perceived.subjects();
    let mut out = OutcomeCounts::default();
    for (ci, c) in cases.iter().enumerate() {
        match (c.kind, case_match[ci].map(|fi| findings[fi])) {
            (CaseKind::Issue, Some(f)) => {
                if f.class == c.class && Some(&f.rule_id) == c.rule_id.as_ref() {
                    out.tp += 1.0;
                } else {
                    out.fp_misc += 1.0;
                }
            }
            (CaseKind::Issue, None) => {
                let seen = subjects.iter().any(|o| o.class == c.class && o.bbox.center.distance(c.anchor) <= radius);
                if seen {
                    out.fn_dp += 1.0;
                } else {
                    out.fn_m += 1.0;
                }
            }
            (CaseKind::NonIssue, None) => out.tn += 1.0,
            (CaseKind::NonIssue, Some(f)) => {
                if f.class == c.class {
                    out.fp_dp += 1.0;
                } else {
                    out.fp_misc += 1.0;
                }
            }
        }
    }
    out.fp_e = finding_used.iter().filter(|u| !**u).count() as f64;
    Ok(out)
}

/// Precision, recall, F1 and accuracy. Accuracy divides by the number of
/// ground-truth cases, so extra detections do not enter it.
pub fn aggregate(counts: &OutcomeCounts, total_cases: usize) -> Result<AggregateStats, EvaluateError> {
    if total_cases == 0 {
        return Err(EvaluateError::NoCases);
    }
    let mut degenerate = false;
    let mut ratio = |n: f64, d: f64| {
        if d > 0.0 {
            n / d
        } else {
            degenerate = true;
            0.0
        }
    };
    let precision = ratio(counts.tp, counts.tp + counts.fp());
    let recall = ratio(counts.tp, counts.tp + counts.fn_());
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let accuracy = (counts.tp + counts.tn) / total_cases as f64;
    Ok(AggregateStats { precision, recall, f1, accuracy, degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub scans_per_condition: usize,
    pub base_seed: u64,
    pub match_radius: f64,
    pub perception: PerceptionConfig,
    pub communities: BTreeSet<Community>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            scans_per_condition: 5,
            base_seed: 0,
            match_radius: DEFAULT_MATCH_RADIUS,
            perception: PerceptionConfig::default(),
            communities: Community::all(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub factors: ScanFactors,
    pub scans: usize,
    /// Mean over scans.
    pub counts: OutcomeCounts,
    pub stats: AggregateStats,
    pub per_scan: Vec<OutcomeCounts>,
}

impl ConditionResult {
    /// Per-scan recall values, with 0/0 read as 0.
    pub fn recalls(&self) -> Vec<f64> {
        self.per_scan
            .iter()
            .map(|c| if c.tp + c.fn_() > 0.0 { c.tp / (c.tp + c.fn_()) } else { 0.0 })
            .collect()
    }

    /// Standard error of the mean per-scan recall.
    pub fn recall_std_error(&self) -> f64 {
        let r = self.recalls();
        let n = r.len() as f64;
        if r.len() < 2 {
            return 0.0;
        }
        let mean = r.iter().sum::<f64>() / n;
        let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    pub fn mean_recall(&self) -> f64 {
        let r = self.recalls();
        if r.is_empty() {
            0.0
        } else {
            r.iter().sum::<f64>() / r.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResults {
    pub total_cases: usize,
    pub rows: Vec<ConditionResult>,
}

/// Runs one scan end to end and scores it.
pub fn run_scan(
    scene: &Scene,
    gt: &[GroundTruthCase],
    rules: &RuleSet,
    factors: ScanFactors,
    calib: &NoiseCalibration,
    seed: u64,
    cfg: &BatchConfig,
) -> Result<OutcomeCounts, EvaluateError> {
    let log = simulate_scan(scene, factors, calib, seed)?;
    let perceived = perceive(&log, &cfg.perception);
    let assessment = evaluate_scene(rules, &perceived, &cfg.communities);
    classify_outcomes(&assessment, &perceived, gt, cfg.match_radius)
}

/// Scan `k` of every condition uses seed `base_seed + k`, so conditions are
/// compared on the same random draws.
pub fn batch_evaluate(
    scene: &Scene,
    gt: &[GroundTruthCase],
    rules: &RuleSet,
    conditions: &[ScanFactors],
    calib: &NoiseCalibration,
    cfg: &BatchConfig,
) -> Result<BatchResults, EvaluateError> {
    if cfg.scans_per_condition == 0 {
        return Err(EvaluateError::NoScans);
    }
    if gt.is_empty() {
        return Err(EvaluateError::NoCases);
    }
    validate_ground_truth(gt, rules, cfg.match_radius)?;
    let mut rows = Vec::with_capacity(conditions.len());
    for &factors in conditions {
        let per_scan = (0..cfg.scans_per_condition as u64)
            .map(|k| run_scan(scene, gt, rules, factors, calib, cfg.base_seed.wrapping_add(k), cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let counts = OutcomeCounts::mean(&per_scan);
        let stats = aggregate(&counts, gt.len())?;
        rows.push(ConditionResult { factors, scans: per_scan.len(), counts, stats, per_scan });
    }
    Ok(BatchResults { total_cases: gt.len(), rows })
}

pub const CSV_HEADER: [&str; 17] = [
    "lighting", "tidiness", "speed", "scans", "tp", "fp", "tn", "fn", "precision", "recall", "f1", "accuracy",
    "fp_misc", "fp_e", "fp_dp", "fn_m", "fn_dp",
];

impl BatchResults {
    /// One row per condition; rates in percent, counts to three decimals.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            let f = r.factors.to_string();
            let mut record: Vec<String> = f.split(',').map(str::to_string).collect();
            record.push(r.scans.to_string());
            let c = &r.counts;
            let s = &r.stats;
            let nums = [
                c.tp, c.fp(), c.tn, c.fn_(),
            ];
            record.extend(nums.iter().map(|v| format!("{v:.3}")));
            record.extend([s.precision, s.recall, s.f1, s.accuracy].iter().map(|v| format!("{:.1}", v * 100.0)));
            record.extend([c.fp_misc, c.fp_e, c.fp_dp, c.fn_m, c.fn_dp].iter().map(|v| format!("{v:.3}")));
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results always serialize")
    }
}
