//! Browser bindings: load a scene, audit it, draw the floorplan, and run a
//! simulated scan under chosen factors. Every export takes and returns
//! strings so the page needs no generated types.

use std::collections::BTreeSet;

use wasm_bindgen::prelude::*;

use roomaudit::assess::evaluate_scene;
use roomaudit::fixtures::GOLDEN_APARTMENT_JSON;
use roomaudit::perceive::{perceive, PerceptionConfig};
use roomaudit::report::{render_floorplan, SvgStyle};
use roomaudit::rulespec::{builtin_rule_pack, parse_rule_spec, serialize_rule_spec, validate_rule_set, Community};
use roomaudit::scene::{load_scene, Scene};
use roomaudit::simulate::{simulate_scan, NoiseCalibration, ScanFactors};

/// Communities from a comma-separated list; empty means all.
fn communities(list: &str) -> Result<BTreeSet<Community>, String> {
    let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Ok(Community::all());
    }
    names.iter().map(|n| Community::parse(n).ok_or_else(|| format!("unknown community `{n}`"))).collect()
}

fn scene(json: &str) -> Result<Scene, String> {
    load_scene(json).map_err(|e| e.to_string())
}

pub fn assess_json(scene_json: &str, community_list: &str) -> Result<String, String> {
    let s = scene(scene_json)?;
    Ok(evaluate_scene(&builtin_rule_pack(), &s, &communities(community_list)?).to_json())
}

pub fn floorplan(scene_json: &str, community_list: &str) -> Result<String, String> {
    let s = scene(scene_json)?;
    let a = evaluate_scene(&builtin_rule_pack(), &s, &communities(community_list)?);
    Ok(render_floorplan(&s, &a, &SvgStyle::default()))
}

/// Simulates one scan, rebuilds the scene from it and draws what the
/// perceived scene reports.
pub fn scan_floorplan(scene_json: &str, factors: &str, seed: u64) -> Result<String, String> {
    let s = scene(scene_json)?;
    let f: ScanFactors = factors.parse().map_err(|e: roomaudit::simulate::SimulateError| e.to_string())?;
    let log = simulate_scan(&s, f, &NoiseCalibration::default(), seed).map_err(|e| e.to_string())?;
    let perceived = perceive(&log, &PerceptionConfig::default());
    let a = evaluate_scene(&builtin_rule_pack(), &perceived, &Community::all());
    Ok(render_floorplan(&perceived, &a, &SvgStyle::default()))
}

/// Diagnostics for a rule document as a JSON array; parse failures become a
/// single error entry.
pub fn rule_diagnostics(text: &str) -> String {
    let diags = match parse_rule_spec(text) {
        Ok(rs) => validate_rule_set(&rs)
            .iter()
            .map(|d| serde_json::json!({ "severity": d.severity, "rule_id": d.rule_id, "message": d.message }))
            .collect(),
        Err(e) => vec![serde_json::json!({ "severity": "error", "rule_id": null, "message": e.to_string() })],
    };
    serde_json::Value::Array(diags).to_string()
}

#[wasm_bindgen(js_name = goldenScene)]
pub fn golden_scene() -> String {
    GOLDEN_APARTMENT_JSON.to_string()
}

#[wasm_bindgen(js_name = builtinRules)]
pub fn builtin_rules() -> String {
    serialize_rule_spec(&builtin_rule_pack())
}

#[wasm_bindgen]
pub fn assess(scene_json: &str, communities: &str) -> Result<String, JsError> {
    assess_json(scene_json, communities).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = floorplanSvg)]
pub fn floorplan_svg(scene_json: &str, communities: &str) -> Result<String, JsError> {
    floorplan(scene_json, communities).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scanSvg)]
pub fn scan_svg(scene_json: &str, factors: &str, seed: u32) -> Result<String, JsError> {
    scan_floorplan(scene_json, factors, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = validateRules)]
pub fn validate_rules(text: &str) -> String {
    rule_diagnostics(text)
}
