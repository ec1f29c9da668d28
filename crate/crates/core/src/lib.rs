//! Indoor accessibility auditing: a JSON rule language, a 3D scene model,
//! rule assessment with JSON, CSV and SVG reports, perception from scan
//! logs, scan simulation and evaluation against annotated ground truth.

pub mod assess;
pub mod evaluate;
pub mod fixtures;
pub mod perceive;
pub mod report;
pub mod rulespec;
pub mod scene;
pub mod simulate;
