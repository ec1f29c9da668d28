//! Rendering of assessments: CSV tables and SVG floorplans.

mod svg;

pub use svg::{render_floorplan, SvgStyle};

use crate::assess::Assessment;

pub const FINDINGS_CSV_HEADER: [&str; 12] = [
    "rule_id",
    "category",
    "class",
    "subject",
    "room",
    "measured_in",
    "constraint",
    "x",
    "y",
    "z",
    "communities",
    "description",
];

/// One row per finding, in assessment order.
pub fn findings_csv(a: &Assessment) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FINDINGS_CSV_HEADER).expect("in-memory write");
    for f in &a.findings {
        let communities: Vec<&str> = f.communities.iter().map(|c| c.dsl_name()).collect();
        w.write_record([
            f.rule_id.clone(),
            f.category.name().to_string(),
            f.class.to_string(),
            f.subject.clone().unwrap_or_default(),
            f.room.clone().unwrap_or_default(),
            f.measured.map(|m| format!("{m:.2}")).unwrap_or_default(),
            f.constraint.as_ref().map(ToString::to_string).unwrap_or_default(),
            format!("{:.3}", f.anchor.x),
            format!("{:.3}", f.anchor.y),
            format!("{:.3}", f.anchor.z),
            communities.join(";"),
            f.description.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}
