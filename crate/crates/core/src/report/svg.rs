use std::fmt::Write;

use crate::assess::Assessment;
use crate::rulespec::Channel;
use crate::scene::{PortalKind, Scene, Vec3, WallSegment};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    pub pixels_per_meter: f64,
    pub margin_px: f64,
    pub marker_radius_px: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle { pixels_per_meter: 60.0, margin_px: 40.0, marker_radius_px: 5.0 }
    }
}

/// Top-down view with +y up: x maps right, y maps toward the top of the page.
struct View {
    min_x: f64,
    max_y: f64,
    scale: f64,
    margin: f64,
}

impl View {
    fn x(&self, x: f64) -> f64 {
        (x - self.min_x) * self.scale + self.margin
    }

    fn y(&self, y: f64) -> f64 {
        (self.max_y - y) * self.scale + self.margin
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Solid stretches of a wall, as `(from, to)` distances along it.
fn solid_spans(wall: &WallSegment) -> Vec<(f64, f64)> {
    let len = wall.length();
    let mut cuts: Vec<(f64, f64)> = wall
        .portals
        .iter()
        .map(|p| (p.offset.clamp(0.0, len), (p.offset + p.width).clamp(0.0, len)))
        .collect();
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut spans = Vec::new();
    let mut at = 0.0;
    for (lo, hi) in cuts {
        if lo > at {
            spans.push((at, lo));
        }
        at = f64::max(at, hi);
    }
    if at < len {
        spans.push((at, len));
    }
    spans
}

/// Draws rooms, walls with portal gaps, object footprints and one red marker
/// per finding. Output depends only on the inputs.
pub fn render_floorplan(scene: &Scene, assessment: &Assessment, style: &SvgStyle) -> String {
    let mut lo = Vec3::ZERO;
    let mut hi = Vec3::new(1.0, 1.0, 0.0);
    let mut pts: Vec<Vec3> = assessment.findings.iter().map(|f| f.anchor).collect();
    if let Some((a, b)) = scene.bounds() {
        pts.extend([a, b]);
    }
    if let Some(first) = pts.first() {
        (lo, hi) = pts.iter().fold((*first, *first), |(l, h), p| (l.component_min(*p), h.component_max(*p)));
    }
    let view = View { min_x: lo.x, max_y: hi.y, scale: style.pixels_per_meter, margin: style.margin_px };
    let width = (hi.x - lo.x) * view.scale + 2.0 * view.margin;
    let height = (hi.y - lo.y) * view.scale + 2.0 * view.margin;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}" font-family="sans-serif" font-size="10">"#
    );
    s.push_str("<style>.room{fill:#f3f1ec;stroke:none}.wall{stroke:#333;stroke-width:3;stroke-linecap:square}.door{stroke:#a0714f;stroke-width:1.5;stroke-dasharray:4 3}.window{stroke:#4a90c8;stroke-width:1.5}.opening{stroke:#bbb;stroke-width:1;stroke-dasharray:2 3}.furniture{fill:#d9d4c7;stroke:#8a8270;stroke-width:1}.item{fill:#f2b84b;stroke:#a8731a;stroke-width:1}.finding{fill:#d62728;stroke:#fff;stroke-width:1}.label{fill:#d62728}.room-name{fill:#777;font-size:12px;text-anchor:middle}</style>\n");

    s.push_str("<g id=\"rooms\">\n");
    for (i, room) in scene.rooms.iter().enumerate() {
        let pts: Vec<String> = room.floor.iter().map(|p| format!("{:.2},{:.2}", view.x(p.x), view.y(p.y))).collect();
        let _ = writeln!(s, r#"<polygon class="room" points="{}"/>"#, pts.join(" "));
        let c = room.centroid();
        let _ = writeln!(
            s,
            r#"<text class="room-name" x="{:.2}" y="{:.2}">{}</text>"#,
            view.x(c.x),
            view.y(c.y),
            escape(&scene.room_name(i))
        );
    }
    s.push_str("</g>\n<g id=\"walls\">\n");
    for room in &scene.rooms {
        for wall in &room.walls {
            let dir = wall.direction();
            let at = |d: f64| wall.a + dir * d;
            for (from, to) in solid_spans(wall) {
                let (p, q) = (at(from), at(to));
                let _ = writeln!(
                    s,
                    r#"<line class="wall" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                    view.x(p.x),
                    view.y(p.y),
                    view.x(q.x),
                    view.y(q.y)
                );
            }
            for portal in &wall.portals {
                let class = match portal.kind {
                    PortalKind::Door => "door",
                    PortalKind::Window => "window",
                    PortalKind::Opening => "opening",
                };
                let (p, q) = (at(portal.offset), at(portal.offset + portal.width));
                let _ = writeln!(
                    s,
                    r#"<line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                    view.x(p.x),
                    view.y(p.y),
                    view.x(q.x),
                    view.y(q.y)
                );
            }
        }
    }
    s.push_str("</g>\n<g id=\"objects\">\n");
    // Furniture first so small items stay visible on top of it.
    let mut objects: Vec<_> = scene.objects.iter().collect();
    objects.sort_by_key(|o| o.class.channel() == Channel::FrameDetection);
    for o in objects {
        let class = if o.class.channel() == Channel::FrameDetection { "item" } else { "furniture" };
        let pts: Vec<String> =
            o.bbox.footprint().iter().map(|(x, y)| format!("{:.2},{:.2}", view.x(*x), view.y(*y))).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="{class}" points="{}"><title>{} ({})</title></polygon>"#,
            pts.join(" "),
            escape(&o.id),
            o.class.dsl_name()
        );
    }
    s.push_str("</g>\n<g id=\"findings\">\n");
    for f in &assessment.findings {
        let (x, y) = (view.x(f.anchor.x), view.y(f.anchor.y));
        let _ = writeln!(
            s,
            r#"<circle class="finding" data-rule="{}" cx="{x:.2}" cy="{y:.2}" r="{:.1}"><title>{}</title></circle>"#,
            escape(&f.rule_id),
            style.marker_radius_px,
            escape(&f.description)
        );
        let _ = writeln!(
            s,
            r#"<text class="label" x="{:.2}" y="{:.2}">{}</text>"#,
            x + style.marker_radius_px + 2.0,
            y - style.marker_radius_px,
            escape(&f.rule_id)
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
