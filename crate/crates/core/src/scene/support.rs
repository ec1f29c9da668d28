use super::{OrientedBox, Room};

/// Vertical gap allowed between an object's bottom and its support's top.
pub const SUPPORT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub enum Support<'a> {
    Object(&'a OrientedBox),
    /// The floor of any of these rooms.
    Floor(&'a [Room]),
}

/// Whether `b` rests on `support`: its bottom lies within `SUPPORT_EPSILON`
/// of the support top and its bottom center lies over the support footprint.
pub fn is_supported_by(b: &OrientedBox, support: Support<'_>) -> bool {
    let foot = b.bottom_center();
    match support {
        Support::Object(s) => {
            (b.bottom_height() - s.top_height()).abs() <= SUPPORT_EPSILON && s.footprint_contains(foot)
        }
        Support::Floor(rooms) => {
            b.bottom_height().abs() <= SUPPORT_EPSILON && rooms.iter().any(|r| r.contains_xy(foot))
        }
    }
}
