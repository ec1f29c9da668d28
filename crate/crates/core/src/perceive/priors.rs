use crate::rulespec::ObjectClass;
use crate::scene::{OrientedBox, Vec3};

/// Where a localized point sits on an object's box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Fixtures on a wall or cabinet face: the point is the box center.
    Mounted,
    /// Loose items: the point is the center of the box bottom.
    Resting,
}

/// Fixed box assumed for objects seen only by the image detector, which
/// gives no 3D size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrior {
    pub half_extents: Vec3,
    pub placement: Placement,
}

pub fn class_prior(class: ObjectClass) -> ClassPrior {
    use ObjectClass::*;
    use Placement::*;
    let (h, placement) = match class {
        DoorHandle => ([0.06, 0.03, 0.02], Mounted),
        ElectricSocket => ([0.04, 0.015, 0.06], Mounted),
        LightSwitch => ([0.04, 0.015, 0.04], Mounted),
        GrabBar => ([0.3, 0.04, 0.02], Mounted),
        SmokeAlarm => ([0.07, 0.03, 0.07], Mounted),
        Knob => ([0.02, 0.02, 0.02], Mounted),
        Knives => ([0.12, 0.02, 0.01], Resting),
        Scissors => ([0.09, 0.04, 0.008], Resting),
        Medication => ([0.03, 0.03, 0.05], Resting),
        Rug => ([0.6, 0.4, 0.005], Resting),
        _ => ([0.05, 0.05, 0.05], Mounted),
    };
    ClassPrior { half_extents: h.into(), placement }
}

impl ClassPrior {
    /// Box center for an object localized at `point`.
    pub fn center_from_point(&self, point: Vec3) -> Vec3 {
        match self.placement {
            Placement::Mounted => point,
            Placement::Resting => point + Vec3::new(0.0, 0.0, self.half_extents.z),
        }
    }

    /// The point of a physical box that a detection's center ray lands on.
    pub fn anchor_of(&self, b: &OrientedBox) -> Vec3 {
        match self.placement {
            Placement::Mounted => b.center,
            Placement::Resting => b.bottom_center(),
        }
    }
}
