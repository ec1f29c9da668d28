//! Checked-in test scenes. The golden apartment has an entrance, a living
//! room and a kitchen with 21 planted issues and 10 compliant look-alikes.
//!
//! Fixture conventions: wall fixtures are centered on the wall plane, loose
//! items rest on their support, and image-detected objects use their class
//! prior size, so a noise-free scan perceives every object exactly.

use crate::evaluate::{load_ground_truth, GroundTruthCase};
use crate::scene::{load_scene, Scene};

pub const GOLDEN_APARTMENT_JSON: &str = include_str!("../fixtures/golden/apartment.json");
pub const GOLDEN_GROUND_TRUTH_JSON: &str = include_str!("../fixtures/golden/ground_truth.json");

pub fn golden_apartment() -> Scene {
    load_scene(GOLDEN_APARTMENT_JSON).expect("golden apartment is valid")
}

pub fn golden_ground_truth() -> Vec<GroundTruthCase> {
    load_ground_truth(GOLDEN_GROUND_TRUTH_JSON).expect("golden ground truth is valid")
}
