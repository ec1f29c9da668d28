use serde::{Deserialize, Serialize};

use super::{Quat, Vec3};

/// Pinhole intrinsics in pixels. Image axes: u right, v down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self { width: 640, height: 480, fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0 }
    }
}

impl CameraIntrinsics {
    pub fn is_valid(&self) -> bool {
        self.width > 0
            && self.height > 0
            && self.fx > 0.0
            && self.fy > 0.0
            && self.cx.is_finite()
            && self.cy.is_finite()
    }

    pub fn in_image(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= self.width as f64 && v <= self.height as f64
    }
}

/// Camera pose in the world. The camera frame has x right, y down, z forward;
/// `orientation` rotates camera-frame vectors into the world.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    /// Camera at `position` looking at `target`, image-up toward world +z.
    /// Returns `None` when the view direction is degenerate or vertical.
    pub fn look_at(position: Vec3, target: Vec3) -> Option<Pose> {
        let forward = (target - position).normalized()?;
        let right = forward.cross(Vec3::Z).normalized()?;
        let down = forward.cross(right);
        Some(Pose { position, orientation: Quat::from_basis(right, down, forward) })
    }

    pub fn forward(&self) -> Vec3 {
        self.orientation.rotate(Vec3::Z)
    }

    pub fn world_to_camera(&self, p: Vec3) -> Vec3 {
        self.orientation.conjugate().rotate(p - self.position)
    }

    /// Pixel coordinates and depth of a world point, or `None` when it is
    /// behind the camera.
    pub fn project(&self, k: &CameraIntrinsics, p: Vec3) -> Option<(f64, f64, f64)> {
        let c = self.world_to_camera(p);
        if c.z <= 1e-6 {
            return None;
        }
        Some((k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy, c.z))
    }

    /// Unit world-space direction of the ray through pixel `(u, v)`.
    pub fn unproject(&self, k: &CameraIntrinsics, u: f64, v: f64) -> Vec3 {
        let d = Vec3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        self.orientation.rotate(d).normalized().expect("ray direction has z = 1")
    }
}
