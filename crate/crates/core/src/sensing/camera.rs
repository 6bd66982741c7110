use serde::{Deserialize, Serialize};

use crate::behaviour::Pedestrian;
use crate::geom::Vec2;
use crate::world::{EgoPose, CAMERA_HEIGHT};

pub const PED_BODY_WIDTH: f64 = 0.5;
pub const PED_BODY_DEPTH: f64 = 0.4;
const NEAR_PLANE: f64 = 1e-3;

/// Forward-facing pinhole camera mounted at the ego position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    pub horizontal_fov_deg: f64,
    pub focal_px: f64,
    pub mount_height: f64,
}

impl CameraModel {
    pub fn new(width: u32, height: u32, horizontal_fov_deg: f64) -> Self {
        let focal_px = f64::from(width) / (2.0 * (horizontal_fov_deg.to_radians() / 2.0).tan());
        CameraModel {
            width,
            height,
            horizontal_fov_deg,
            focal_px,
            mount_height: CAMERA_HEIGHT,
        }
    }

    pub fn cx(&self) -> f64 {
        f64::from(self.width) / 2.0
    }

    pub fn cy(&self) -> f64 {
        f64::from(self.height) / 2.0
    }

    /// Pixel coordinates and depth of a world point (ground position plus
    /// height), or `None` behind the image plane.
    pub fn project(&self, ego: &EgoPose, ground: Vec2, z: f64) -> Option<(f64, f64, f64)> {
        let rel = ground - ego.position;
        let depth = rel.dot(ego.forward);
        if depth <= NEAR_PLANE {
            return None;
        }
        let left = rel.dot(ego.forward.perp());
        let u = self.cx() - self.focal_px * left / depth;
        let v = self.cy() - self.focal_px * (z - ego.camera_height) / depth;
        Some((u, v, depth))
    }
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel::new(1280, 720, 90.0)
    }
}

/// Axis-aligned image box, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    /// The box was cut at the image border.
    pub clipped: bool,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn centre(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn intersects_image(&self, cam: &CameraModel) -> bool {
        self.x_max > 0.0
            && self.y_max > 0.0
            && self.x_min < f64::from(cam.width)
            && self.y_min < f64::from(cam.height)
    }

    pub fn clip_to(&self, cam: &CameraModel) -> BoundingBox {
        let (w, h) = (f64::from(cam.width), f64::from(cam.height));
        let c = BoundingBox {
            x_min: self.x_min.clamp(0.0, w),
            y_min: self.y_min.clamp(0.0, h),
            x_max: self.x_max.clamp(0.0, w),
            y_max: self.y_max.clamp(0.0, h),
            clipped: false,
        };
        BoundingBox {
            clipped: self.clipped || c != BoundingBox { clipped: false, ..*self },
            ..c
        }
    }
}

/// Projects the pedestrian's upright body box (footprint oriented along its
/// heading). Corners behind the image plane are dropped; `None` when all are.
pub fn project_bbox(cam: &CameraModel, ego: &EgoPose, ped: &Pedestrian) -> Option<BoundingBox> {
    let fwd = ped.heading.normalized().unwrap_or(Vec2::new(1.0, 0.0));
    let side = fwd.perp();
    let hw = PED_BODY_WIDTH / 2.0;
    let hd = PED_BODY_DEPTH / 2.0;
    let mut bbox: Option<BoundingBox> = None;
    for (a, b) in [(hd, hw), (hd, -hw), (-hd, hw), (-hd, -hw)] {
        let ground = ped.position + fwd * a + side * b;
        for z in [0.0, ped.height] {
            let Some((u, v, _)) = cam.project(ego, ground, z) else {
                continue;
            };
            bbox = Some(match bbox {
                None => BoundingBox {
                    x_min: u,
                    y_min: v,
                    x_max: u,
                    y_max: v,
                    clipped: false,
                },
                Some(b) => BoundingBox {
                    x_min: b.x_min.min(u),
                    y_min: b.y_min.min(v),
                    x_max: b.x_max.max(u),
                    y_max: b.y_max.max(v),
                    clipped: false,
                },
            });
        }
    }
    bbox
}
