use serde::{Deserialize, Serialize};

use super::camera::{BoundingBox, CameraModel};
use crate::behaviour::Pedestrian;
use crate::world::EgoPose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub max_distance: f64,
    /// Minimum (width, height) in pixels.
    pub min_box: (f64, f64),
    pub relaxed_box: (f64, f64),
    /// Distance beyond which the relaxed box applies.
    pub relaxed_beyond: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            max_distance: 70.0,
            min_box: (15.0, 30.0),
            relaxed_box: (8.0, 15.0),
            relaxed_beyond: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateResult {
    pub passed: bool,
    /// First failing stage (1..=4), 0 when passed.
    pub stage_failed: u8,
}

impl GateResult {
    const PASS: GateResult = GateResult {
        passed: true,
        stage_failed: 0,
    };

    fn fail(stage: u8) -> Self {
        GateResult {
            passed: false,
            stage_failed: stage,
        }
    }
}

/// Stage evaluation on precomputed geometry; stages run in order and the
/// first failure is reported.
pub fn gate_stages(
    cam: &CameraModel,
    params: &GateParams,
    distance: f64,
    forward_dot: f64,
    bbox: Option<&BoundingBox>,
) -> GateResult {
    if !(distance < params.max_distance) {
        return GateResult::fail(1);
    }
    if !(forward_dot > 0.0) {
        return GateResult::fail(2);
    }
    let Some(b) = bbox else {
        return GateResult::fail(3);
    };
    let (min_w, min_h) = if distance > params.relaxed_beyond {
        params.relaxed_box
    } else {
        params.min_box
    };
    if b.width() < min_w || b.height() < min_h {
        return GateResult::fail(3);
    }
    let (cx, cy) = b.centre();
    let centre_inside =
        (0.0..f64::from(cam.width)).contains(&cx) && (0.0..f64::from(cam.height)).contains(&cy);
    if !b.intersects_image(cam) || !centre_inside {
        return GateResult::fail(4);
    }
    GateResult::PASS
}

pub fn visibility_gate(
    cam: &CameraModel,
    ego: &EgoPose,
    ped: &Pedestrian,
    bbox: Option<&BoundingBox>,
    params: &GateParams,
) -> GateResult {
    let rel = ped.position - ego.position;
    gate_stages(cam, params, rel.norm(), rel.dot(ego.forward), bbox)
}
