//! Parametric straight-road world, lane classification and vehicle kinematics.
//!
//! Coordinates: the road centreline starts at `origin` and runs along
//! `road_axis`. The signed lateral offset of a point is its projection onto
//! the left normal (`road_axis` rotated +90 degrees). Driving lanes are
//! numbered from the most negative offset upward; lanes on the negative
//! side travel along `road_axis`, lanes on the positive side against it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap_acceptance::ttc;
use crate::geom::Vec2;

pub const LANE_WIDTH: f64 = 3.5;
pub const SIDEWALK_WIDTH: f64 = 3.0;
pub const PARKING_WIDTH: f64 = 2.5;
pub const WORLD_LENGTH: f64 = 300.0;

pub const MAX_VEHICLE_SPEED: f64 = 25.0;
pub const ACCEL_LIMIT: f64 = 3.0;
pub const BRAKE_LIMIT: f64 = 8.0;
/// Along-lane distance (vehicle centre to pedestrian) below which a vehicle
/// always brakes for a pedestrian in its lane.
pub const STANDOFF_DISTANCE: f64 = 7.0;
pub const CAMERA_HEIGHT: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaneType {
    Driving,
    Sidewalk,
    Shoulder,
    Parking,
}

/// Side of the road relative to the centreline. `Right` is the negative
/// lateral side, i.e. the kerb to the right of traffic moving along the axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Non-driving band between a road edge and its sidewalk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideBand {
    pub lane_type: LaneType,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadWorld {
    pub template_name: String,
    pub origin: Vec2,
    pub road_axis: Vec2,
    pub n_driving_lanes: usize,
    pub lane_width: f64,
    pub sidewalk_width: f64,
    pub road_width: f64,
    pub world_length: f64,
    /// Bands between the road edge and the sidewalk, listed kerb-outward.
    pub left_bands: Vec<SideBand>,
    pub right_bands: Vec<SideBand>,
}

/// Registered template names, in registration order.
pub const TEMPLATES: [&str; 4] = ["town_a", "town_b", "town_c", "town_e"];

/// Maps the simulator town names used on the command line onto templates.
pub fn resolve_template_alias(name: &str) -> &str {
    match name {
        "Town01" | "town01" => "town_a",
        "Town02" | "town02" => "town_b",
        "Town03" | "town03" => "town_c",
        "Town05" | "town05" => "town_e",
        other => other,
    }
}

pub fn build_world(template: &str) -> Result<RoadWorld> {
    let (lanes, left_bands) = match resolve_template_alias(template) {
        "town_a" => (2, vec![]),
        "town_b" => (4, vec![]),
        "town_c" => (
            2,
            vec![SideBand {
                lane_type: LaneType::Parking,
                width: PARKING_WIDTH,
            }],
        ),
        "town_e" => (6, vec![]),
        other => {
            return Err(Error::Config(format!(
                "unknown world template `{other}` (registered: {})",
                TEMPLATES.join(", ")
            )))
        }
    };
    Ok(RoadWorld {
        template_name: resolve_template_alias(template).to_string(),
        origin: Vec2::ZERO,
        road_axis: Vec2::new(1.0, 0.0),
        n_driving_lanes: lanes,
        lane_width: LANE_WIDTH,
        sidewalk_width: SIDEWALK_WIDTH,
        road_width: lanes as f64 * LANE_WIDTH,
        world_length: WORLD_LENGTH,
        left_bands,
        right_bands: vec![],
    })
}

impl RoadWorld {
    /// Left normal of the road axis.
    pub fn normal(&self) -> Vec2 {
        self.road_axis.perp()
    }

    pub fn lateral(&self, p: Vec2) -> f64 {
        (p - self.origin).dot(self.normal())
    }

    pub fn longitudinal(&self, p: Vec2) -> f64 {
        (p - self.origin).dot(self.road_axis)
    }

    pub fn point(&self, longitudinal: f64, lateral: f64) -> Vec2 {
        self.origin + self.road_axis * longitudinal + self.normal() * lateral
    }

    pub fn half_width(&self) -> f64 {
        self.road_width / 2.0
    }

    fn bands(&self, side: Side) -> &[SideBand] {
        match side {
            Side::Left => &self.left_bands,
            Side::Right => &self.right_bands,
        }
    }

    /// Unsigned lateral distance from the centreline to the inner edge of
    /// the sidewalk on `side`.
    pub fn kerb_offset(&self, side: Side) -> f64 {
        self.half_width() + self.bands(side).iter().map(|b| b.width).sum::<f64>()
    }

    pub fn side_of(&self, p: Vec2) -> Option<Side> {
        let y = self.lateral(p);
        if y > 0.0 {
            Some(Side::Left)
        } else if y < 0.0 {
            Some(Side::Right)
        } else {
            None
        }
    }

    /// Band lookup by signed lateral offset. A point exactly on a boundary
    /// belongs to the band nearer the centreline. Points outside the mapped
    /// area are reported as sidewalk.
    pub fn lane_type_at(&self, p: Vec2) -> LaneType {
        let s = self.longitudinal(p);
        if !(0.0..=self.world_length).contains(&s) {
            return LaneType::Sidewalk;
        }
        let y = self.lateral(p);
        let a = y.abs();
        let mut edge = self.half_width();
        if a <= edge {
            return LaneType::Driving;
        }
        let side = if y > 0.0 { Side::Left } else { Side::Right };
        for band in self.bands(side) {
            edge += band.width;
            if a <= edge {
                return band.lane_type;
            }
        }
        LaneType::Sidewalk
    }

    /// Signed lateral offset of a driving-lane centreline.
    pub fn lane_centre_offset(&self, lane: usize) -> f64 {
        -self.half_width() + self.lane_width * (lane as f64 + 0.5)
    }

    /// Index of the lane band containing `p`, if on the carriageway.
    pub fn lane_index_at(&self, p: Vec2) -> Option<usize> {
        if self.lane_type_at(p) != LaneType::Driving {
            return None;
        }
        let y = self.lateral(p) + self.half_width();
        let idx = (y / self.lane_width).floor().max(0.0) as usize;
        Some(idx.min(self.n_driving_lanes - 1))
    }

    /// Travel direction of a lane.
    pub fn lane_direction(&self, lane: usize) -> Vec2 {
        if self.lane_centre_offset(lane) <= 0.0 {
            self.road_axis
        } else {
            -self.road_axis
        }
    }

    /// Orthogonal projection onto the nearest driving-lane centreline; ties go
    /// to the lower lane index. The returned forward is always `road_axis`.
    pub fn nearest_road_waypoint(&self, p: Vec2) -> (Vec2, Vec2) {
        let y = self.lateral(p);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for lane in 0..self.n_driving_lanes {
            let d = (y - self.lane_centre_offset(lane)).abs();
            if d < best_d {
                best = lane;
                best_d = d;
            }
        }
        let waypoint = self.point(self.longitudinal(p), self.lane_centre_offset(best));
        (waypoint, self.road_axis)
    }

    /// Unit vector perpendicular to the road forward, pointing from the
    /// pedestrian's side toward the opposite sidewalk. On the centreline the
    /// direction leads away from `spawn_side`.
    pub fn crossing_vector(&self, p: Vec2, spawn_side: Side) -> Vec2 {
        let (_, forward) = self.nearest_road_waypoint(p);
        let n = forward.perp();
        let side = self.side_of(p).unwrap_or(spawn_side);
        n * -side.sign()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DrivingProfile {
    Aggressive,
    Normal,
    Cautious,
}

impl DrivingProfile {
    /// TTC below which the vehicle yields to a pedestrian in its lane.
    pub fn yield_ttc(self) -> f64 {
        match self {
            DrivingProfile::Cautious => 4.0,
            DrivingProfile::Normal => 2.5,
            DrivingProfile::Aggressive => 1.2,
        }
    }

    /// Target-speed band in m/s.
    pub fn speed_band(self) -> (f64, f64) {
        match self {
            DrivingProfile::Aggressive => (12.0, 16.0),
            DrivingProfile::Normal => (8.0, 12.0),
            DrivingProfile::Cautious => (5.0, 8.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    /// (length / 2, width / 2) in metres.
    pub half_extents: Vec2,
    pub profile: DrivingProfile,
    pub is_ego: bool,
    pub target_speed: f64,
    pub lane: usize,
}

impl Vehicle {
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Camera pose for the ego vehicle.
    pub fn pose(&self, world: &RoadWorld) -> EgoPose {
        EgoPose {
            position: self.position,
            forward: world.lane_direction(self.lane),
            camera_height: CAMERA_HEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    pub position: Vec2,
    pub forward: Vec2,
    pub camera_height: f64,
}

/// Distance ahead to the nearest pedestrian this vehicle has to yield to:
/// one on a driving lane inside the vehicle's lane band, either closer
/// than the standoff or under the profile's yield TTC.
pub fn yield_distance(vehicle: &Vehicle, pedestrians: &[Vec2], world: &RoadWorld) -> Option<f64> {
    let dir = world.lane_direction(vehicle.lane);
    let lane_y = world.lane_centre_offset(vehicle.lane);
    pedestrians
        .iter()
        .filter(|&&p| world.lane_type_at(p) == LaneType::Driving)
        .filter(|&&p| (world.lateral(p) - lane_y).abs() <= world.lane_width / 2.0)
        .filter_map(|&p| {
            let ahead = (p - vehicle.position).dot(dir);
            let yields = ahead > 0.0 && (ahead < STANDOFF_DISTANCE || ttc(p, vehicle) < vehicle.profile.yield_ttc());
            yields.then_some(ahead)
        })
        .min_by(f64::total_cmp)
}

pub fn must_yield(vehicle: &Vehicle, pedestrians: &[Vec2], world: &RoadWorld) -> bool {
    yield_distance(vehicle, pedestrians, world).is_some()
}

/// Lane-following kinematics. When yielding, the vehicle decelerates just
/// hard enough to stop at the standoff distance (capped by the brake
/// limit), and brakes fully once inside it.
pub fn step_vehicle(vehicle: &Vehicle, pedestrians: &[Vec2], world: &RoadWorld, dt: f64) -> Vehicle {
    let dir = world.lane_direction(vehicle.lane);
    let speed = vehicle.speed();
    let target = vehicle.target_speed.clamp(0.0, MAX_VEHICLE_SPEED);
    let new_speed = match yield_distance(vehicle, pedestrians, world) {
        Some(ahead) => {
            let room = ahead - STANDOFF_DISTANCE;
            let decel = if room <= 0.0 {
                BRAKE_LIMIT
            } else {
                (speed * speed / (2.0 * room)).min(BRAKE_LIMIT)
            };
            (speed - decel * dt).max(0.0)
        }
        None if speed < target => (speed + ACCEL_LIMIT * dt).min(target),
        None => (speed - BRAKE_LIMIT * dt).max(target),
    };
    let velocity = dir * new_speed;
    Vehicle {
        position: vehicle.position + velocity * dt,
        velocity,
        ..vehicle.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DT;

    fn town_a() -> RoadWorld {
        build_world("town_a").unwrap()
    }

    fn vehicle(profile: DrivingProfile, speed: f64) -> Vehicle {
        Vehicle {
            id: 1,
            position: Vec2::new(50.0, -1.75),
            velocity: Vec2::new(speed, 0.0),
            half_extents: Vec2::new(2.3, 0.95),
            profile,
            is_ego: false,
            target_speed: speed,
            lane: 0,
        }
    }

    #[test]
    fn templates_have_expected_widths() {
        let a = town_a();
        assert_eq!(a.n_driving_lanes, 2);
        assert_eq!(a.road_width, 7.0);
        assert_eq!(build_world("town_e").unwrap().road_width, 21.0);
        assert_eq!(build_world("town_b").unwrap().road_width, 14.0);
        for t in TEMPLATES {
            let w = build_world(t).unwrap();
            assert_eq!(w.lane_width, 3.5);
            assert_eq!(w.road_width, w.n_driving_lanes as f64 * w.lane_width);
            assert!((w.road_axis.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_template_is_config_error() {
        assert!(matches!(build_world("town_z"), Err(Error::Config(_))));
    }

    #[test]
    fn alias_names_resolve() {
        assert_eq!(build_world("Town01").unwrap(), town_a());
    }

    #[test]
    fn lane_typing() {
        let w = town_a();
        assert_eq!(w.lane_type_at(w.point(10.0, 0.0)), LaneType::Driving);
        assert_eq!(w.lane_type_at(w.point(10.0, 4.5)), LaneType::Sidewalk);
        assert_eq!(w.lane_type_at(w.point(10.0, -4.5)), LaneType::Sidewalk);
        // boundary belongs to the roadward band
        assert_eq!(w.lane_type_at(w.point(10.0, 3.5)), LaneType::Driving);
        assert_eq!(w.lane_type_at(w.point(10.0, -3.5)), LaneType::Driving);
        let c = build_world("town_c").unwrap();
        assert_eq!(c.lane_type_at(c.point(10.0, 4.0)), LaneType::Parking);
        assert_eq!(c.lane_type_at(c.point(10.0, 6.0)), LaneType::Parking);
        assert_eq!(c.lane_type_at(c.point(10.0, 6.01)), LaneType::Sidewalk);
        assert_eq!(c.lane_type_at(c.point(10.0, -4.0)), LaneType::Sidewalk);
        // off the mapped segment
        assert_eq!(w.lane_type_at(w.point(-5.0, 0.0)), LaneType::Sidewalk);
    }

    #[test]
    fn lateral_sweep_changes_only_at_boundaries() {
        for t in TEMPLATES {
            let w = build_world(t).unwrap();
            let mut boundaries = vec![w.half_width(), -w.half_width()];
            boundaries.push(w.kerb_offset(Side::Left));
            boundaries.push(-w.kerb_offset(Side::Right));
            let mut prev = w.lane_type_at(w.point(50.0, -20.0));
            for i in 1..=4000 {
                let y = -20.0 + i as f64 * 0.01;
                let cur = w.lane_type_at(w.point(50.0, y));
                if cur != prev {
                    let prev_y = y - 0.01;
                    assert!(
                        boundaries.iter().any(|&b| b >= prev_y - 1e-9 && b <= y + 1e-9),
                        "{t}: change {prev:?}->{cur:?} at {y}"
                    );
                }
                prev = cur;
            }
        }
    }

    #[test]
    fn waypoint_projection() {
        let w = town_a();
        let (wp, fwd) = w.nearest_road_waypoint(w.point(20.0, -5.0));
        assert!((wp - w.point(20.0, -1.75)).norm() < 1e-12);
        assert_eq!(fwd, w.road_axis);
        let on = w.point(33.0, 1.75);
        assert!((w.nearest_road_waypoint(on).0 - on).norm() < 1e-12);
        // equidistant from both centrelines: lower index
        let (tie, _) = w.nearest_road_waypoint(w.point(5.0, 0.0));
        assert!((w.lateral(tie) - w.lane_centre_offset(0)).abs() < 1e-12);
    }

    #[test]
    fn crossing_vector_examples() {
        let w = town_a();
        let c = w.crossing_vector(w.point(10.0, -5.0), Side::Right);
        assert!((c - Vec2::new(0.0, 1.0)).norm() < 1e-12);

        let mut rotated = town_a();
        rotated.road_axis = Vec2::new(0.0, 1.0);
        let c = rotated.crossing_vector(Vec2::new(5.0, 10.0), Side::Right);
        assert!((c - Vec2::new(-1.0, 0.0)).norm() < 1e-12);

        // centreline: away from spawn side
        let c = w.crossing_vector(w.point(10.0, 0.0), Side::Left);
        assert!((c - Vec2::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn uniform_motion_without_pedestrians() {
        let w = town_a();
        let v = vehicle(DrivingProfile::Normal, 10.0);
        let next = step_vehicle(&v, &[], &w, DT);
        assert!((next.position.x - (50.0 + 10.0 * DT)).abs() < 1e-12);
        assert!((next.speed() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn yield_thresholds_by_profile() {
        let w = town_a();
        // pedestrian 20 m ahead in lane, vehicle at 10 m/s -> TTC 2.0 s
        let ped = [Vec2::new(70.0, -1.75)];
        let cautious = step_vehicle(&vehicle(DrivingProfile::Cautious, 10.0), &ped, &w, DT);
        assert!(cautious.speed() < 10.0);
        let aggressive = step_vehicle(&vehicle(DrivingProfile::Aggressive, 10.0), &ped, &w, DT);
        assert!((aggressive.speed() - 10.0).abs() < 1e-12);
        // pedestrian on the sidewalk is ignored
        let side = [Vec2::new(70.0, -4.5)];
        let c = step_vehicle(&vehicle(DrivingProfile::Cautious, 10.0), &side, &w, DT);
        assert!((c.speed() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn accelerates_toward_target_within_limits() {
        let w = town_a();
        let mut v = vehicle(DrivingProfile::Normal, 0.0);
        v.target_speed = 11.0;
        v.velocity = Vec2::ZERO;
        let mut prev = 0.0;
        for _ in 0..300 {
            v = step_vehicle(&v, &[], &w, DT);
            let s = v.speed();
            assert!(s >= 0.0 && s <= v.target_speed + 1e-6);
            assert!((s - prev).abs() <= BRAKE_LIMIT.max(ACCEL_LIMIT) * DT + 1e-12);
            prev = s;
        }
        assert!((prev - 11.0).abs() < 1e-9);
    }

    #[test]
    fn builds_are_identical() {
        for t in TEMPLATES {
            assert_eq!(build_world(t).unwrap(), build_world(t).unwrap());
        }
    }
}
