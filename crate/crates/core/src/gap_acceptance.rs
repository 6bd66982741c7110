//! Time-to-collision, the gap-acceptance test, in-crossing hazard checks,
//! retreat and patience handling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behaviour::Pedestrian;
use crate::geom::Vec2;
use crate::rng::SimRng;
use crate::world::{RoadWorld, Vehicle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    /// How far a pedestrian takes vehicles into account, m.
    pub sensor_range: f64,
    pub safety_radius: f64,
    pub lookahead: [f64; 3],
    pub prediction_horizon: f64,
    pub retreat_probability: f64,
    pub retreat_window: f64,
    pub decision_window: (f64, f64),
    /// Share of patience expiries that force a sudden crossing.
    pub force_sudden_probability: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        GapParams {
            sensor_range: 50.0,
            safety_radius: 3.0,
            lookahead: [0.5, 1.5, 2.5],
            prediction_horizon: 0.5,
            retreat_probability: 0.15,
            retreat_window: 0.4,
            decision_window: (10.0, 40.0),
            force_sudden_probability: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtcResult {
    pub value: f64,
    /// -1 when no vehicle qualifies.
    pub vehicle_id: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatienceOutcome {
    KeepWaiting,
    Abandon,
    ForceSudden,
}

/// Projected closing speed of `vehicle` toward `p`, and the separation.
pub fn closing_speed(p: Vec2, vehicle: &Vehicle) -> (f64, f64) {
    let d = p - vehicle.position;
    let dist = d.norm();
    match d.normalized() {
        Some(dir) => (vehicle.velocity.dot(dir), dist),
        None => (0.0, 0.0),
    }
}

/// Distance over closing speed when closing, otherwise infinity. Coincident
/// positions count as an immediate collision.
pub fn ttc(p: Vec2, vehicle: &Vehicle) -> f64 {
    let (v_close, dist) = closing_speed(p, vehicle);
    if dist == 0.0 {
        return 0.0;
    }
    if v_close > 0.0 {
        dist / v_close
    } else {
        f64::INFINITY
    }
}

pub fn min_ttc(p: Vec2, vehicles: &[Vehicle], sensor_range: f64) -> TtcResult {
    let mut best = TtcResult {
        value: f64::INFINITY,
        vehicle_id: -1,
    };
    for v in vehicles {
        if p.distance(v.position) > sensor_range {
            continue;
        }
        let t = ttc(p, v);
        if t < best.value {
            best = TtcResult {
                value: t,
                vehicle_id: i64::from(v.id),
            };
        }
    }
    best
}

/// Right-hand side of the gap test: threshold + buffer + traversal time.
pub fn required_gap(tau_ttc: f64, delta_safety: f64, road_width: f64, crossing_speed: f64) -> f64 {
    if crossing_speed <= 0.0 {
        return f64::INFINITY;
    }
    tau_ttc + delta_safety + road_width / crossing_speed
}

/// Strict gap test on an already computed minimum TTC.
pub fn gap_accepted_for(min_ttc: f64, required: f64) -> bool {
    required.is_finite() && min_ttc > required
}

/// Crossing speed the pedestrian would use if it stepped out now.
pub fn prospective_crossing_speed(ped: &Pedestrian) -> f64 {
    ped.base_speed * ped.speed_profile.multiplier()
}

pub fn gap_accepted(ped: &Pedestrian, vehicles: &[Vehicle], world: &RoadWorld, params: &GapParams) -> bool {
    let s_cross = prospective_crossing_speed(ped);
    let required = required_gap(
        ped.archetype.tau_ttc,
        ped.archetype.delta_safety,
        world.road_width,
        s_cross,
    );
    gap_accepted_for(min_ttc(ped.position, vehicles, params.sensor_range).value, required)
}

/// Probe points for the in-crossing proximity check.
pub fn hazard_probe_points(ped: &Pedestrian, params: &GapParams) -> Vec<Vec2> {
    let c = ped.crossing_vector.unwrap_or(Vec2::ZERO);
    let mut pts: Vec<Vec2> = params
        .lookahead
        .iter()
        .map(|&a| ped.position + c * a)
        .collect();
    pts.push(ped.position + ped.velocity * params.prediction_horizon);
    pts
}

pub fn in_crossing_hazard_with_radius(
    ped: &Pedestrian,
    vehicles: &[Vehicle],
    params: &GapParams,
    radius: f64,
) -> bool {
    let pts = hazard_probe_points(ped, params);
    vehicles
        .iter()
        .any(|v| pts.iter().any(|&p| p.distance(v.position) < radius))
}

pub fn in_crossing_hazard(ped: &Pedestrian, vehicles: &[Vehicle], params: &GapParams) -> bool {
    in_crossing_hazard_with_radius(ped, vehicles, params, params.safety_radius)
}

/// Retreat draw after a hazard. Consumes one variate regardless of outcome.
pub fn maybe_retreat(ped: &Pedestrian, rng: &mut SimRng, params: &GapParams) -> bool {
    let u: f64 = rng.random();
    ped.crossing_progress < params.retreat_window && u < params.retreat_probability
}

/// Advances the waiting timer; at expiry picks abandon or a forced sudden
/// crossing. Consumes one variate per call.
pub fn update_patience(ped: &mut Pedestrian, dt: f64, rng: &mut SimRng, params: &GapParams) -> PatienceOutcome {
    let u: f64 = rng.random();
    ped.wait_timer += dt;
    if ped.wait_timer < ped.archetype.patience_cap {
        PatienceOutcome::KeepWaiting
    } else if u < params.force_sudden_probability {
        PatienceOutcome::ForceSudden
    } else {
        PatienceOutcome::Abandon
    }
}

pub fn in_decision_window(ped: &Pedestrian, ego: &Vehicle, params: &GapParams) -> bool {
    let (v_close, dist) = closing_speed(ped.position, ego);
    let (lo, hi) = params.decision_window;
    (lo..=hi).contains(&dist) && v_close > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{Archetype, ArchetypeName, PedestrianInit, Role, SpeedProfile};
    use crate::rng::RngStream;
    use crate::world::{build_world, DrivingProfile, Side};

    fn veh(id: u32, q: Vec2, v: Vec2) -> Vehicle {
        Vehicle {
            id,
            position: q,
            velocity: v,
            half_extents: Vec2::new(2.3, 0.95),
            profile: DrivingProfile::Normal,
            is_ego: id == 0,
            target_speed: v.norm(),
            lane: 0,
        }
    }

    fn ped(p: Vec2) -> Pedestrian {
        Pedestrian::new(PedestrianInit {
            id: 1,
            position: p,
            height: 1.7,
            archetype: *Archetype::get(ArchetypeName::BusinessPerson),
            base_speed: 1.5,
            hesitation: 0.5,
            speed_profile: SpeedProfile::Normal,
            role: Role::PotentialCrosser,
            spawn_side: Side::Right,
            walk_dir: 1.0,
        })
    }

    #[test]
    fn ttc_examples() {
        let p = Vec2::ZERO;
        assert!((ttc(p, &veh(0, Vec2::new(-20.0, 0.0), Vec2::new(10.0, 0.0))) - 2.0).abs() < 1e-12);
        assert_eq!(ttc(p, &veh(0, Vec2::new(-20.0, 0.0), Vec2::new(-10.0, 0.0))), f64::INFINITY);
        assert_eq!(ttc(p, &veh(0, Vec2::new(0.0, -15.0), Vec2::new(10.0, 0.0))), f64::INFINITY);
        assert_eq!(ttc(p, &veh(0, p, Vec2::new(10.0, 0.0))), 0.0);
    }

    #[test]
    fn min_ttc_examples() {
        let p = Vec2::ZERO;
        let two = veh(1, Vec2::new(-20.0, 0.0), Vec2::new(10.0, 0.0));
        let five = veh(2, Vec2::new(50.0, 0.0), Vec2::new(-10.0, 0.0));
        let r = min_ttc(p, &[five.clone(), two.clone()], 60.0);
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(r.vehicle_id, 1);
        let none = min_ttc(p, &[two, five], 10.0);
        assert_eq!(none.value, f64::INFINITY);
        assert_eq!(none.vehicle_id, -1);
        // receding ego, approaching traffic vehicle
        let ego = veh(0, Vec2::new(-10.0, 0.0), Vec2::new(-8.0, 0.0));
        let other = veh(3, Vec2::new(30.0, 0.0), Vec2::new(-10.0, 0.0));
        let r = min_ttc(p, &[ego, other], 50.0);
        assert!((r.value - 3.0).abs() < 1e-12);
        assert_eq!(r.vehicle_id, 3);
    }

    #[test]
    fn required_gap_boundary_is_strict() {
        let req = required_gap(3.0, 0.5, 7.0, 1.4);
        assert!((req - 8.5).abs() < 1e-12);
        assert!(gap_accepted_for(10.0, req));
        assert!(!gap_accepted_for(req, req));
        assert!(gap_accepted_for(f64::INFINITY, req));
        assert!(!gap_accepted_for(f64::INFINITY, required_gap(3.0, 0.5, 7.0, 0.0)));
    }

    #[test]
    fn gap_test_uses_every_vehicle_in_range() {
        let w = build_world("town_a").unwrap();
        let p = ped(Vec2::new(0.0, -4.0));
        let params = GapParams::default();
        assert!(gap_accepted(&p, &[], &w, &params));
        let near = veh(5, Vec2::new(-20.0, -4.0), Vec2::new(10.0, 0.0));
        assert!(!gap_accepted(&p, &[near], &w, &params));
    }

    #[test]
    fn hazard_radius_examples() {
        let params = GapParams::default();
        let mut p = ped(Vec2::ZERO);
        p.crossing_vector = Some(Vec2::new(0.0, 1.0));
        // 2.9 m from the 1.5 m lookahead point
        let close = veh(0, Vec2::new(2.9, 1.5), Vec2::ZERO);
        assert!(in_crossing_hazard(&p, &[close], &params));
        // farther than 3 m from all four probes
        let far = veh(0, Vec2::new(3.1, 0.0), Vec2::ZERO);
        assert!(hazard_probe_points(&p, &params).iter().all(|q| q.distance(far.position) > 3.0));
        assert!(!in_crossing_hazard(&p, &[far], &params));
        assert!(!in_crossing_hazard(&p, &[], &params));
    }

    #[test]
    fn predicted_position_probe() {
        let params = GapParams::default();
        let mut p = ped(Vec2::ZERO);
        p.crossing_vector = Some(Vec2::new(0.0, 1.0));
        p.velocity = Vec2::new(8.0, 0.0);
        // only the 0.5 s prediction (4 m ahead along x) is near this vehicle
        let v = veh(0, Vec2::new(6.5, 0.0), Vec2::ZERO);
        assert!(in_crossing_hazard(&p, &[v], &params));
    }

    #[test]
    fn retreat_window_and_rate() {
        let params = GapParams::default();
        let mut rng = RngStream::root(11).rng();
        let mut p = ped(Vec2::ZERO);
        p.crossing_progress = 0.5;
        assert!((0..1000).all(|_| !maybe_retreat(&p, &mut rng, &params)));
        p.crossing_progress = 0.2;
        let n = 100_000;
        let hits = (0..n).filter(|_| maybe_retreat(&p, &mut rng, &params)).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.15).abs() < 0.005, "{rate}");
        p.crossing_progress = 0.0;
        assert!((0..1000).any(|_| maybe_retreat(&p, &mut rng, &params)));
    }

    #[test]
    fn patience_expiry_split() {
        let params = GapParams::default();
        let mut rng = RngStream::root(12).rng();
        let mut p = ped(Vec2::ZERO);
        p.archetype.patience_cap = 6.0;
        p.wait_timer = 5.0;
        assert_eq!(update_patience(&mut p, 0.1, &mut rng, &params), PatienceOutcome::KeepWaiting);
        let n = 100_000;
        let mut forced = 0;
        for _ in 0..n {
            p.wait_timer = 6.0;
            if update_patience(&mut p, 0.0, &mut rng, &params) == PatienceOutcome::ForceSudden {
                forced += 1;
            }
        }
        let rate = f64::from(forced) / f64::from(n);
        assert!((rate - 0.5).abs() < 0.01, "{rate}");
    }

    #[test]
    fn decision_window_examples() {
        let params = GapParams::default();
        let p = ped(Vec2::ZERO);
        let approaching = veh(0, Vec2::new(-25.0, 0.0), Vec2::new(10.0, 0.0));
        assert!(in_decision_window(&p, &approaching, &params));
        let far = veh(0, Vec2::new(-45.0, 0.0), Vec2::new(10.0, 0.0));
        assert!(!in_decision_window(&p, &far, &params));
        let receding = veh(0, Vec2::new(-25.0, 0.0), Vec2::new(-10.0, 0.0));
        assert!(!in_decision_window(&p, &receding, &params));
    }
}
