//! Per-tick behavioural state machine.
//!
//! A tick first decides at most one transition from the start-of-tick
//! state (timers, traffic, position), applies the entry actions of the new
//! state, then integrates motion with the resulting state's velocity.
//! Decisions read only the previous-tick vehicle snapshot in the context.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::archetype::SpeedProfile;
use super::pedestrian::{BehaviourType, Pedestrian};
use super::state::{BehaviourState, TransitionEvent};
use crate::gap_acceptance::{
    gap_accepted, in_crossing_hazard, in_decision_window, maybe_retreat, min_ttc, update_patience,
    GapParams, PatienceOutcome,
};
use crate::geom::Vec2;
use crate::rng::SimRng;
use crate::world::{LaneType, RoadWorld, Vehicle};

use BehaviourState::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmParams {
    pub gap: GapParams,
    pub look_duration: (f64, f64),
    pub check_duration: (f64, f64),
    /// Walking time before a committed normal crosser starts looking around.
    pub committed_walk_delay: (f64, f64),
    /// Walking time before an opportunistic crosser starts looking around.
    pub opportunistic_walk: (f64, f64),
    /// Idle sidewalk walking between look-arounds.
    pub idle_walk: (f64, f64),
    /// Per-tick onset probability of distracted behaviour.
    pub distraction_rate: f64,
    pub distraction_duration: (f64, f64),
    /// Per-tick onset probability of a full stop while distracted.
    pub distraction_pause_rate: f64,
    pub distraction_pause: (f64, f64),
    pub run_multiplier: f64,
    pub run_speed_cap: f64,
    pub min_pause: f64,
    /// Distance past the kerb that counts as being back on a sidewalk.
    pub kerb_clearance: f64,
}

impl Default for FsmParams {
    fn default() -> Self {
        FsmParams {
            gap: GapParams::default(),
            look_duration: (0.5, 1.5),
            check_duration: (0.5, 1.5),
            committed_walk_delay: (0.0, 0.5),
            opportunistic_walk: (1.0, 3.0),
            idle_walk: (2.0, 6.0),
            distraction_rate: 0.02,
            distraction_duration: (3.0, 8.0),
            distraction_pause_rate: 0.02,
            distraction_pause: (1.0, 3.0),
            run_multiplier: 1.6,
            run_speed_cap: 4.0,
            min_pause: 0.5,
            kerb_clearance: 0.3,
        }
    }
}

impl FsmParams {
    pub fn running_speed(&self, crossing_speed: f64) -> f64 {
        (crossing_speed * self.run_multiplier).min(self.run_speed_cap)
    }
}

pub struct FsmContext<'a> {
    pub world: &'a RoadWorld,
    /// Previous-tick vehicle snapshot, ego included.
    pub vehicles: &'a [Vehicle],
    pub ego: &'a Vehicle,
    pub params: &'a FsmParams,
    pub tick: u32,
}

fn uniform(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

fn ego_triggered(ped: &Pedestrian, ctx: &FsmContext) -> bool {
    in_decision_window(ped, ctx.ego, &ctx.params.gap)
        && ped.position.distance(ctx.ego.position) <= ped.trigger_distance
}

/// The ego has passed the pedestrian or is no farther than the far edge
/// of the decision window.
fn ego_not_far(ped: &Pedestrian, ctx: &FsmContext) -> bool {
    let forward = ctx.world.lane_direction(ctx.ego.lane);
    let rel = ped.position - ctx.ego.position;
    rel.dot(forward) < 0.0 || rel.norm() <= ctx.params.gap.decision_window.1
}

/// Whether a pedestrian waiting at the kerb would step out now. Committed
/// normal crossers go when the ego enters the decision window, or on an
/// accepted gap unless the ego is still beyond it; opportunistic crossers
/// need an accepted gap.
fn ready_to_go(ped: &Pedestrian, ctx: &FsmContext) -> Option<&'static str> {
    let gap = || gap_accepted(ped, ctx.vehicles, ctx.world, &ctx.params.gap);
    if ped.behaviour_type == Some(BehaviourType::NormalCrossing) {
        if in_decision_window(ped, ctx.ego, &ctx.params.gap) {
            return Some("decision_window");
        }
        return (ego_not_far(ped, ctx) && gap()).then_some("gap_accepted");
    }
    gap().then_some("gap_accepted")
}

fn escape_feasible(ped: &Pedestrian, ctx: &FsmContext) -> bool {
    let remaining = (1.0 - ped.crossing_progress) * ctx.world.road_width;
    let t_escape = remaining / ctx.params.running_speed(ped.crossing_speed).max(1e-9);
    min_ttc(ped.position, ctx.vehicles, ctx.params.gap.sensor_range).value > t_escape
}

fn on_sidewalk_beyond(ped: &Pedestrian, world: &RoadWorld, side: crate::world::Side, clearance: f64) -> bool {
    let y = world.lateral(ped.position) * side.sign();
    y >= world.kerb_offset(side) + clearance
}

fn decide(ped: &mut Pedestrian, ctx: &FsmContext, rng: &mut SimRng, dt: f64) -> Option<(BehaviourState, &'static str)> {
    let p = ctx.params;
    match ped.state {
        WalkingSidewalk => {
            let u: f64 = rng.random();
            if ped.pending_crosser() {
                return match ped.behaviour_type {
                    Some(BehaviourType::SuddenCrossing) => {
                        ego_triggered(ped, ctx).then_some((SuddenCrossing, "random_trigger"))
                    }
                    Some(BehaviourType::Jaywalking) => {
                        ego_triggered(ped, ctx).then_some((Jaywalking, "position_trigger"))
                    }
                    _ => (ped.state_timer >= ped.state_duration)
                        .then_some((LookingAround, "crossing_trigger")),
                };
            }
            let rate = if ped.speed_profile == SpeedProfile::Distracted {
                p.distraction_rate
            } else {
                p.distraction_rate * (1.0 - ped.archetype.attention)
            };
            if u < rate {
                Some((DistractedBehavior, "archetype_probability"))
            } else if ped.state_timer >= ped.state_duration {
                Some((LookingAround, "timer"))
            } else {
                None
            }
        }
        LookingAround => {
            if ped.state_timer < ped.state_duration {
                return None;
            }
            let checks = ped.pending_crosser()
                && matches!(ped.behaviour_type, None | Some(BehaviourType::NormalCrossing));
            if checks {
                Some((CheckingTraffic, "attention_threshold"))
            } else {
                Some((WalkingSidewalk, "timer"))
            }
        }
        CheckingTraffic | Hesitating => {
            match update_patience(ped, dt, rng, &p.gap) {
                PatienceOutcome::Abandon => return Some((WalkingSidewalk, "patience_abandon")),
                PatienceOutcome::ForceSudden => return Some((SuddenCrossing, "patience_force")),
                PatienceOutcome::KeepWaiting => {}
            }
            if ped.state == CheckingTraffic {
                if ped.state_timer < ped.state_duration {
                    // a committed crosser goes as soon as the ego is in the window
                    let committed = ped.behaviour_type == Some(BehaviourType::NormalCrossing);
                    return (committed && in_decision_window(ped, ctx.ego, &p.gap))
                        .then_some((CrossingRoad, "decision_window"));
                }
                Some(ready_to_go(ped, ctx).map_or((Hesitating, "gap_rejected"), |c| (CrossingRoad, c)))
            } else {
                if ped.state_timer < ped.hesitation {
                    return None;
                }
                ready_to_go(ped, ctx).map(|c| (CrossingRoad, c))
            }
        }
        DistractedBehavior => {
            (ped.state_timer >= ped.state_duration).then_some((WalkingSidewalk, "timer"))
        }
        CrossingRoad | SuddenCrossing | Jaywalking | RunningAcross => {
            let lane = ctx.world.lane_type_at(ped.position);
            if ped.entered_road && lane != LaneType::Driving && ped.positional_progress(ctx.world) >= 1.0 {
                return Some((FinishedCrossing, "lane_exit"));
            }
            if ped.state == RunningAcross || !ped.entered_road {
                return None;
            }
            if !in_crossing_hazard(ped, ctx.vehicles, &p.gap) {
                return None;
            }
            if maybe_retreat(ped, rng, &p.gap) {
                Some((Retreat, "hazard_retreat"))
            } else if escape_feasible(ped, ctx) {
                Some((RunningAcross, "hazard_run"))
            } else {
                Some((PausingMidCross, "hazard_pause"))
            }
        }
        PausingMidCross => {
            if ped.state_timer < p.min_pause || in_crossing_hazard(ped, ctx.vehicles, &p.gap) {
                return None;
            }
            Some((ped.resume_state.unwrap_or(CrossingRoad), "hazard_cleared"))
        }
        FinishedCrossing => {
            let far = ped.origin_side.opposite();
            (ctx.world.lane_type_at(ped.position) == LaneType::Sidewalk
                && on_sidewalk_beyond(ped, ctx.world, far, p.kerb_clearance))
            .then_some((WalkingSidewalk, "sidewalk_reached"))
        }
        Retreat => on_sidewalk_beyond(ped, ctx.world, ped.origin_side, p.kerb_clearance)
            .then_some((WalkingSidewalk, "origin_regained")),
    }
}

/// Duration drawn for a timed state on entry.
pub(crate) fn sample_duration(ped: &Pedestrian, to: BehaviourState, params: &FsmParams, rng: &mut SimRng) -> f64 {
    match to {
        WalkingSidewalk => uniform(rng, params.idle_walk),
        LookingAround => uniform(rng, params.look_duration),
        CheckingTraffic => uniform(rng, params.check_duration),
        DistractedBehavior => uniform(rng, params.distraction_duration),
        Hesitating => ped.hesitation,
        _ => 0.0,
    }
}

/// Applies entry actions for `to`. `duration` seeds the state's timer.
pub fn enter_state(ped: &mut Pedestrian, to: BehaviourState, world: &RoadWorld, duration: f64) {
    let from = ped.state;
    ped.state = to;
    ped.state_timer = 0.0;
    ped.state_duration = duration;
    match to {
        WalkingSidewalk => {
            if matches!(from, FinishedCrossing | Retreat | CheckingTraffic | Hesitating) {
                ped.attempt_done = true;
            }
            ped.crossing_vector = None;
            ped.crossing_progress = 0.0;
            ped.entered_road = false;
            ped.wait_timer = 0.0;
            ped.resume_state = None;
            if let Some(side) = world.side_of(ped.position) {
                ped.origin_side = side;
            }
        }
        CheckingTraffic if from == LookingAround => ped.wait_timer = 0.0,
        CrossingRoad | SuddenCrossing | Jaywalking if from != PausingMidCross => {
            let side = world.side_of(ped.position).unwrap_or(ped.spawn_side);
            ped.origin_side = side;
            ped.crossing_vector = Some(world.crossing_vector(ped.position, ped.spawn_side));
            ped.crossing_speed = ped.base_speed * ped.speed_profile.multiplier();
            ped.entered_road = world.lane_type_at(ped.position) == LaneType::Driving;
            ped.crossing_progress = ped.positional_progress(world);
        }
        PausingMidCross => ped.resume_state = Some(from),
        FinishedCrossing => ped.crossing_progress = 0.0,
        _ => {}
    }
}

fn integrate(ped: &mut Pedestrian, ctx: &FsmContext, rng: &mut SimRng, dt: f64) {
    let world = ctx.world;
    let p = ctx.params;
    let along = world.road_axis * ped.walk_dir;
    let c = ped.crossing_vector.unwrap_or(Vec2::ZERO);
    let velocity = match ped.state {
        WalkingSidewalk | DistractedBehavior if ped.sync_locked => ped.velocity,
        WalkingSidewalk => along * (ped.base_speed * ped.speed_profile.multiplier()),
        DistractedBehavior => {
            let u: f64 = rng.random();
            if ped.distraction_pause > 0.0 {
                ped.distraction_pause = (ped.distraction_pause - dt).max(0.0);
                Vec2::ZERO
            } else if u < p.distraction_pause_rate {
                ped.distraction_pause = uniform(rng, p.distraction_pause);
                Vec2::ZERO
            } else {
                along * (ped.base_speed * SpeedProfile::Distracted.multiplier())
            }
        }
        LookingAround | CheckingTraffic | Hesitating | PausingMidCross => Vec2::ZERO,
        CrossingRoad | SuddenCrossing | Jaywalking | FinishedCrossing => c * ped.crossing_speed,
        RunningAcross => c * p.running_speed(ped.crossing_speed),
        Retreat => -c * ped.crossing_speed,
    };
    ped.velocity = velocity;
    ped.position += velocity * dt;
    if let Some(h) = velocity.normalized() {
        ped.heading = h;
    }
    // keep sidewalk walkers on the mapped segment
    if ped.state.is_sidewalk() {
        let s = world.longitudinal(ped.position);
        if (s < 1.0 && ped.walk_dir < 0.0) || (s > world.world_length - 1.0 && ped.walk_dir > 0.0) {
            ped.walk_dir = -ped.walk_dir;
        }
    }
    if ped.state.is_crossing() || ped.state == Retreat {
        ped.crossing_progress = ped.positional_progress(world);
        if ped.state.is_crossing() && world.lane_type_at(ped.position) == LaneType::Driving {
            ped.entered_road = true;
        }
    } else {
        ped.crossing_progress = 0.0;
    }
}

/// Advances one pedestrian by one tick.
pub fn fsm_step(
    ped: &Pedestrian,
    ctx: &FsmContext,
    rng: &mut SimRng,
    dt: f64,
) -> (Pedestrian, Option<TransitionEvent>) {
    let mut next = ped.clone();
    next.state_timer += dt;
    let decision = if next.sync_locked {
        None
    } else {
        decide(&mut next, ctx, rng, dt)
    };
    let event = decision.map(|(to, cause)| {
        let ev = TransitionEvent {
            ped_id: next.id,
            from: next.state,
            to,
            tick: ctx.tick,
            cause: cause.to_string(),
            progress: next.crossing_progress,
        };
        let duration = sample_duration(&next, to, ctx.params, rng);
        enter_state(&mut next, to, ctx.world, duration);
        ev
    });
    integrate(&mut next, ctx, rng, dt);
    (next, event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{Archetype, ArchetypeName, PedestrianInit, Role};
    use crate::rng::RngStream;
    use crate::world::{build_world, DrivingProfile, Side};

    const DT: f64 = 1.0 / 30.0;

    fn kerbside(world: &RoadWorld, s: f64) -> Pedestrian {
        let side = Side::Right;
        let mut p = Pedestrian::new(PedestrianInit {
            id: 1,
            position: world.point(s, side.sign() * (world.kerb_offset(side) + 0.5)),
            height: 1.7,
            archetype: *Archetype::get(ArchetypeName::CasualPerson),
            base_speed: 1.3,
            hesitation: 1.0,
            speed_profile: SpeedProfile::Normal,
            role: Role::PotentialCrosser,
            spawn_side: side,
            walk_dir: 1.0,
        });
        p.intends_to_cross = true;
        p
    }

    fn car(world: &RoadWorld, id: u32, s: f64, speed: f64) -> Vehicle {
        Vehicle {
            id,
            position: world.point(s, world.lane_centre_offset(0)),
            velocity: world.lane_direction(0) * speed,
            half_extents: Vec2::new(2.3, 0.95),
            profile: DrivingProfile::Normal,
            is_ego: id == 0,
            target_speed: speed,
            lane: 0,
        }
    }

    fn step(p: &Pedestrian, world: &RoadWorld, vehicles: &[Vehicle], seed: u64) -> (Pedestrian, Option<TransitionEvent>) {
        let params = FsmParams::default();
        let ctx = FsmContext {
            world,
            vehicles,
            ego: &vehicles[0],
            params: &params,
            tick: 0,
        };
        fsm_step(p, &ctx, &mut RngStream::root(seed).rng(), DT)
    }

    /// Lane 0 runs along +x in town_a; the ego is placed relative to that.
    fn forward_sign(world: &RoadWorld) -> f64 {
        world.lane_direction(0).dot(world.road_axis)
    }

    fn checking(world: &RoadWorld, s: f64) -> Pedestrian {
        let mut p = kerbside(world, s);
        enter_state(&mut p, CheckingTraffic, world, 1.0);
        p.state_timer = 1.0;
        p
    }

    #[test]
    fn opportunistic_checker_rejects_short_gap() {
        let w = build_world("town_a").unwrap();
        let f = forward_sign(&w);
        let p = checking(&w, 100.0);
        // 15 m upstream at 10 m/s is a ~1.5 s gap
        let vs = [car(&w, 0, 100.0 - f * 15.0, 10.0)];
        let (n, ev) = step(&p, &w, &vs, 1);
        assert_eq!(n.state, Hesitating);
        assert_eq!(ev.unwrap().cause, "gap_rejected");
    }

    #[test]
    fn opportunistic_checker_accepts_clear_road() {
        let w = build_world("town_a").unwrap();
        let f = forward_sign(&w);
        let p = checking(&w, 100.0);
        // ego already past and driving away
        let vs = [car(&w, 0, 100.0 + f * 20.0, 10.0)];
        let (n, ev) = step(&p, &w, &vs, 1);
        assert_eq!(n.state, CrossingRoad);
        assert_eq!(ev.unwrap().cause, "gap_accepted");
        assert!(n.crossing_vector.is_some());
    }

    #[test]
    fn committed_checker_goes_when_ego_in_window() {
        let w = build_world("town_a").unwrap();
        let f = forward_sign(&w);
        let mut p = checking(&w, 100.0);
        p.behaviour_type = Some(BehaviourType::NormalCrossing);
        p.state_timer = 0.1;
        let vs = [car(&w, 0, 100.0 - f * 25.0, 8.0)];
        let (n, ev) = step(&p, &w, &vs, 1);
        assert_eq!(n.state, CrossingRoad);
        assert_eq!(ev.unwrap().cause, "decision_window");
        // still far: keep checking until the timer runs out
        let vs = [car(&w, 0, 100.0 - f * 60.0, 8.0)];
        let (n, ev) = step(&p, &w, &vs, 1);
        assert_eq!(n.state, CheckingTraffic);
        assert!(ev.is_none());
    }

    #[test]
    fn sudden_crosser_skips_checking() {
        let w = build_world("town_a").unwrap();
        let f = forward_sign(&w);
        let mut p = kerbside(&w, 100.0);
        p.behaviour_type = Some(BehaviourType::SuddenCrossing);
        p.trigger_distance = 30.0;
        let far = [car(&w, 0, 100.0 - f * 39.0, 8.0)];
        assert_eq!(step(&p, &w, &far, 1).0.state, WalkingSidewalk);
        let near = [car(&w, 0, 100.0 - f * 25.0, 8.0)];
        let (n, ev) = step(&p, &w, &near, 1);
        assert_eq!(n.state, SuddenCrossing);
        assert_eq!(ev.unwrap().cause, "random_trigger");
    }

    #[test]
    fn non_crosser_looks_then_walks_on() {
        let w = build_world("town_a").unwrap();
        let mut p = kerbside(&w, 100.0);
        p.role = Role::NonCrosser;
        p.intends_to_cross = false;
        enter_state(&mut p, LookingAround, &w, 0.5);
        p.state_timer = 0.5;
        let vs = [car(&w, 0, 10.0, 8.0)];
        assert_eq!(step(&p, &w, &vs, 1).0.state, WalkingSidewalk);
    }

    fn on_road(world: &RoadWorld, progress: f64) -> Pedestrian {
        let mut p = kerbside(world, 100.0);
        p.behaviour_type = Some(BehaviourType::NormalCrossing);
        enter_state(&mut p, CrossingRoad, world, 0.0);
        let lateral = Side::Right.sign() * (world.half_width() - progress * world.road_width);
        p.position = world.point(100.0, lateral);
        p.entered_road = true;
        p.crossing_progress = p.positional_progress(world);
        p
    }

    /// Slow vehicle 2 m from the pedestrian.
    fn blocker(world: &RoadWorld, p: &Pedestrian) -> Vehicle {
        Vehicle {
            position: p.position + world.road_axis * 2.0,
            ..car(world, 1, 0.0, 0.5)
        }
    }

    #[test]
    fn late_hazard_never_retreats() {
        let w = build_world("town_a").unwrap();
        let p = on_road(&w, 0.6);
        for seed in 0..300 {
            let vs = [car(&w, 0, 10.0, 8.0), blocker(&w, &p)];
            let (n, ev) = step(&p, &w, &vs, seed);
            let ev = ev.expect("hazard forces a reaction");
            assert_ne!(n.state, Retreat);
            assert!(matches!(ev.cause.as_str(), "hazard_run" | "hazard_pause"));
        }
    }

    #[test]
    fn early_hazard_sometimes_retreats() {
        let w = build_world("town_a").unwrap();
        let p = on_road(&w, 0.2);
        let retreats = (0..400)
            .filter(|&seed| {
                let vs = [car(&w, 0, 10.0, 8.0), blocker(&w, &p)];
                step(&p, &w, &vs, seed).0.state == Retreat
            })
            .count();
        assert!(retreats > 20 && retreats < 120, "{retreats}");
    }

    #[test]
    fn locked_follower_takes_no_decision() {
        let w = build_world("town_a").unwrap();
        let mut p = checking(&w, 100.0);
        p.sync_locked = true;
        let vs = [car(&w, 0, 10.0, 8.0)];
        let (n, ev) = step(&p, &w, &vs, 1);
        assert!(ev.is_none());
        assert_eq!(n.state, CheckingTraffic);
    }

    #[test]
    fn crossing_ends_on_far_sidewalk() {
        let w = build_world("town_a").unwrap();
        let vs = [car(&w, 0, 10.0, 8.0)];
        let mut p = on_road(&w, 0.5);
        let mut states = vec![p.state];
        for t in 0..600 {
            let (n, ev) = step(&p, &w, &vs, t);
            if ev.is_some() {
                states.push(n.state);
            }
            p = n;
            if p.state == WalkingSidewalk {
                break;
            }
        }
        assert_eq!(states, vec![CrossingRoad, FinishedCrossing, WalkingSidewalk]);
        assert_eq!(w.side_of(p.position), Some(Side::Left));
        assert!(p.attempt_done);
    }

    #[test]
    fn running_speed_is_capped() {
        let p = FsmParams::default();
        assert!((p.running_speed(1.5) - 2.4).abs() < 1e-12);
        assert_eq!(p.running_speed(3.0), 4.0);
    }
}
