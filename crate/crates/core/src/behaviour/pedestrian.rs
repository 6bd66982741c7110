use serde::{Deserialize, Serialize};

use super::archetype::{Archetype, SpeedProfile};
use super::state::BehaviourState;
use crate::geom::Vec2;
use crate::world::{RoadWorld, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    PotentialCrosser,
    NonCrosser,
    MidRoadJaywalker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviourType {
    NormalCrossing,
    SuddenCrossing,
    Jaywalking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub height: f64,
    pub archetype: Archetype,
    pub base_speed: f64,
    /// Per-agent hesitation duration drawn from the archetype range.
    pub hesitation: f64,
    pub speed_profile: SpeedProfile,
    pub state: BehaviourState,
    /// Time spent in the current state.
    pub state_timer: f64,
    /// Planned duration of the current timed state.
    pub state_duration: f64,
    pub wait_timer: f64,
    pub crossing_vector: Option<Vec2>,
    pub crossing_progress: f64,
    pub role: Role,
    pub behaviour_type: Option<BehaviourType>,
    /// Archetype crossing check passed at spawn.
    pub intends_to_cross: bool,
    pub group_id: Option<u32>,
    pub is_group_leader: bool,
    /// Follower delay relative to the leader, ticks.
    pub sync_delay: u32,
    /// Follower still mirrors its leader.
    pub sync_locked: bool,
    pub spawn_side: Side,
    /// Side the current crossing started from.
    pub origin_side: Side,
    pub crossing_speed: f64,
    /// +1 or -1 along the road axis while walking the sidewalk.
    pub walk_dir: f64,
    /// Ego distance at which a sudden or jaywalking crosser steps out.
    pub trigger_distance: f64,
    /// Position was on a driving lane during the current crossing.
    pub entered_road: bool,
    /// A crossing attempt already ended (finished, retreated or abandoned).
    pub attempt_done: bool,
    /// State to resume after a mid-road pause.
    pub resume_state: Option<BehaviourState>,
    /// Remaining stop time of a distraction pause.
    pub distraction_pause: f64,
    pub heading: Vec2,
}

impl Pedestrian {
    /// Crossers that still intend to step onto the road, ignoring group
    /// locking.
    pub fn pending_crosser(&self) -> bool {
        self.role == Role::PotentialCrosser && self.intends_to_cross && !self.attempt_done
    }

    pub fn is_opportunistic(&self) -> bool {
        self.pending_crosser() && self.behaviour_type.is_none()
    }

    /// Fraction of the road width travelled from the origin kerb, clamped.
    pub fn positional_progress(&self, world: &RoadWorld) -> f64 {
        let y = world.lateral(self.position);
        let travelled = world.half_width() - self.origin_side.sign() * y;
        (travelled / world.road_width).clamp(0.0, 1.0)
    }

    pub fn is_follower(&self) -> bool {
        self.group_id.is_some() && !self.is_group_leader
    }
}

/// Initial attributes for a freshly spawned pedestrian.
#[derive(Debug, Clone)]
pub struct PedestrianInit {
    pub id: u32,
    pub position: Vec2,
    pub height: f64,
    pub archetype: Archetype,
    pub base_speed: f64,
    pub hesitation: f64,
    pub speed_profile: SpeedProfile,
    pub role: Role,
    pub spawn_side: Side,
    pub walk_dir: f64,
}

impl Pedestrian {
    pub fn new(init: PedestrianInit) -> Self {
        Pedestrian {
            id: init.id,
            position: init.position,
            velocity: Vec2::ZERO,
            height: init.height,
            archetype: init.archetype,
            base_speed: init.base_speed,
            hesitation: init.hesitation,
            speed_profile: init.speed_profile,
            state: BehaviourState::WalkingSidewalk,
            state_timer: 0.0,
            state_duration: 0.0,
            wait_timer: 0.0,
            crossing_vector: None,
            crossing_progress: 0.0,
            role: init.role,
            behaviour_type: None,
            intends_to_cross: false,
            group_id: None,
            is_group_leader: false,
            sync_delay: 0,
            sync_locked: false,
            spawn_side: init.spawn_side,
            origin_side: init.spawn_side,
            crossing_speed: 0.0,
            walk_dir: init.walk_dir,
            trigger_distance: 0.0,
            entered_road: false,
            attempt_done: false,
            resume_state: None,
            distraction_pause: 0.0,
            heading: Vec2::new(init.walk_dir, 0.0),
        }
    }
}
