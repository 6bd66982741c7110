//! Pedestrian behaviour: archetypes, speed profiles, the state machine and
//! group synchronisation.

mod archetype;
mod fsm;
mod group;
mod pedestrian;
mod state;

pub use archetype::{
    sample_archetype, sample_speed_profile, Archetype, ArchetypeDraw, ArchetypeName, SpeedProfile,
    ARCHETYPES,
};
pub use fsm::{enter_state, fsm_step, FsmContext, FsmParams};
pub use group::{group_sync, GroupTracker, MAX_FOLLOWER_JITTER_TICKS};
pub use pedestrian::{BehaviourType, Pedestrian, PedestrianInit, Role};
pub use state::{allowed_transitions, is_transition_allowed, BehaviourState, TransitionEvent};
