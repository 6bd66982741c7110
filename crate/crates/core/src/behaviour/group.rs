use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::archetype::SpeedProfile;
use super::fsm::enter_state;
use super::pedestrian::Pedestrian;
use super::state::{is_transition_allowed, BehaviourState, TransitionEvent};
use crate::error::{Error, Result};
use crate::world::RoadWorld;

/// Upper bound of the per-follower delay behind the leader (0.5 s).
pub const MAX_FOLLOWER_JITTER_TICKS: u32 = 15;

/// Rolling record of the leader's recent states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTracker {
    pub group_id: u32,
    pub leader_id: u32,
    history: VecDeque<BehaviourState>,
}

impl GroupTracker {
    pub fn new(group_id: u32, leader_id: u32, initial: BehaviourState) -> Self {
        let mut history = VecDeque::with_capacity(MAX_FOLLOWER_JITTER_TICKS as usize + 1);
        history.push_back(initial);
        GroupTracker {
            group_id,
            leader_id,
            history,
        }
    }

    fn push(&mut self, state: BehaviourState) {
        if self.history.len() > MAX_FOLLOWER_JITTER_TICKS as usize {
            self.history.pop_front();
        }
        self.history.push_back(state);
    }

    /// Leader state `delay` ticks ago (or the oldest one known).
    pub fn delayed(&self, delay: u32) -> BehaviourState {
        let back = (delay as usize).min(self.history.len() - 1);
        self.history[self.history.len() - 1 - back]
    }
}

/// Followers replay the leader's state sequence with their own delay until
/// they have entered a crossing state; from then on they act independently.
/// Followers never start a crossing on their own.
pub fn group_sync(
    tracker: &mut GroupTracker,
    members: &mut [Pedestrian],
    world: &RoadWorld,
    tick: u32,
) -> Result<Vec<TransitionEvent>> {
    let leaders: Vec<usize> = (0..members.len()).filter(|&i| members[i].is_group_leader).collect();
    if leaders.len() != 1 || members.iter().any(|m| m.group_id != Some(tracker.group_id)) {
        return Err(Error::GroupConsistency {
            group_id: tracker.group_id,
            leaders: leaders.len(),
        });
    }
    let leader = members[leaders[0]].clone();
    tracker.push(leader.state);

    let mut events = Vec::new();
    for m in members.iter_mut().filter(|m| m.sync_locked) {
        let target = tracker.delayed(m.sync_delay);
        if target != m.state {
            if !is_transition_allowed(m.state, target) {
                return Err(Error::IllegalTransition {
                    ped_id: m.id,
                    from: m.state,
                    to: target,
                    tick,
                });
            }
            events.push(TransitionEvent {
                ped_id: m.id,
                from: m.state,
                to: target,
                tick,
                cause: "group_sync".to_string(),
                progress: m.crossing_progress,
            });
            enter_state(m, target, world, 0.0);
            if target.is_crossing() {
                m.sync_locked = false;
                m.attempt_done = false;
            }
        }
        if m.sync_locked {
            m.walk_dir = leader.walk_dir;
            // never faster than the follower itself could walk
            let cap = m.base_speed * SpeedProfile::MAX_MULTIPLIER;
            m.velocity = if m.state == leader.state {
                let v = leader.velocity;
                if v.norm() > cap {
                    v * (cap / v.norm())
                } else {
                    v
                }
            } else {
                crate::geom::Vec2::ZERO
            };
        }
    }
    Ok(events)
}
