use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BehaviourState {
    WalkingSidewalk,
    LookingAround,
    CheckingTraffic,
    Hesitating,
    CrossingRoad,
    SuddenCrossing,
    Jaywalking,
    RunningAcross,
    PausingMidCross,
    DistractedBehavior,
    FinishedCrossing,
    Retreat,
}

use BehaviourState::*;

impl BehaviourState {
    pub const ALL: [BehaviourState; 12] = [
        WalkingSidewalk,
        LookingAround,
        CheckingTraffic,
        Hesitating,
        CrossingRoad,
        SuddenCrossing,
        Jaywalking,
        RunningAcross,
        PausingMidCross,
        DistractedBehavior,
        FinishedCrossing,
        Retreat,
    ];

    /// States whose occupancy on a driving lane yields a crossing label.
    pub fn is_crossing(self) -> bool {
        matches!(
            self,
            CrossingRoad | SuddenCrossing | Jaywalking | RunningAcross | PausingMidCross
        )
    }

    pub fn is_sidewalk(self) -> bool {
        matches!(
            self,
            WalkingSidewalk | LookingAround | CheckingTraffic | Hesitating | DistractedBehavior
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WalkingSidewalk => "WALKING_SIDEWALK",
            LookingAround => "LOOKING_AROUND",
            CheckingTraffic => "CHECKING_TRAFFIC",
            Hesitating => "HESITATING",
            CrossingRoad => "CROSSING_ROAD",
            SuddenCrossing => "SUDDEN_CROSSING",
            Jaywalking => "JAYWALKING",
            RunningAcross => "RUNNING_ACROSS",
            PausingMidCross => "PAUSING_MID_CROSS",
            DistractedBehavior => "DISTRACTED_BEHAVIOR",
            FinishedCrossing => "FINISHED_CROSSING",
            Retreat => "RETREAT",
        }
    }
}

/// The registered transition graph.
pub fn allowed_transitions(state: BehaviourState) -> &'static [BehaviourState] {
    match state {
        WalkingSidewalk => &[LookingAround, DistractedBehavior, SuddenCrossing, Jaywalking],
        LookingAround => &[WalkingSidewalk, CheckingTraffic, DistractedBehavior],
        CheckingTraffic => &[Hesitating, CrossingRoad, WalkingSidewalk, SuddenCrossing],
        Hesitating => &[CrossingRoad, WalkingSidewalk, SuddenCrossing],
        CrossingRoad | SuddenCrossing | Jaywalking => {
            &[RunningAcross, PausingMidCross, Retreat, FinishedCrossing]
        }
        RunningAcross => &[FinishedCrossing],
        PausingMidCross => &[CrossingRoad, SuddenCrossing, Jaywalking, RunningAcross],
        DistractedBehavior => &[WalkingSidewalk],
        FinishedCrossing => &[WalkingSidewalk],
        Retreat => &[WalkingSidewalk],
    }
}

pub fn is_transition_allowed(from: BehaviourState, to: BehaviourState) -> bool {
    allowed_transitions(from).contains(&to)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub ped_id: u32,
    pub from: BehaviourState,
    pub to: BehaviourState,
    pub tick: u32,
    pub cause: String,
    /// Crossing progress at the triggering tick.
    pub progress: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_subset_is_exactly_five_states() {
        let subset: Vec<_> = BehaviourState::ALL.into_iter().filter(|s| s.is_crossing()).collect();
        assert_eq!(
            subset,
            vec![CrossingRoad, SuddenCrossing, Jaywalking, RunningAcross, PausingMidCross]
        );
    }

    #[test]
    fn published_adjacency_examples() {
        assert_eq!(allowed_transitions(FinishedCrossing), &[WalkingSidewalk]);
        let mut sudden = allowed_transitions(SuddenCrossing).to_vec();
        sudden.sort();
        let mut want = vec![RunningAcross, PausingMidCross, Retreat, FinishedCrossing];
        want.sort();
        assert_eq!(sudden, want);
        let mut checking = allowed_transitions(CheckingTraffic).to_vec();
        checking.sort();
        let mut want = vec![Hesitating, CrossingRoad, WalkingSidewalk, SuddenCrossing];
        want.sort();
        assert_eq!(checking, want);
    }

    #[test]
    fn no_self_loops_and_sidewalk_reentry_only_via_finish_or_retreat() {
        for s in BehaviourState::ALL {
            assert!(!is_transition_allowed(s, s));
            if s.is_crossing() {
                assert!(!is_transition_allowed(s, WalkingSidewalk));
            }
        }
    }

    #[test]
    fn distraction_reachable_only_from_sidewalk_states() {
        for s in BehaviourState::ALL {
            if is_transition_allowed(s, DistractedBehavior) {
                assert!(s.is_sidewalk(), "{s:?}");
            }
        }
    }

    #[test]
    fn sudden_crossing_not_reachable_from_looking_around() {
        // abrupt entry never passes through an explicit traffic check first
        assert!(is_transition_allowed(WalkingSidewalk, SuddenCrossing));
        assert!(!is_transition_allowed(LookingAround, SuddenCrossing));
    }

    #[test]
    fn names_serialise_in_screaming_case() {
        for s in BehaviourState::ALL {
            let j = serde_json::to_string(&s).unwrap();
            assert_eq!(j, format!("\"{}\"", s.as_str()));
        }
    }
}
