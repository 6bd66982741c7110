use super::annotation::SequenceLabel;
use crate::behaviour::{BehaviourState, Pedestrian};
use crate::world::{LaneType, RoadWorld};

/// Centred majority-vote window length.
pub const SMOOTHING_WINDOW: usize = 5;

/// Dual condition: crossing-related state and on a driving lane.
pub fn raw_label_for(state: BehaviourState, lane: LaneType) -> u8 {
    u8::from(state.is_crossing() && lane == LaneType::Driving)
}

pub fn raw_crossing_label(ped: &Pedestrian, world: &RoadWorld) -> u8 {
    raw_label_for(ped.state, world.lane_type_at(ped.position))
}

/// Strict majority over a centred window, truncated at the ends. Ties
/// resolve to 0.
pub fn smooth_labels(raw: &[u8]) -> Vec<u8> {
    let half = SMOOTHING_WINDOW / 2;
    (0..raw.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(raw.len());
            let ones = raw[lo..hi].iter().filter(|&&l| l == 1).count();
            u8::from(2 * ones > hi - lo)
        })
        .collect()
}

/// Signed frames to the first positive label of a contiguous sequence.
pub fn compute_tte(labels: &[u8]) -> Vec<Option<i64>> {
    let frames: Vec<u32> = (0..labels.len() as u32).collect();
    compute_tte_at(&frames, labels)
}

/// Same as [`compute_tte`] for a sequence with explicit frame numbers.
pub fn compute_tte_at(frames: &[u32], labels: &[u8]) -> Vec<Option<i64>> {
    let onset = frames
        .iter()
        .zip(labels)
        .find(|(_, &l)| l == 1)
        .map(|(&f, _)| i64::from(f));
    frames
        .iter()
        .map(|&f| onset.map(|o| o - i64::from(f)))
        .collect()
}

/// Crosser iff any smoothed label is 1; `None` for an empty sequence.
pub fn sequence_label(labels: &[u8]) -> Option<SequenceLabel> {
    if labels.is_empty() {
        None
    } else if labels.contains(&1) {
        Some(SequenceLabel::Crosser)
    } else {
        Some(SequenceLabel::NonCrosser)
    }
}
