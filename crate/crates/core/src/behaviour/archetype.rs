use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;
use crate::sensing::{Difficulty, WeatherCondition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchetypeName {
    BusinessPerson,
    CasualPerson,
    ElderlyPerson,
    YoungPerson,
    ParentWithChild,
}

impl ArchetypeName {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchetypeName::BusinessPerson => "business_person",
            ArchetypeName::CasualPerson => "casual_person",
            ArchetypeName::ElderlyPerson => "elderly_person",
            ArchetypeName::YoungPerson => "young_person",
            ArchetypeName::ParentWithChild => "parent_with_child",
        }
    }
}

/// Fixed behavioural parameter bundle of one archetype.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: ArchetypeName,
    pub proportion: f64,
    /// Base walking speed interval, m/s.
    pub speed_range: (f64, f64),
    /// Hesitation duration interval, s.
    pub hesitation_range: (f64, f64),
    pub attention: f64,
    pub crossing_prob: f64,
    /// Gap-acceptance threshold, s.
    pub tau_ttc: f64,
    /// Safety buffer, s.
    pub delta_safety: f64,
    /// Waiting-time cap, s.
    pub patience_cap: f64,
}

const fn archetype(
    name: ArchetypeName,
    proportion: f64,
    speed_range: (f64, f64),
    hesitation_range: (f64, f64),
    attention: f64,
    crossing_prob: f64,
) -> Archetype {
    // Attention maps linearly onto the gap threshold, the safety buffer and
    // the patience cap: attentive agents demand larger gaps and wait longer.
    Archetype {
        name,
        proportion,
        speed_range,
        hesitation_range,
        attention,
        crossing_prob,
        tau_ttc: 3.0 + 3.0 * attention,
        delta_safety: 0.5 + 0.5 * attention,
        patience_cap: 6.0 + 12.0 * attention,
    }
}

pub const ARCHETYPES: [Archetype; 5] = [
    archetype(ArchetypeName::BusinessPerson, 0.30, (1.4, 1.8), (0.3, 0.8), 0.5, 0.85),
    archetype(ArchetypeName::CasualPerson, 0.25, (1.0, 1.4), (0.5, 1.5), 0.7, 0.70),
    archetype(ArchetypeName::ElderlyPerson, 0.10, (0.6, 1.0), (1.0, 2.0), 0.9, 0.50),
    archetype(ArchetypeName::YoungPerson, 0.20, (1.2, 2.0), (0.2, 0.6), 0.4, 0.90),
    archetype(ArchetypeName::ParentWithChild, 0.15, (0.8, 1.2), (0.8, 1.8), 0.8, 0.60),
];

impl Archetype {
    pub fn get(name: ArchetypeName) -> &'static Archetype {
        ARCHETYPES
            .iter()
            .find(|a| a.name == name)
            .expect("every archetype name is registered")
    }

    /// Population mean of `crossing_prob`.
    pub fn mean_crossing_prob() -> f64 {
        ARCHETYPES.iter().map(|a| a.proportion * a.crossing_prob).sum()
    }
}

/// One sampled agent: archetype plus its per-agent scalar draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeDraw {
    pub archetype: Archetype,
    pub base_speed: f64,
    pub hesitation: f64,
}

fn lerp((lo, hi): (f64, f64), u: f64) -> f64 {
    lo + (hi - lo) * u
}

/// Categorical archetype draw followed by uniform draws inside the
/// archetype's speed and hesitation ranges. Always consumes three variates.
pub fn sample_archetype(rng: &mut SimRng) -> ArchetypeDraw {
    let u: f64 = rng.random();
    let u_speed: f64 = rng.random();
    let u_hes: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = ARCHETYPES[ARCHETYPES.len() - 1];
    for a in ARCHETYPES {
        acc += a.proportion;
        if u < acc {
            chosen = a;
            break;
        }
    }
    ArchetypeDraw {
        archetype: chosen,
        base_speed: lerp(chosen.speed_range, u_speed),
        hesitation: lerp(chosen.hesitation_range, u_hes),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeedProfile {
    Cautious,
    Normal,
    Rushed,
    Distracted,
}

impl SpeedProfile {
    pub fn multiplier(self) -> f64 {
        match self {
            SpeedProfile::Cautious => 0.8,
            SpeedProfile::Normal => 1.0,
            SpeedProfile::Rushed => 1.3,
            SpeedProfile::Distracted => 0.9,
        }
    }

    pub const MAX_MULTIPLIER: f64 = 1.3;
}

/// Cautious is forced in hard weather or for elderly agents; otherwise a
/// categorical draw Normal 0.55 / Rushed 0.15 / Distracted 0.20 / Cautious 0.10.
pub fn sample_speed_profile(
    rng: &mut SimRng,
    weather: &WeatherCondition,
    archetype: &Archetype,
) -> SpeedProfile {
    let u: f64 = rng.random();
    if weather.difficulty == Difficulty::Hard || archetype.name == ArchetypeName::ElderlyPerson {
        return SpeedProfile::Cautious;
    }
    if u < 0.55 {
        SpeedProfile::Normal
    } else if u < 0.70 {
        SpeedProfile::Rushed
    } else if u < 0.90 {
        SpeedProfile::Distracted
    } else {
        SpeedProfile::Cautious
    }
}
