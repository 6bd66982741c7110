//! Scenario population: traffic, pedestrian roles and the four
//! crossing-rate layers (crosser allocation, behaviour typing, mid-road
//! jaywalker injection, group formation).
//!
//! Every pedestrian draws from its own sub-stream per layer, so changing
//! one layer's parameter leaves the other layers' draws untouched.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behaviour::{
    enter_state, sample_archetype, sample_speed_profile, Archetype, BehaviourState, BehaviourType,
    Pedestrian, PedestrianInit, Role, MAX_FOLLOWER_JITTER_TICKS,
};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::{RngStream, SimRng};
use crate::sensing::WeatherCondition;
use crate::world::{DrivingProfile, RoadWorld, Side, Vehicle};

pub const MIN_PEDESTRIANS: u32 = 5;
pub const MAX_PEDESTRIANS: u32 = 10;
/// Relative weights of pedestrian counts MIN_PEDESTRIANS..=MAX_PEDESTRIANS,
/// proportional to (n - 4)^3 so that clips lean towards busy scenes.
pub const PEDESTRIAN_COUNT_WEIGHTS: [u32; 6] = [1, 8, 27, 64, 125, 216];
pub const MIN_VEHICLES: u32 = 5;
pub const MAX_VEHICLES: u32 = 10;
pub const MAX_JAYWALKERS: u32 = 2;
pub const MIN_HEADWAY: f64 = 8.0;
/// Ego start position along the road, m.
pub const EGO_START: f64 = 20.0;
/// Ego initial speed as a fraction of its target speed.
pub const EGO_START_SPEED_FRACTION: f64 = 0.0;
/// Crosser spawn band ahead of the ego, m.
pub const CROSSER_RANGE: (f64, f64) = (10.0, 55.0);
pub const NON_CROSSER_RANGE: (f64, f64) = (5.0, 70.0);
pub const JAYWALKER_RANGE: (f64, f64) = (15.0, 50.0);
/// Share of pedestrians spawned on the ego-side sidewalk.
pub const EGO_SIDE_SHARE: f64 = 0.7;
/// Crossers wait this far back from the kerb, m.
pub const KERB_STANDOFF: (f64, f64) = (0.2, 0.8);
pub const GROUP_RADIUS: f64 = 5.0;
pub const GROUP_PULL: f64 = 2.0;
/// Ego distance band in which sudden and jaywalking crossers step out, m.
pub const TRIGGER_DISTANCE: (f64, f64) = (20.0, 40.0);
pub const VEHICLE_HALF_EXTENTS: Vec2 = Vec2 { x: 2.3, y: 0.95 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviourMix {
    pub normal: f64,
    pub sudden: f64,
    pub jaywalk: f64,
}

impl Default for BehaviourMix {
    fn default() -> Self {
        BehaviourMix {
            normal: 0.50,
            sudden: 0.25,
            jaywalk: 0.25,
        }
    }
}

impl BehaviourMix {
    /// Overrides the sudden and jaywalk shares; the normal share takes the
    /// remainder, and the whole mix is renormalised if the overrides alone
    /// exceed one.
    pub fn with_overrides(self, sudden: Option<f64>, jaywalk: Option<f64>) -> Self {
        let s = sudden.unwrap_or(self.sudden).clamp(0.0, 1.0);
        let j = jaywalk.unwrap_or(self.jaywalk).clamp(0.0, 1.0);
        if sudden.is_none() && jaywalk.is_none() {
            return self;
        }
        if s + j >= 1.0 {
            if s + j == 0.0 {
                return BehaviourMix { normal: 1.0, sudden: 0.0, jaywalk: 0.0 };
            }
            return BehaviourMix {
                normal: 0.0,
                sudden: s / (s + j),
                jaywalk: j / (s + j),
            };
        }
        BehaviourMix {
            normal: 1.0 - s - j,
            sudden: s,
            jaywalk: j,
        }
    }

    fn pick(&self, u: f64) -> BehaviourType {
        if u < self.normal {
            BehaviourType::NormalCrossing
        } else if u < self.normal + self.sudden {
            BehaviourType::SuddenCrossing
        } else {
            BehaviourType::Jaywalking
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRateConfig {
    pub crosser_ratio: f64,
    pub crossing_behaviors_ratio: f64,
    pub behaviour_mix: BehaviourMix,
    pub jaywalker_lateral_offset: f64,
    /// Per-clip probability of mid-road jaywalker injection.
    pub jaywalker_injection_probability: f64,
    pub group_probability: f64,
    pub crossing_ratio_target: Option<f64>,
}

impl Default for CrossingRateConfig {
    fn default() -> Self {
        CrossingRateConfig {
            crosser_ratio: 0.90,
            crossing_behaviors_ratio: 0.75,
            behaviour_mix: BehaviourMix::default(),
            jaywalker_lateral_offset: 1.5,
            jaywalker_injection_probability: 0.25,
            group_probability: 0.40,
            crossing_ratio_target: None,
        }
    }
}

fn is_probability(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl CrossingRateConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.behaviour_mix;
        let probs = [
            ("crosser_ratio", self.crosser_ratio),
            ("crossing_behaviors_ratio", self.crossing_behaviors_ratio),
            ("behaviour_mix.normal", m.normal),
            ("behaviour_mix.sudden", m.sudden),
            ("behaviour_mix.jaywalk", m.jaywalk),
            ("jaywalker_injection_probability", self.jaywalker_injection_probability),
            ("group_probability", self.group_probability),
        ];
        for (name, p) in probs {
            if !is_probability(p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if let Some(t) = self.crossing_ratio_target {
            if !is_probability(t) {
                return Err(Error::Config(format!("crossing ratio target {t} is not a probability")));
            }
        }
        if ((m.normal + m.sudden + m.jaywalk) - 1.0).abs() > 1e-9 {
            return Err(Error::Config("behaviour mix must sum to 1".into()));
        }
        if !(self.jaywalker_lateral_offset >= 0.0) {
            return Err(Error::Config("jaywalker lateral offset must be non-negative".into()));
        }
        Ok(())
    }

    /// Pooled share of injected jaywalkers among all pedestrians.
    pub fn expected_jaywalker_share(&self) -> f64 {
        let mean_injected = 0.5 * (1.0 + f64::from(MAX_JAYWALKERS));
        self.jaywalker_injection_probability * mean_injected / mean_pedestrian_count()
    }

    /// Expected fraction of pedestrians committed to a typed crossing at
    /// spawn: injected jaywalkers plus role x archetype check x typing.
    pub fn expected_committed_fraction(&self) -> f64 {
        let s_j = self.expected_jaywalker_share();
        let q = self.crosser_ratio * self.crossing_behaviors_ratio * Archetype::mean_crossing_prob();
        s_j + (1.0 - s_j) * q
    }

    /// Scales `crosser_ratio` and `crossing_behaviors_ratio` by a common
    /// factor so that the expected committed fraction equals `target`.
    /// Once one of them saturates at 1 the other carries the rest. Returns
    /// a warning when the target cannot be met exactly.
    pub fn resolve_target(&self, target: f64) -> (CrossingRateConfig, Option<String>) {
        let mut out = *self;
        out.crossing_ratio_target = Some(target);
        let s_j = self.expected_jaywalker_share();
        let mean_cp = Archetype::mean_crossing_prob();
        let q = if s_j >= 1.0 { 0.0 } else { (target - s_j) / (1.0 - s_j) };
        let product = q / mean_cp;
        let (cr, cb) = (self.crosser_ratio, self.crossing_behaviors_ratio);
        let mut warning = None;
        if product <= 0.0 {
            out.crosser_ratio = 0.0;
            out.crossing_behaviors_ratio = 0.0;
            if product < 0.0 {
                warning = Some(format!("crossing ratio {target} is below the jaywalker share {s_j:.3}"));
            }
        } else if product >= 1.0 {
            out.crosser_ratio = 1.0;
            out.crossing_behaviors_ratio = 1.0;
            if product > 1.0 {
                warning = Some(format!(
                    "crossing ratio {target} exceeds what the layers can express ({:.3})",
                    s_j + (1.0 - s_j) * mean_cp
                ));
            }
        } else if cr * cb <= 0.0 {
            out.crosser_ratio = product.sqrt();
            out.crossing_behaviors_ratio = product.sqrt();
        } else {
            let k = (product / (cr * cb)).sqrt();
            let (hi, lo, hi_is_cr) = if cr >= cb { (cr, cb, true) } else { (cb, cr, false) };
            let (new_hi, new_lo) = if hi * k > 1.0 { (1.0, product) } else { (hi * k, lo * k) };
            if hi_is_cr {
                out.crosser_ratio = new_hi;
                out.crossing_behaviors_ratio = new_lo;
            } else {
                out.crosser_ratio = new_lo;
                out.crossing_behaviors_ratio = new_hi;
            }
        }
        (out, warning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupSummary {
    pub candidates: u32,
    pub formed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnPlan {
    pub seed: u64,
    pub pedestrians: Vec<Pedestrian>,
    /// Ego first.
    pub vehicles: Vec<Vehicle>,
    pub groups: GroupSummary,
    pub notes: Vec<String>,
}

impl SpawnPlan {
    pub fn ego(&self) -> &Vehicle {
        &self.vehicles[0]
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spawn plan serialises");
        hex::encode(Sha256::digest(bytes))
    }
}

fn uniform(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

fn draw_profile(u: f64) -> DrivingProfile {
    if u < 0.20 {
        DrivingProfile::Aggressive
    } else if u < 0.80 {
        DrivingProfile::Normal
    } else {
        DrivingProfile::Cautious
    }
}

fn make_vehicle(world: &RoadWorld, id: u32, lane: usize, s: f64, profile: DrivingProfile, target: f64, is_ego: bool) -> Vehicle {
    let position = world.point(s, world.lane_centre_offset(lane));
    Vehicle {
        id,
        position,
        velocity: world.lane_direction(lane) * target,
        half_extents: VEHICLE_HALF_EXTENTS,
        profile,
        is_ego,
        target_speed: target,
        lane,
    }
}

/// Ego (id 0, first lane, normal profile) plus 5-10 traffic vehicles with
/// at least [`MIN_HEADWAY`] between any two in the same lane. Vehicles that
/// cannot be placed are dropped and reported in the returned notes.
pub fn spawn_traffic(world: &RoadWorld, rng: &mut SimRng) -> (Vec<Vehicle>, Vec<String>) {
    let ego_target = uniform(rng, DrivingProfile::Normal.speed_band());
    let mut ego = make_vehicle(world, 0, 0, EGO_START, DrivingProfile::Normal, ego_target, true);
    ego.velocity = ego.velocity * EGO_START_SPEED_FRACTION;
    let mut vehicles = vec![ego];
    let wanted = rng.random_range(MIN_VEHICLES..=MAX_VEHICLES);
    let mut notes = Vec::new();
    for k in 0..wanted {
        let profile = draw_profile(rng.random());
        let target = uniform(rng, profile.speed_band());
        let mut placed = None;
        for _ in 0..64 {
            let lane = rng.random_range(0..world.n_driving_lanes);
            let s = uniform(rng, (0.0, world.world_length));
            let clear = vehicles
                .iter()
                .filter(|v| v.lane == lane)
                .all(|v| (world.longitudinal(v.position) - s).abs() >= MIN_HEADWAY);
            if clear {
                placed = Some((lane, s));
                break;
            }
        }
        match placed {
            Some((lane, s)) => vehicles.push(make_vehicle(world, k + 1, lane, s, profile, target, false)),
            None => notes.push(format!("vehicle {} dropped: no slot with {MIN_HEADWAY} m headway", k + 1)),
        }
    }
    (vehicles, notes)
}

fn pick_side(u: f64) -> Side {
    if u < EGO_SIDE_SHARE {
        Side::Right
    } else {
        Side::Left
    }
}

fn walk_dir(u: f64) -> f64 {
    if u < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Sidewalk band of `side`: lateral distance from the road centre.
fn sidewalk_band(world: &RoadWorld, side: Side) -> (f64, f64) {
    let kerb = world.kerb_offset(side);
    let bands = match side {
        Side::Left => &world.left_bands,
        Side::Right => &world.right_bands,
    };
    let mut inner = kerb;
    for b in bands {
        if b.lane_type == crate::world::LaneType::Sidewalk {
            return (inner, inner + b.width);
        }
        inner += b.width;
    }
    (kerb, kerb + world.sidewalk_width)
}

/// Lateral offset standing `back` metres behind the inner sidewalk edge.
fn sidewalk_lateral(world: &RoadWorld, side: Side, back: f64) -> f64 {
    let (inner, _) = sidewalk_band(world, side);
    side.sign() * (inner + back)
}

/// Layer 1. Draws roles, sidewalk positions, archetypes and speed profiles.
/// Pedestrian `i` uses only the sub-stream `stream / i`.
pub fn allocate_roles(
    n: u32,
    first_id: u32,
    cfg: &CrossingRateConfig,
    ego: &Vehicle,
    world: &RoadWorld,
    weather: &WeatherCondition,
    stream: &RngStream,
) -> Vec<Pedestrian> {
    let ego_s = world.longitudinal(ego.position);
    (0..n)
        .map(|i| {
            let mut rng = stream.child(u64::from(i)).rng();
            let u_role: f64 = rng.random();
            let role = if u_role < cfg.crosser_ratio {
                Role::PotentialCrosser
            } else {
                Role::NonCrosser
            };
            let side = pick_side(rng.random());
            let u_long: f64 = rng.random();
            let u_lat: f64 = rng.random();
            let dir = walk_dir(rng.random());
            let draw = sample_archetype(&mut rng);
            let profile = sample_speed_profile(&mut rng, weather, &draw.archetype);
            let u_check: f64 = rng.random();
            let u_height: f64 = rng.random();
            let (band, lateral) = match role {
                Role::PotentialCrosser => {
                    let back = KERB_STANDOFF.0 + (KERB_STANDOFF.1 - KERB_STANDOFF.0) * u_lat;
                    (CROSSER_RANGE, sidewalk_lateral(world, side, back))
                }
                _ => {
                    let (inner, outer) = sidewalk_band(world, side);
                    let back = 0.2 + (outer - inner - 0.4) * u_lat;
                    (NON_CROSSER_RANGE, sidewalk_lateral(world, side, back))
                }
            };
            let s = ego_s + band.0 + (band.1 - band.0) * u_long;
            let mut ped = Pedestrian::new(PedestrianInit {
                id: first_id + i,
                position: world.point(s, lateral),
                height: 1.60 + 0.30 * u_height,
                archetype: draw.archetype,
                base_speed: draw.base_speed,
                hesitation: draw.hesitation,
                speed_profile: profile,
                role,
                spawn_side: side,
                walk_dir: dir,
            });
            ped.heading = world.road_axis * dir;
            ped.intends_to_cross = role == Role::PotentialCrosser && u_check < draw.archetype.crossing_prob;
            ped
        })
        .collect()
}

/// Layer 2. Types each crosser with probability `crossing_behaviors_ratio`
/// and splits typed crossers by the behaviour mix; untyped crossers stay
/// opportunistic. Also seeds the initial walking timer and the ego
/// trigger distance.
pub fn assign_behaviour_types(
    peds: &mut [Pedestrian],
    cfg: &CrossingRateConfig,
    params: &crate::behaviour::FsmParams,
    stream: &RngStream,
) {
    for ped in peds.iter_mut() {
        let mut rng = stream.child(u64::from(ped.id)).rng();
        let u_typed: f64 = rng.random();
        let u_mix: f64 = rng.random();
        let u_timer: f64 = rng.random();
        let u_trigger: f64 = rng.random();
        ped.trigger_distance = TRIGGER_DISTANCE.0 + (TRIGGER_DISTANCE.1 - TRIGGER_DISTANCE.0) * u_trigger;
        if ped.role == Role::PotentialCrosser && u_typed < cfg.crossing_behaviors_ratio {
            ped.behaviour_type = Some(cfg.behaviour_mix.pick(u_mix));
        }
        let walk = if !ped.pending_crosser() {
            params.idle_walk
        } else if ped.behaviour_type.is_some() {
            params.committed_walk_delay
        } else {
            params.opportunistic_walk
        };
        ped.state_duration = walk.0 + (walk.1 - walk.0) * u_timer;
    }
}

/// Layer 3. With the per-clip injection probability, places one or two
/// pedestrians directly on driving lanes, already jaywalking.
pub fn inject_jaywalkers(
    first_id: u32,
    cfg: &CrossingRateConfig,
    world: &RoadWorld,
    ego: &Vehicle,
    weather: &WeatherCondition,
    stream: &RngStream,
) -> Vec<Pedestrian> {
    let mut rng = stream.rng();
    let u_inject: f64 = rng.random();
    let count = rng.random_range(1..=MAX_JAYWALKERS);
    if u_inject >= cfg.jaywalker_injection_probability {
        return Vec::new();
    }
    let ego_s = world.longitudinal(ego.position);
    (0..count)
        .map(|k| {
            let mut rng = stream.child(u64::from(k)).rng();
            let lane = rng.random_range(0..world.n_driving_lanes);
            let off = cfg.jaywalker_lateral_offset;
            let lateral = world.lane_centre_offset(lane) + uniform(&mut rng, (-off, off));
            let s = ego_s + uniform(&mut rng, JAYWALKER_RANGE);
            // heading away from the nearer kerb
            let side = if lateral < 0.0 { Side::Right } else { Side::Left };
            let dir = walk_dir(rng.random());
            let draw = sample_archetype(&mut rng);
            let profile = sample_speed_profile(&mut rng, weather, &draw.archetype);
            let u_height: f64 = rng.random();
            let mut ped = Pedestrian::new(PedestrianInit {
                id: first_id + k,
                position: world.point(s, lateral),
                height: 1.60 + 0.30 * u_height,
                archetype: draw.archetype,
                base_speed: draw.base_speed,
                hesitation: draw.hesitation,
                speed_profile: profile,
                role: Role::MidRoadJaywalker,
                spawn_side: side,
                walk_dir: dir,
            });
            ped.behaviour_type = Some(BehaviourType::Jaywalking);
            ped.intends_to_cross = true;
            enter_state(&mut ped, BehaviourState::Jaywalking, world, 0.0);
            ped.heading = ped.crossing_vector.unwrap_or(ped.heading);
            ped
        })
        .collect()
}

/// Layer 4. Clusters of two or three potential crossers on the same side
/// within [`GROUP_RADIUS`] become groups with `group_probability`. The
/// leader is a committed member when there is one; followers take over its
/// intent, stand within [`GROUP_PULL`] of it and replay its states with a
/// per-follower delay.
pub fn form_groups(peds: &mut [Pedestrian], cfg: &CrossingRateConfig, world: &RoadWorld, stream: &RngStream) -> GroupSummary {
    let mut order: Vec<usize> = (0..peds.len())
        .filter(|&i| peds[i].role == Role::PotentialCrosser)
        .collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| (peds[i].spawn_side == Side::Left, world.longitudinal(peds[i].position));
        let (sa, la) = key(a);
        let (sb, lb) = key(b);
        sa.cmp(&sb).then(la.total_cmp(&lb)).then(peds[a].id.cmp(&peds[b].id))
    });
    let mut rng = stream.rng();
    let mut summary = GroupSummary::default();
    let mut i = 0;
    while i < order.len() {
        let head = order[i];
        let head_s = world.longitudinal(peds[head].position);
        let mut cluster = vec![head];
        let mut j = i + 1;
        while j < order.len() && cluster.len() < 3 {
            let c = order[j];
            if peds[c].spawn_side != peds[head].spawn_side
                || world.longitudinal(peds[c].position) - head_s > GROUP_RADIUS
            {
                break;
            }
            cluster.push(c);
            j += 1;
        }
        if cluster.len() < 2 {
            i += 1;
            continue;
        }
        i = j;
        summary.candidates += 1;
        let u: f64 = rng.random();
        if u >= cfg.group_probability {
            continue;
        }
        let group_id = summary.formed;
        summary.formed += 1;
        let leader = cluster
            .iter()
            .copied()
            .find(|&m| peds[m].intends_to_cross)
            .unwrap_or(cluster[0]);
        let lead = peds[leader].clone();
        let lead_s = world.longitudinal(lead.position);
        peds[leader].group_id = Some(group_id);
        peds[leader].is_group_leader = true;
        for &m in cluster.iter().filter(|&&m| m != leader) {
            let delay = rng.random_range(0..=MAX_FOLLOWER_JITTER_TICKS);
            let offset = uniform(&mut rng, (-GROUP_PULL, GROUP_PULL));
            let f = &mut peds[m];
            let lateral = world.lateral(f.position);
            f.position = world.point(lead_s + offset, lateral);
            f.group_id = Some(group_id);
            f.is_group_leader = false;
            f.sync_delay = delay;
            f.sync_locked = true;
            f.intends_to_cross = lead.intends_to_cross;
            f.behaviour_type = lead.behaviour_type;
            f.walk_dir = lead.walk_dir;
            f.heading = lead.heading;
            f.trigger_distance = lead.trigger_distance;
        }
    }
    summary
}

/// Mean of the pedestrian-count distribution.
pub fn mean_pedestrian_count() -> f64 {
    let total: u32 = PEDESTRIAN_COUNT_WEIGHTS.iter().sum();
    (MIN_PEDESTRIANS..=MAX_PEDESTRIANS)
        .zip(PEDESTRIAN_COUNT_WEIGHTS)
        .map(|(n, w)| f64::from(n * w))
        .sum::<f64>()
        / f64::from(total)
}

/// Pedestrians per clip, 5-10, weighted by [`PEDESTRIAN_COUNT_WEIGHTS`].
pub fn draw_pedestrian_count(rng: &mut SimRng) -> u32 {
    let dist = WeightedIndex::new(PEDESTRIAN_COUNT_WEIGHTS).expect("static weights are valid");
    MIN_PEDESTRIANS + dist.sample(rng) as u32
}

/// Builds the full plan for one clip from its stream.
pub fn build_spawn_plan(
    cfg: &CrossingRateConfig,
    params: &crate::behaviour::FsmParams,
    world: &RoadWorld,
    weather: &WeatherCondition,
    stream: &RngStream,
) -> Result<SpawnPlan> {
    cfg.validate()?;
    let (vehicles, notes) = spawn_traffic(world, &mut stream.child_tag("traffic").rng());
    let n = draw_pedestrian_count(&mut stream.child_tag("count").rng());
    let ego = vehicles[0].clone();
    let mut jaywalkers = inject_jaywalkers(0, cfg, world, &ego, weather, &stream.child_tag("jaywalkers"));
    let regular_n = n - jaywalkers.len() as u32;
    let mut peds = allocate_roles(regular_n, 0, cfg, &ego, world, weather, &stream.child_tag("roles"));
    assign_behaviour_types(&mut peds, cfg, params, &stream.child_tag("types"));
    let groups = form_groups(&mut peds, cfg, world, &stream.child_tag("groups"));
    for (k, j) in jaywalkers.iter_mut().enumerate() {
        j.id = regular_n + k as u32;
    }
    peds.extend(jaywalkers);
    Ok(SpawnPlan {
        seed: stream.seed(),
        pedestrians: peds,
        vehicles,
        groups,
        notes,
    })
}
