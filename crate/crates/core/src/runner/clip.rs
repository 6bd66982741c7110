//! Single-clip tick loop.

use std::path::Path;

use rand::Rng;

use super::config::GenerationConfig;
use crate::behaviour::{
    fsm_step, group_sync, is_transition_allowed, BehaviourState, FsmContext, GroupTracker,
    Pedestrian, SpeedProfile, TransitionEvent,
};
use crate::error::{Error, Result};
use crate::rng::{RngStream, SimRng};
use crate::sensing::{
    compute_tte_at, project_bbox, raw_label_for, sequence_label, smooth_labels, visibility_gate,
    write_clip, BoxRecord, CameraModel, ClipManifest, FrameAnnotation, GateParams,
    PedestrianRecord, SequenceLabel, WeatherCondition,
};
use crate::spawner::{build_spawn_plan, SpawnPlan};
use crate::world::{step_vehicle, RoadWorld, Vehicle};

/// Slack on the per-tick displacement bound, m.
const DISPLACEMENT_EPS: f64 = 1e-9;

/// Identity of one clip inside a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipSpec {
    pub clip_id: String,
    pub town: String,
    pub weather: &'static WeatherCondition,
    pub stream: RngStream,
}

/// Everything a clip run produces, kept in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRun {
    pub manifest: ClipManifest,
    pub annotations: Vec<FrameAnnotation>,
    pub events: Vec<TransitionEvent>,
    pub plan: SpawnPlan,
}

/// Mutable per-clip simulation state. Nothing in here survives
/// [`reset_between_clips`].
#[derive(Debug, Default)]
pub struct ClipState {
    pub vehicles: Vec<Vehicle>,
    pub pedestrians: Vec<Pedestrian>,
    pub trackers: Vec<GroupTracker>,
    pub ped_rngs: Vec<SimRng>,
    pub annotations: Vec<FrameAnnotation>,
    pub events: Vec<TransitionEvent>,
}

/// Tears the state down in a fixed order (traffic, agents, group
/// trackers, annotation buffers, random streams) and hands back an empty
/// one.
pub fn reset_between_clips(mut state: ClipState) -> ClipState {
    drop(std::mem::take(&mut state.vehicles));
    drop(std::mem::take(&mut state.pedestrians));
    drop(std::mem::take(&mut state.trackers));
    drop(std::mem::take(&mut state.annotations));
    drop(std::mem::take(&mut state.events));
    drop(std::mem::take(&mut state.ped_rngs));
    ClipState::default()
}

fn frame_count(cfg: &GenerationConfig, stream: &RngStream) -> u32 {
    let mut rng = stream.child_tag("duration").rng();
    let (lo, hi) = cfg.clip_duration_range;
    let u: f64 = rng.random();
    let duration = lo + (hi - lo) * u;
    let lo_f = (lo * f64::from(cfg.fps)).ceil() as u32;
    let hi_f = (hi * f64::from(cfg.fps)).floor() as u32;
    ((duration * f64::from(cfg.fps)).round() as u32).clamp(lo_f, hi_f.max(lo_f))
}

fn check_pedestrian(prev: &Pedestrian, next: &Pedestrian, dt: f64, tick: u32) -> Result<()> {
    if !next.position.is_finite() || !next.velocity.is_finite() {
        return Err(Error::Invariant(format!(
            "pedestrian {} has a non-finite position at tick {tick}",
            next.id
        )));
    }
    if next.state != BehaviourState::RunningAcross {
        let bound = next.base_speed * SpeedProfile::MAX_MULTIPLIER * dt + DISPLACEMENT_EPS;
        let moved = next.position.distance(prev.position);
        if moved > bound {
            return Err(Error::Invariant(format!(
                "pedestrian {} moved {moved:.4} m in one tick (bound {bound:.4}) at tick {tick}",
                next.id
            )));
        }
    }
    Ok(())
}

fn check_event(ev: &TransitionEvent) -> Result<()> {
    if is_transition_allowed(ev.from, ev.to) {
        Ok(())
    } else {
        Err(Error::IllegalTransition {
            ped_id: ev.ped_id,
            from: ev.from,
            to: ev.to,
            tick: ev.tick,
        })
    }
}

fn init_state(state: &mut ClipState, plan: &SpawnPlan, stream: &RngStream) {
    state.vehicles = plan.vehicles.clone();
    state.pedestrians = plan.pedestrians.clone();
    let fsm = stream.child_tag("fsm");
    state.ped_rngs = plan
        .pedestrians
        .iter()
        .map(|p| fsm.child(u64::from(p.id)).rng())
        .collect();
    state.trackers = plan
        .pedestrians
        .iter()
        .filter(|p| p.is_group_leader)
        .filter_map(|p| p.group_id.map(|g| GroupTracker::new(g, p.id, p.state)))
        .collect();
}

fn step(state: &mut ClipState, cfg: &GenerationConfig, world: &RoadWorld, tick: u32) -> Result<()> {
    let dt = 1.0 / f64::from(cfg.fps);
    let prev_vehicles = std::mem::take(&mut state.vehicles);
    let ped_positions: Vec<_> = state.pedestrians.iter().map(|p| p.position).collect();
    state.vehicles = prev_vehicles
        .iter()
        .map(|v| step_vehicle(v, &ped_positions, world, dt))
        .collect();
    for v in &state.vehicles {
        if !v.position.is_finite() {
            return Err(Error::Invariant(format!("vehicle {} left the reals at tick {tick}", v.id)));
        }
    }
    let ctx = FsmContext {
        world,
        vehicles: &prev_vehicles,
        ego: &prev_vehicles[0],
        params: &cfg.fsm,
        tick,
    };
    let mut next = Vec::with_capacity(state.pedestrians.len());
    for (ped, rng) in state.pedestrians.iter().zip(state.ped_rngs.iter_mut()) {
        let (p, ev) = fsm_step(ped, &ctx, rng, dt);
        if let Some(ev) = ev {
            check_event(&ev)?;
            state.events.push(ev);
        }
        next.push(p);
    }
    for tracker in &mut state.trackers {
        let idx: Vec<usize> = (0..next.len())
            .filter(|&i| next[i].group_id == Some(tracker.group_id))
            .collect();
        let mut members: Vec<Pedestrian> = idx.iter().map(|&i| next[i].clone()).collect();
        let events = group_sync(tracker, &mut members, world, tick)?;
        state.events.extend(events);
        for (&i, m) in idx.iter().zip(members) {
            next[i] = m;
        }
    }
    for (prev, p) in state.pedestrians.iter().zip(&next) {
        check_pedestrian(prev, p, dt, tick)?;
    }
    state.pedestrians = next;
    Ok(())
}

fn annotate_frame(state: &mut ClipState, world: &RoadWorld, cam: &CameraModel, gate: &GateParams, frame: u32) {
    let pose = state.vehicles[0].pose(world);
    for ped in &state.pedestrians {
        let bbox = project_bbox(cam, &pose, ped);
        let g = visibility_gate(cam, &pose, ped, bbox.as_ref(), gate);
        let lane = world.lane_type_at(ped.position);
        let visible = g.passed;
        state.annotations.push(FrameAnnotation {
            frame,
            ped_id: ped.id,
            visible,
            gate_stage_failed: g.stage_failed,
            state: ped.state,
            lane_type: lane,
            label_raw: visible.then(|| raw_label_for(ped.state, lane)),
            label: None,
            tte: None,
            bbox: bbox
                .filter(|_| visible)
                .map(|b| BoxRecord::from(&b.clip_to(cam))),
            distance_to_ego: ped.position.distance(pose.position).into(),
            position: [ped.position.x.into(), ped.position.y.into()],
            archetype: ped.archetype.name,
            group_id: ped.group_id,
            behaviour_type: ped.behaviour_type,
            keypoints: None,
        });
    }
}

/// Fills smoothed labels and TTE over each pedestrian's visible frames and
/// returns the per-pedestrian records.
fn finalise_labels(annotations: &mut [FrameAnnotation], plan: &SpawnPlan) -> Vec<PedestrianRecord> {
    let n = plan.pedestrians.len();
    let mut records = Vec::with_capacity(n);
    for (k, ped) in plan.pedestrians.iter().enumerate() {
        let idx: Vec<usize> = (k..annotations.len())
            .step_by(n.max(1))
            .filter(|&i| annotations[i].visible)
            .collect();
        let raw: Vec<u8> = idx.iter().map(|&i| annotations[i].label_raw.unwrap_or(0)).collect();
        let frames: Vec<u32> = idx.iter().map(|&i| annotations[i].frame).collect();
        let smooth = smooth_labels(&raw);
        let tte = compute_tte_at(&frames, &smooth);
        for ((&i, &l), t) in idx.iter().zip(&smooth).zip(tte) {
            annotations[i].label = Some(l);
            annotations[i].tte = t;
        }
        let first_cross_frame = frames.iter().zip(&smooth).find(|(_, &l)| l == 1).map(|(&f, _)| f);
        records.push(PedestrianRecord {
            id: ped.id,
            archetype: ped.archetype.name,
            role: ped.role,
            behaviour_type: ped.behaviour_type,
            group_id: ped.group_id,
            sequence_label: sequence_label(&smooth).unwrap_or(SequenceLabel::Excluded),
            first_cross_frame,
            visible_frames: idx.len() as u32,
        });
    }
    records
}

/// Simulates one clip in `state` (reset first) without touching the file
/// system.
pub fn simulate_clip_in(
    state: &mut ClipState,
    cfg: &GenerationConfig,
    world: &RoadWorld,
    spec: &ClipSpec,
) -> Result<ClipRun> {
    *state = reset_between_clips(std::mem::take(state));
    let (rates, _) = cfg.resolved_rates();
    let plan = build_spawn_plan(&rates, &cfg.fsm, world, spec.weather, &spec.stream.child_tag("spawn"))?;
    let frames = frame_count(cfg, &spec.stream);
    init_state(state, &plan, &spec.stream);
    let cam = CameraModel::default();
    let gate = GateParams::default();
    state.annotations.reserve(frames as usize * plan.pedestrians.len());
    for frame in 0..frames {
        if frame > 0 {
            step(state, cfg, world, frame)?;
        }
        annotate_frame(state, world, &cam, &gate, frame);
    }
    let mut annotations = std::mem::take(&mut state.annotations);
    let pedestrians = finalise_labels(&mut annotations, &plan);
    let annotated = annotations.iter().filter(|a| a.visible).count() as u64;
    let mut notes = plan.notes.clone();
    notes.extend(cfg.warnings.iter().cloned());
    let manifest = ClipManifest {
        clip_id: spec.clip_id.clone(),
        seed: spec.stream.seed(),
        town: world.template_name.clone(),
        weather: spec.weather.name.to_string(),
        difficulty: spec.weather.difficulty,
        fps: cfg.fps,
        frame_count: frames,
        pedestrian_count: plan.pedestrians.len() as u32,
        vehicle_count: plan.vehicles.len() as u32 - 1,
        annotated_samples: annotated,
        pedestrians,
        sensors: cfg.sensors(),
        spawn_plan_digest: plan.digest(),
        spawn_plan: serde_json::to_value(&plan)?,
        config: serde_json::json!({
            "generation": cfg,
            "resolved_layers": cfg.resolved_rates().0,
            "derivation_path": spec.stream.path,
            "root_seed": spec.stream.root_seed,
        }),
        notes,
    };
    let events = std::mem::take(&mut state.events);
    Ok(ClipRun {
        manifest,
        annotations,
        events,
        plan,
    })
}

pub fn simulate_clip(cfg: &GenerationConfig, world: &RoadWorld, spec: &ClipSpec) -> Result<ClipRun> {
    let mut state = ClipState::default();
    let run = simulate_clip_in(&mut state, cfg, world, spec);
    drop(reset_between_clips(state));
    run
}

/// Simulates and writes one clip under `out_dir`, returning its manifest.
pub fn run_clip(cfg: &GenerationConfig, world: &RoadWorld, spec: &ClipSpec, out_dir: &Path) -> Result<ClipManifest> {
    let run = simulate_clip(cfg, world, spec)?;
    write_clip(&run.manifest, &run.annotations, out_dir)?;
    Ok(run.manifest)
}
