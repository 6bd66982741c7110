#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pedsynth::behaviour::{Archetype, ArchetypeName, Pedestrian, PedestrianInit, Role, SpeedProfile};
use pedsynth::runner::GenerationConfig;
use pedsynth::world::{DrivingProfile, Side, Vehicle};
use pedsynth::Vec2;

pub const BATCH_SEED: u64 = 2026;

/// 60 clips: every weather condition, 5 clips each, two towns.
pub fn batch_config(target: Option<f64>, seed: u64) -> GenerationConfig {
    let mut cfg = GenerationConfig {
        dataset_mode: true,
        videos_per_weather: 5,
        towns: vec!["town_a".into(), "town_b".into()],
        seed,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..Default::default()
    };
    if let Some(t) = target {
        cfg.set_crossing_ratio(t);
    }
    cfg
}

pub fn pedestrian(id: u32, position: Vec2, name: ArchetypeName) -> Pedestrian {
    let a = *Archetype::get(name);
    Pedestrian::new(PedestrianInit {
        id,
        position,
        height: 1.75,
        archetype: a,
        base_speed: 0.5 * (a.speed_range.0 + a.speed_range.1),
        hesitation: a.hesitation_range.0,
        speed_profile: SpeedProfile::Normal,
        role: Role::PotentialCrosser,
        spawn_side: Side::Right,
        walk_dir: 1.0,
    })
}

pub fn vehicle(id: u32, position: Vec2, velocity: Vec2) -> Vehicle {
    Vehicle {
        id,
        position,
        velocity,
        half_extents: Vec2::new(2.3, 0.95),
        profile: DrivingProfile::Normal,
        is_ego: id == 0,
        target_speed: velocity.norm(),
        lane: 0,
    }
}

/// Relative path -> file bytes for every file under `root`.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
