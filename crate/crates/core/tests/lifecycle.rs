//! Clip isolation and memory stability across long runs.

mod common;

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicIsize, Ordering};
use std::sync::Mutex;

use pedsynth::behaviour::BehaviourState;
use pedsynth::rng::RngStream;
use pedsynth::runner::{clip_specs, simulate_clip, simulate_clip_in, ClipState, GenerationConfig};
use pedsynth::world::build_world;
use pedsynth::Vec2;

struct Counting;

static LIVE: AtomicIsize = AtomicIsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        LIVE.fetch_add(layout.size() as isize, Ordering::Relaxed);
        unsafe { System.alloc(layout) }
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        LIVE.fetch_sub(layout.size() as isize, Ordering::Relaxed);
        unsafe { System.dealloc(ptr, layout) }
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        LIVE.fetch_add(new_size as isize - layout.size() as isize, Ordering::Relaxed);
        unsafe { System.realloc(ptr, layout, new_size) }
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

// the live counter is global, so tests in this file run one at a time
static SERIAL: Mutex<()> = Mutex::new(());

fn short_config() -> GenerationConfig {
    GenerationConfig {
        videos_per_weather: 100,
        clip_duration_range: (2.0, 3.0),
        ..Default::default()
    }
}

#[test]
fn live_memory_does_not_grow_over_a_hundred_clips() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = short_config();
    let world = build_world("town_a").unwrap();
    let specs = clip_specs(&cfg).unwrap();
    let mut state = ClipState::default();
    let mut live = Vec::new();
    for spec in &specs {
        let run = simulate_clip_in(&mut state, &cfg, &world, spec).unwrap();
        drop(run);
        state = pedsynth::runner::reset_between_clips(state);
        live.push(LIVE.load(Ordering::Relaxed));
    }
    let (at5, at100) = (live[4] as f64, live[99] as f64);
    assert!(at100 <= at5 * 1.10, "live bytes grew from {at5} to {at100}");
}

#[test]
fn dirty_state_does_not_leak_into_the_next_clip() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = short_config();
    let world = build_world("town_a").unwrap();
    let specs = clip_specs(&cfg).unwrap();
    let isolated = simulate_clip(&cfg, &world, &specs[1]).unwrap();

    // leftovers of a clip that stopped part-way through its tick loop
    let mut state = ClipState::default();
    let first = simulate_clip_in(&mut state, &cfg, &world, &specs[0]).unwrap();
    let mut stray = first.plan.pedestrians[0].clone();
    stray.id = 777;
    stray.position = Vec2::new(1.0e6, 0.0);
    stray.state = BehaviourState::RunningAcross;
    state.pedestrians.push(stray);
    state.events.extend(first.events.iter().cloned());
    state.annotations.extend(first.annotations.iter().cloned());
    state.ped_rngs.push(RngStream::root(5).rng());

    let after = simulate_clip_in(&mut state, &cfg, &world, &specs[1]).unwrap();
    assert_eq!(after, isolated);
    let n = after.plan.pedestrians.len() as u32;
    assert!(after.annotations.iter().all(|a| a.ped_id < n));
    assert!(after.events.iter().all(|e| e.ped_id < n));
    let mut ids: Vec<u32> = after.plan.pedestrians.iter().map(|p| p.id).collect();
    ids.sort();
    assert_eq!(ids, (0..n).collect::<Vec<_>>());
}

#[test]
fn failed_clip_leaves_state_reusable() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let cfg = short_config();
    let world = build_world("town_a").unwrap();
    let specs = clip_specs(&cfg).unwrap();
    let mut bad = cfg.clone();
    bad.layers.group_probability = 2.0;
    let mut state = ClipState::default();
    assert!(simulate_clip_in(&mut state, &bad, &world, &specs[2]).is_err());
    let after = simulate_clip_in(&mut state, &cfg, &world, &specs[2]).unwrap();
    assert_eq!(after, simulate_clip(&cfg, &world, &specs[2]).unwrap());
}
