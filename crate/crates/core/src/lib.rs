//! Deterministic multi-pedestrian crossing-scenario simulator.
//!
//! The crate models a straight parametric road populated with behavioural
//! pedestrian agents (archetypes, a 12-state FSM, TTC-based gap acceptance)
//! and kinematic traffic, and emits per-frame crossing annotations as seen
//! from an ego-mounted pinhole camera.
//!
//! Module map:
//! - [`world`]: road geometry, lane typing, vehicle kinematics
//! - [`behaviour`]: archetypes, speed profiles, FSM, group synchronisation
//! - [`gap_acceptance`]: time-to-collision and crossing decisions
//! - [`spawner`]: the four crossing-rate layers and traffic population
//! - [`sensing`]: camera, visibility gate, labels, annotation output, stats
//! - [`runner`]: clip tick loop, batch orchestration, CLI

pub mod behaviour;
pub mod error;
pub mod gap_acceptance;
pub mod geom;
pub mod rng;
pub mod runner;
pub mod sensing;
pub mod spawner;
pub mod world;

pub use error::{Error, Result};
pub use geom::Vec2;

/// Simulation tick rate.
pub const FPS: u32 = 30;
/// Fixed simulation step in seconds.
pub const DT: f64 = 1.0 / FPS as f64;
