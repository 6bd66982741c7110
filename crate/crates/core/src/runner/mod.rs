//! Clip tick loop, batch orchestration, crossing-ratio verification and
//! the command-line interface.

mod batch;
mod cli;
mod clip;
mod config;

pub use batch::{
    clip_specs, report_from_runs, run_batch, simulate_batch, verify_crossing_ratio, wilson_interval,
    write_report, BatchReport, ClipFailure, CrossingRatioReport, Verdict, BATCH_REPORT,
    DEFAULT_TOLERANCE, MAX_FAILED_FRACTION, MIN_VERIFY_SAMPLE,
};
pub use cli::{
    describe, parse_cli, run_cli, CliError, Invocation, EXIT_BATCH_FAILED, EXIT_OK, EXIT_USAGE,
    EXIT_VERIFY_FAILED,
};
pub use clip::{reset_between_clips, run_clip, simulate_clip, simulate_clip_in, ClipRun, ClipSpec, ClipState};
pub use config::{GenerationConfig, CROSSING_RATIO_BAND, REGISTERED_TYPES, SCENARIO_TYPE};
