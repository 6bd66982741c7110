//! Batch orchestration and crossing-ratio verification.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clip::{simulate_clip_in, ClipRun, ClipSpec, ClipState};
use super::config::GenerationConfig;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sensing::{stats_from_manifests, weather_by_name, weather_index, write_clip, DatasetStats};
use crate::spawner::CrossingRateConfig;
use crate::world::{build_world, resolve_template_alias};

/// Fewest pedestrians for a conclusive crossing-ratio verdict.
pub const MIN_VERIFY_SAMPLE: u64 = 100;
/// A batch fails when more than this share of its clips fail.
pub const MAX_FAILED_FRACTION: f64 = 0.10;
pub const DEFAULT_TOLERANCE: f64 = 0.08;
pub const BATCH_REPORT: &str = "batch_report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRatioReport {
    pub target: f64,
    pub tolerance: f64,
    pub measured: f64,
    pub pedestrians: u64,
    /// Wilson 95% interval of the measured share.
    pub ci95: (f64, f64),
    pub verdict: Verdict,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn verify_crossing_ratio(stats: &DatasetStats, target: f64, tolerance: f64) -> CrossingRatioReport {
    let n = stats.unique_pedestrians;
    let measured = stats.crossing_share;
    let verdict = if n < MIN_VERIFY_SAMPLE {
        Verdict::Inconclusive
    } else if (measured - target).abs() <= tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    CrossingRatioReport {
        target,
        tolerance,
        measured,
        pedestrians: n,
        ci95: wilson_interval(stats.crossing, n),
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFailure {
    pub clip_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub clips_requested: u64,
    pub clips_written: u64,
    pub failures: Vec<ClipFailure>,
    pub batch_failed: bool,
    pub stats: DatasetStats,
    pub resolved_layers: CrossingRateConfig,
    pub expected_committed_fraction: f64,
    pub crossing_ratio: Option<CrossingRatioReport>,
    pub warnings: Vec<String>,
}

/// Clip list in batch order: weather, then clip index, towns assigned
/// round-robin by clip index. Seeds derive from (root seed, registry index
/// of the weather, clip index) only.
pub fn clip_specs(cfg: &GenerationConfig) -> Result<Vec<ClipSpec>> {
    let root = RngStream::root(cfg.seed);
    let mut specs = Vec::new();
    for name in cfg.weather_list() {
        let weather = weather_by_name(&name).ok_or_else(|| Error::Config(format!("unknown weather condition '{name}'")))?;
        let wi = weather_index(&name).expect("registered weather has an index") as u64;
        for vi in 0..cfg.videos_per_weather {
            let town = resolve_template_alias(&cfg.towns[vi as usize % cfg.towns.len()]).to_string();
            specs.push(ClipSpec {
                clip_id: format!("{}_{vi:04}", weather.name),
                town,
                weather,
                stream: root.child(wi).child(u64::from(vi)),
            });
        }
    }
    Ok(specs)
}

fn run_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn simulate_spec(state: &mut ClipState, cfg: &GenerationConfig, spec: &ClipSpec) -> Result<ClipRun> {
    let world = build_world(&spec.town)?;
    simulate_clip_in(state, cfg, &world, spec)
}

/// Simulates every clip in memory; results are in batch order.
pub fn simulate_batch(cfg: &GenerationConfig) -> Result<Vec<(ClipSpec, Result<ClipRun>)>> {
    cfg.validate()?;
    let specs = clip_specs(cfg)?;
    run_pool(cfg.workers, || {
        specs
            .into_par_iter()
            .map_init(ClipState::default, |state, spec| {
                let run = simulate_spec(state, cfg, &spec);
                (spec, run)
            })
            .collect()
    })
}

fn build_report(cfg: &GenerationConfig, requested: u64, manifests: &[crate::sensing::ClipManifest], failures: Vec<ClipFailure>) -> BatchReport {
    let stats = stats_from_manifests(manifests);
    let (rates, warning) = cfg.resolved_rates();
    let mut warnings = cfg.warnings.clone();
    warnings.extend(warning);
    let failed = failures.len() as f64;
    BatchReport {
        clips_requested: requested,
        clips_written: manifests.len() as u64,
        batch_failed: requested > 0 && failed / requested as f64 > MAX_FAILED_FRACTION,
        failures,
        crossing_ratio: cfg
            .crossing_ratio
            .map(|t| verify_crossing_ratio(&stats, t, DEFAULT_TOLERANCE)),
        stats,
        expected_committed_fraction: rates.expected_committed_fraction(),
        resolved_layers: rates,
        warnings,
    }
}

/// Runs the batch and writes every clip plus `batch_report.json` under
/// `outputs_dir`. Failed clips are logged and skipped.
pub fn run_batch(cfg: &GenerationConfig) -> Result<BatchReport> {
    cfg.validate()?;
    let out = cfg.outputs_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let specs = clip_specs(cfg)?;
    let requested = specs.len() as u64;
    let results: Vec<(String, Result<crate::sensing::ClipManifest>)> = run_pool(cfg.workers, || {
        specs
            .into_par_iter()
            .map_init(ClipState::default, |state, spec| {
                let res = simulate_spec(state, cfg, &spec).and_then(|run| {
                    write_clip(&run.manifest, &run.annotations, out)?;
                    Ok(run.manifest)
                });
                (spec.clip_id, res)
            })
            .collect()
    })?;
    let mut manifests = Vec::new();
    let mut failures = Vec::new();
    for (clip_id, res) in results {
        match res {
            Ok(m) => manifests.push(m),
            Err(e) => {
                log::error!("clip {clip_id} failed: {e}");
                failures.push(ClipFailure {
                    clip_id,
                    error: e.to_string(),
                });
            }
        }
    }
    let report = build_report(cfg, requested, &manifests, failures);
    write_report(&report, out)?;
    Ok(report)
}

pub fn write_report(report: &BatchReport, out: &Path) -> Result<()> {
    let path = out.join(BATCH_REPORT);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Aggregates in-memory runs the same way [`run_batch`] does.
pub fn report_from_runs(cfg: &GenerationConfig, runs: &[(ClipSpec, Result<ClipRun>)]) -> BatchReport {
    let mut manifests = Vec::new();
    let mut failures = Vec::new();
    for (spec, run) in runs {
        match run {
            Ok(r) => manifests.push(r.manifest.clone()),
            Err(e) => failures.push(ClipFailure {
                clip_id: spec.clip_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    build_report(cfg, runs.len() as u64, &manifests, failures)
}
