//! Command-line surface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::batch::{run_batch, verify_crossing_ratio, Verdict, DEFAULT_TOLERANCE};
use super::config::{GenerationConfig, SCENARIO_TYPE};
use crate::behaviour::{allowed_transitions, BehaviourState, ARCHETYPES};
use crate::error::Error;
use crate::sensing::{clip_dirs_in, dataset_stats, WEATHER_CONDITIONS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BATCH_FAILED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pedsynth", version, about = "Synthetic pedestrian-crossing scenario generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate clips into an output directory.
    Generate(GenerateArgs),
    /// Print dataset statistics for a directory of clips.
    Stats {
        dir: PathBuf,
        /// Print only the machine-readable document.
        #[arg(long)]
        json: bool,
    },
    /// Check the measured crossing share against a target.
    Verify {
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        dir: PathBuf,
    },
    /// Dump the archetype table, weather set and FSM graph.
    Describe,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long = "type", default_value = SCENARIO_TYPE)]
    scenario_type: String,
    #[arg(long = "outputs_dir")]
    outputs_dir: PathBuf,
    #[arg(long = "towns", value_delimiter = ',', num_args = 1..)]
    towns: Vec<String>,
    /// Weather names, or "all".
    #[arg(long = "weather_conditions", value_delimiter = ',', num_args = 1..)]
    weather_conditions: Vec<String>,
    #[arg(long = "videos_per_weather", default_value_t = 1)]
    videos_per_weather: u32,
    #[arg(long = "dataset_mode")]
    dataset_mode: bool,
    #[arg(long = "crossing_ratio")]
    crossing_ratio: Option<f64>,
    #[arg(long = "sudden_crossing_ratio")]
    sudden_crossing_ratio: Option<f64>,
    #[arg(long = "jaywalking_ratio")]
    jaywalking_ratio: Option<f64>,
    #[arg(long = "enable_lidar")]
    enable_lidar: bool,
    #[arg(long = "enable_dvs")]
    enable_dvs: bool,
    #[arg(long = "enable_emergency")]
    enable_emergency: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel clip workers; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Accepted for compatibility with simulator-backed setups; unused.
    #[arg(long, hide = true)]
    port: Option<u16>,
    #[arg(long = "tm_port", hide = true)]
    tm_port: Option<u16>,
    #[arg(long, hide = true)]
    host: Option<String>,
}

/// A parsed invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Generate(GenerationConfig),
    Stats { dir: PathBuf, json: bool },
    Verify { target: f64, tolerance: f64, dir: PathBuf },
    Describe,
}

/// Parse failure carrying the text to show and the exit code to use.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

fn strip_prefix_token(argv: Vec<OsString>) -> Vec<OsString> {
    // `<bin> scenarios generate ...` is accepted as well as `<bin> generate ...`
    let mut argv = argv;
    if argv.len() > 1 && argv[1] == "scenarios" {
        argv.remove(1);
    }
    argv
}

fn into_config(a: GenerateArgs) -> Result<GenerationConfig, Error> {
    let mut cfg = GenerationConfig {
        outputs_dir: a.outputs_dir,
        scenario_type: a.scenario_type,
        videos_per_weather: a.videos_per_weather,
        dataset_mode: a.dataset_mode,
        enable_lidar: a.enable_lidar,
        enable_dvs: a.enable_dvs,
        enable_emergency: a.enable_emergency,
        seed: a.seed,
        workers: a
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        ..Default::default()
    };
    if !a.towns.is_empty() {
        cfg.towns = a
            .towns
            .iter()
            .map(|t| crate::world::resolve_template_alias(t).to_string())
            .collect();
    }
    if a.weather_conditions.iter().any(|w| w == "all") {
        cfg.weather_conditions = WEATHER_CONDITIONS.iter().map(|w| w.name.to_string()).collect();
    } else if !a.weather_conditions.is_empty() {
        cfg.weather_conditions = a.weather_conditions;
    }
    if cfg.dataset_mode && !cfg.weather_conditions.is_empty() && cfg.weather_conditions.len() != WEATHER_CONDITIONS.len() {
        log::info!("dataset_mode visits every weather condition; --weather_conditions ignored");
    }
    if let Some(r) = a.crossing_ratio {
        cfg.set_crossing_ratio(r);
    }
    for (name, v) in [("sudden_crossing_ratio", a.sudden_crossing_ratio), ("jaywalking_ratio", a.jaywalking_ratio)] {
        if let Some(p) = v {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("--{name} {p} is not a probability")));
            }
        }
    }
    cfg.sudden_crossing_ratio = a.sudden_crossing_ratio;
    cfg.jaywalking_ratio = a.jaywalking_ratio;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_cli<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = strip_prefix_token(argv.into_iter().map(Into::into).collect());
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        CliError {
            message: e.render().to_string(),
            code,
        }
    })?;
    match cli.command {
        Command::Generate(a) => into_config(a).map(Invocation::Generate).map_err(|e| CliError {
            message: format!("error: {e}"),
            code: EXIT_USAGE,
        }),
        Command::Stats { dir, json } => Ok(Invocation::Stats { dir, json }),
        Command::Verify { target, tolerance, dir } => Ok(Invocation::Verify { target, tolerance, dir }),
        Command::Describe => Ok(Invocation::Describe),
    }
}

/// Human-readable dump of the behavioural tables.
pub fn describe() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Archetypes");
    let _ = writeln!(
        s,
        "  {:<18}{:>6}  {:>11}  {:>11}  {:>9}  {:>8}",
        "name", "share", "speed m/s", "hesitate s", "attention", "p(cross)"
    );
    for a in ARCHETYPES {
        let _ = writeln!(
            s,
            "  {:<18}{:>6.2}  {:>5.1}-{:<5.1}  {:>5.1}-{:<5.1}  {:>9.1}  {:>8.2}",
            a.name.as_str(),
            a.proportion,
            a.speed_range.0,
            a.speed_range.1,
            a.hesitation_range.0,
            a.hesitation_range.1,
            a.attention,
            a.crossing_prob
        );
    }
    let _ = writeln!(s, "\nWeather conditions");
    for w in WEATHER_CONDITIONS {
        let _ = writeln!(s, "  {:<14}{:>5.0} deg  {:?}", w.name, w.sun_altitude, w.difficulty);
    }
    let _ = writeln!(s, "\nBehaviour state graph");
    for st in BehaviourState::ALL {
        let to: Vec<&str> = allowed_transitions(st).iter().map(|t| t.as_str()).collect();
        let _ = writeln!(s, "  {:<20} -> {}", st.as_str(), to.join(", "));
    }
    s
}

fn run_stats(dir: &Path, json: bool) -> i32 {
    let dirs = match clip_dirs_in(dir) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: cannot list {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    };
    let stats = dataset_stats(&dirs);
    if !json {
        println!("{stats}");
    }
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialise"));
    EXIT_OK
}

fn run_verify(target: f64, tolerance: f64, dir: &Path) -> i32 {
    let dirs = match clip_dirs_in(dir) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: cannot list {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    };
    let report = verify_crossing_ratio(&dataset_stats(&dirs), target, tolerance);
    println!(
        "measured {:.4} over {} pedestrians (95% CI {:.4}-{:.4}), target {:.2} +/- {:.2}: {:?}",
        report.measured, report.pedestrians, report.ci95.0, report.ci95.1, report.target, report.tolerance, report.verdict
    );
    match report.verdict {
        Verdict::Fail => EXIT_VERIFY_FAILED,
        Verdict::Pass | Verdict::Inconclusive => EXIT_OK,
    }
}

/// Runs an invocation end to end and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_cli(argv) {
        Ok(inv) => inv,
        Err(e) => {
            if e.code == EXIT_OK {
                print!("{}", e.message);
            } else {
                eprint!("{}", e.message);
                if !e.message.ends_with('\n') {
                    eprintln!();
                }
            }
            return e.code;
        }
    };
    match inv {
        Invocation::Generate(cfg) => match run_batch(&cfg) {
            Ok(report) => {
                println!(
                    "{} of {} clips written to {}",
                    report.clips_written,
                    report.clips_requested,
                    cfg.outputs_dir.display()
                );
                print!("{}", report.stats);
                if let Some(r) = &report.crossing_ratio {
                    println!("crossing share {:.4} vs target {:.2}: {:?}", r.measured, r.target, r.verdict);
                }
                if report.batch_failed {
                    eprintln!("error: {} clips failed", report.failures.len());
                    EXIT_BATCH_FAILED
                } else {
                    EXIT_OK
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_BATCH_FAILED
            }
        },
        Invocation::Stats { dir, json } => run_stats(&dir, json),
        Invocation::Verify { target, tolerance, dir } => run_verify(target, tolerance, &dir),
        Invocation::Describe => {
            print!("{}", describe());
            EXIT_OK
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generate(extra: &[&str]) -> Result<GenerationConfig, CliError> {
        let mut argv = vec!["pedsynth", "scenarios", "generate", "--outputs_dir", "out"];
        argv.extend_from_slice(extra);
        match parse_cli(argv)? {
            Invocation::Generate(c) => Ok(c),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimal_generate_command() {
        let c = generate(&[
            "--type",
            SCENARIO_TYPE,
            "--towns",
            "Town01",
            "--weather_conditions",
            "clear_noon",
            "--videos_per_weather",
            "2",
            "--crossing_ratio",
            "0.6",
        ])
        .unwrap();
        assert_eq!(c.towns, vec!["town_a".to_string()]);
        assert_eq!(c.weather_list(), vec!["clear_noon".to_string()]);
        assert_eq!(c.videos_per_weather, 2);
        assert_eq!(c.crossing_ratio, Some(0.6));
        assert_eq!(c.outputs_dir, PathBuf::from("out"));
    }

    #[test]
    fn out_of_band_ratio_warns() {
        let c = generate(&["--crossing_ratio", "0.9"]).unwrap();
        assert_eq!(c.crossing_ratio, Some(0.75));
        assert!(!c.warnings.is_empty());
    }

    #[test]
    fn weather_all_and_compat_flags() {
        let c = generate(&["--weather_conditions", "all", "--port", "2000", "--tm_port", "8000", "--host", "x"]).unwrap();
        assert_eq!(c.weather_list().len(), WEATHER_CONDITIONS.len());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(parse_cli(["pedsynth"]).unwrap_err().code, EXIT_USAGE);
        let e = generate(&["--type", "bogus"]).unwrap_err();
        assert_eq!(e.code, EXIT_USAGE);
        assert!(e.message.contains(SCENARIO_TYPE), "{}", e.message);
        assert!(generate(&["--jaywalking_ratio", "1.5"]).is_err());
        assert!(parse_cli(["pedsynth", "generate"]).is_err());
    }

    #[test]
    fn other_subcommands() {
        assert_eq!(parse_cli(["pedsynth", "describe"]).unwrap(), Invocation::Describe);
        assert_eq!(
            parse_cli(["pedsynth", "verify", "--target", "0.6", "d"]).unwrap(),
            Invocation::Verify { target: 0.6, tolerance: DEFAULT_TOLERANCE, dir: "d".into() }
        );
        let d = describe();
        for a in ARCHETYPES {
            assert!(d.contains(a.name.as_str()));
        }
        assert!(d.contains("PAUSING_MID_CROSS"));
    }
}
