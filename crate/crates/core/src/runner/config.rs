use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::behaviour::FsmParams;
use crate::error::{Error, Result};
use crate::sensing::{weather_by_name, WEATHER_CONDITIONS};
use crate::spawner::CrossingRateConfig;
use crate::world::{resolve_template_alias, TEMPLATES};

/// The only registered scenario type.
pub const SCENARIO_TYPE: &str = "free_drive_front_cam_v2";
pub const REGISTERED_TYPES: [&str; 1] = [SCENARIO_TYPE];
/// Supported band for the crossing ratio target.
pub const CROSSING_RATIO_BAND: (f64, f64) = (0.40, 0.75);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    /// Not recorded in manifests so that output trees do not depend on
    /// where they were written.
    #[serde(skip)]
    pub outputs_dir: PathBuf,
    pub scenario_type: String,
    /// Canonical template names.
    pub towns: Vec<String>,
    pub weather_conditions: Vec<String>,
    pub videos_per_weather: u32,
    pub dataset_mode: bool,
    pub crossing_ratio: Option<f64>,
    pub sudden_crossing_ratio: Option<f64>,
    pub jaywalking_ratio: Option<f64>,
    pub enable_lidar: bool,
    pub enable_dvs: bool,
    pub enable_emergency: bool,
    pub seed: u64,
    pub fps: u32,
    pub clip_duration_range: (f64, f64),
    /// Base layer parameters before flag overrides and target scaling.
    pub layers: CrossingRateConfig,
    pub fsm: FsmParams,
    /// Parallel clip workers. Output does not depend on it.
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            outputs_dir: PathBuf::new(),
            scenario_type: SCENARIO_TYPE.to_string(),
            towns: TEMPLATES.iter().map(|t| t.to_string()).collect(),
            weather_conditions: vec!["clear_noon".to_string()],
            videos_per_weather: 1,
            dataset_mode: false,
            crossing_ratio: None,
            sudden_crossing_ratio: None,
            jaywalking_ratio: None,
            enable_lidar: false,
            enable_dvs: false,
            enable_emergency: false,
            seed: 0,
            fps: crate::FPS,
            clip_duration_range: (10.0, 15.0),
            layers: CrossingRateConfig::default(),
            fsm: FsmParams::default(),
            workers: 1,
            warnings: Vec::new(),
        }
    }
}

impl GenerationConfig {
    /// Clamps the crossing ratio into the supported band, recording a
    /// warning when it had to move.
    pub fn set_crossing_ratio(&mut self, ratio: f64) {
        let (lo, hi) = CROSSING_RATIO_BAND;
        let clamped = ratio.clamp(lo, hi);
        if clamped != ratio {
            let msg = format!("crossing_ratio {ratio} outside [{lo}, {hi}], clamped to {clamped}");
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
        self.crossing_ratio = Some(clamped);
    }

    /// Weather list actually iterated; every registered condition in
    /// dataset mode.
    pub fn weather_list(&self) -> Vec<String> {
        if self.dataset_mode {
            WEATHER_CONDITIONS.iter().map(|w| w.name.to_string()).collect()
        } else {
            self.weather_conditions.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !REGISTERED_TYPES.contains(&self.scenario_type.as_str()) {
            return Err(Error::UnknownScenarioType {
                given: self.scenario_type.clone(),
                registered: REGISTERED_TYPES.join(", "),
            });
        }
        if self.videos_per_weather < 1 {
            return Err(Error::Config("videos_per_weather must be at least 1".into()));
        }
        if self.towns.is_empty() {
            return Err(Error::Config("no towns configured".into()));
        }
        for t in &self.towns {
            if !TEMPLATES.contains(&resolve_template_alias(t)) {
                return Err(Error::Config(format!(
                    "unknown town '{t}' (known: {})",
                    TEMPLATES.join(", ")
                )));
            }
        }
        let weathers = self.weather_list();
        if weathers.is_empty() {
            return Err(Error::Config("no weather conditions configured".into()));
        }
        for w in &weathers {
            if weather_by_name(w).is_none() {
                return Err(Error::Config(format!("unknown weather condition '{w}'")));
            }
        }
        let (lo, hi) = self.clip_duration_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config("invalid clip duration range".into()));
        }
        if self.fps == 0 {
            return Err(Error::Config("fps must be positive".into()));
        }
        self.resolved_rates().0.validate()
    }

    /// Layer parameters after the sudden/jaywalking flag overrides and the
    /// crossing-ratio target mapping.
    pub fn resolved_rates(&self) -> (CrossingRateConfig, Option<String>) {
        let mut rates = self.layers;
        rates.behaviour_mix = rates
            .behaviour_mix
            .with_overrides(self.sudden_crossing_ratio, self.jaywalking_ratio);
        if let Some(j) = self.jaywalking_ratio {
            rates.jaywalker_injection_probability = j.clamp(0.0, 1.0);
        }
        match self.crossing_ratio {
            Some(t) => rates.resolve_target(t),
            None => (rates, None),
        }
    }

    /// Sensor metadata recorded in manifests.
    pub fn sensors(&self) -> serde_json::Value {
        serde_json::json!({
            "rgb": true,
            "lidar": self.enable_lidar,
            "dvs": self.enable_dvs,
            "emergency": self.enable_emergency,
            "simulated": ["rgb_geometry"],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_ratio_is_clamped_with_warning() {
        let mut c = GenerationConfig::default();
        c.set_crossing_ratio(0.9);
        assert_eq!(c.crossing_ratio, Some(0.75));
        assert_eq!(c.warnings.len(), 1);
        c.set_crossing_ratio(0.6);
        assert_eq!(c.crossing_ratio, Some(0.6));
        assert_eq!(c.warnings.len(), 1);
        c.set_crossing_ratio(0.1);
        assert_eq!(c.crossing_ratio, Some(0.40));
    }

    #[test]
    fn dataset_mode_visits_every_weather() {
        let c = GenerationConfig {
            dataset_mode: true,
            ..Default::default()
        };
        assert_eq!(c.weather_list().len(), WEATHER_CONDITIONS.len());
        assert_eq!(GenerationConfig::default().weather_list(), vec!["clear_noon".to_string()]);
    }

    #[test]
    fn validation_rejects_bad_input() {
        let ok = GenerationConfig::default();
        ok.validate().unwrap();
        let bad = [
            GenerationConfig { scenario_type: "nope".into(), ..ok.clone() },
            GenerationConfig { videos_per_weather: 0, ..ok.clone() },
            GenerationConfig { towns: vec!["atlantis".into()], ..ok.clone() },
            GenerationConfig { weather_conditions: vec!["snow".into()], ..ok.clone() },
            GenerationConfig { clip_duration_range: (5.0, 1.0), ..ok.clone() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let e = GenerationConfig { scenario_type: "nope".into(), ..ok }.validate().unwrap_err();
        assert!(e.to_string().contains(SCENARIO_TYPE));
    }

    #[test]
    fn flag_overrides_reach_the_layers() {
        let c = GenerationConfig {
            jaywalking_ratio: Some(0.0),
            sudden_crossing_ratio: Some(0.5),
            ..Default::default()
        };
        let (r, _) = c.resolved_rates();
        assert_eq!(r.jaywalker_injection_probability, 0.0);
        assert_eq!(r.behaviour_mix.jaywalk, 0.0);
        assert_eq!(r.behaviour_mix.sudden, 0.5);
        let mut c = GenerationConfig::default();
        c.set_crossing_ratio(0.55);
        let (r, _) = c.resolved_rates();
        assert!((r.expected_committed_fraction() - 0.55).abs() < 1e-9);
    }
}
