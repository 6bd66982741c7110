use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::annotation::{ClipManifest, SequenceLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsError {
    pub path: PathBuf,
    pub reason: String,
}

/// Dataset summary in the shape of the reference statistics table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_clips: u64,
    pub total_frames: u64,
    pub avg_frames_per_clip: f64,
    pub avg_clip_duration_s: f64,
    pub unique_pedestrians: u64,
    pub crossing: u64,
    pub non_crossing: u64,
    /// Pedestrians that never passed the gate; not counted above.
    pub excluded: u64,
    pub crossing_share: f64,
    /// C/NC ratio; absent when there are no non-crossers.
    pub c_nc_ratio: Option<f64>,
    pub annotated_samples: u64,
    pub avg_samples_per_clip: f64,
    pub weather_conditions: BTreeMap<String, u64>,
    pub towns: BTreeMap<String, u64>,
    pub sensor_modalities: Vec<String>,
    pub errors: Vec<StatsError>,
}

fn load_manifest(dir: &Path) -> Result<ClipManifest, String> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let m: ClipManifest = serde_json::from_str(&text).map_err(|e| format!("malformed manifest: {e}"))?;
    if m.frame_count == 0 {
        return Err("manifest has zero frames".into());
    }
    Ok(m)
}

pub fn stats_from_manifests<'a, I>(manifests: I) -> DatasetStats
where
    I: IntoIterator<Item = &'a ClipManifest>,
{
    let mut s = DatasetStats::default();
    let mut sensors: Vec<String> = Vec::new();
    let mut fps_sum = 0.0;
    for m in manifests {
        s.total_clips += 1;
        s.total_frames += u64::from(m.frame_count);
        fps_sum += f64::from(m.frame_count) / f64::from(m.fps.max(1));
        s.annotated_samples += m.annotated_samples;
        for p in &m.pedestrians {
            match p.sequence_label {
                SequenceLabel::Crosser => s.crossing += 1,
                SequenceLabel::NonCrosser => s.non_crossing += 1,
                SequenceLabel::Excluded => s.excluded += 1,
            }
        }
        *s.weather_conditions.entry(m.weather.clone()).or_default() += 1;
        *s.towns.entry(m.town.clone()).or_default() += 1;
        if let Some(obj) = m.sensors.as_object() {
            for (k, v) in obj {
                if v.as_bool() == Some(true) && !sensors.contains(k) {
                    sensors.push(k.clone());
                }
            }
        }
    }
    s.unique_pedestrians = s.crossing + s.non_crossing;
    if s.total_clips > 0 {
        let n = s.total_clips as f64;
        s.avg_frames_per_clip = s.total_frames as f64 / n;
        s.avg_clip_duration_s = fps_sum / n;
        s.avg_samples_per_clip = s.annotated_samples as f64 / n;
    }
    if s.unique_pedestrians > 0 {
        s.crossing_share = s.crossing as f64 / s.unique_pedestrians as f64;
    }
    if s.non_crossing > 0 {
        s.c_nc_ratio = Some(s.crossing as f64 / s.non_crossing as f64);
    }
    sensors.sort();
    s.sensor_modalities = sensors;
    s
}

/// Aggregates clip manifests. Unreadable or malformed clips are listed in
/// `errors` and left out of the totals.
pub fn dataset_stats<P: AsRef<Path>>(clip_dirs: &[P]) -> DatasetStats {
    let mut good = Vec::new();
    let mut errors = Vec::new();
    for dir in clip_dirs {
        let dir = dir.as_ref();
        match load_manifest(dir) {
            Ok(m) => good.push(m),
            Err(reason) => errors.push(StatsError { path: dir.to_path_buf(), reason }),
        }
    }
    let mut s = stats_from_manifests(&good);
    s.errors = errors;
    s
}

/// Clip directories directly under `root`, sorted by name.
pub fn clip_dirs_in(root: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if entry.file_type()?.is_dir() && !name.starts_with('.') {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |k: u64| {
            if self.unique_pedestrians == 0 {
                0.0
            } else {
                100.0 * k as f64 / self.unique_pedestrians as f64
            }
        };
        writeln!(f, "{:<40}{:>14}", "Total video clips", self.total_clips)?;
        writeln!(f, "{:<40}{:>14}", "Total frames", self.total_frames)?;
        writeln!(f, "{:<40}{:>14.1}", "Avg. frames per clip", self.avg_frames_per_clip)?;
        writeln!(f, "{:<40}{:>13.1}s", "Avg. clip duration", self.avg_clip_duration_s)?;
        writeln!(f, "{:<40}{:>14}", "Total unique pedestrians", self.unique_pedestrians)?;
        writeln!(f, "{:<40}{:>6} ({:.1}%)", "  Crossing (C)", self.crossing, pct(self.crossing))?;
        writeln!(f, "{:<40}{:>6} ({:.1}%)", "  Non-crossing (NC)", self.non_crossing, pct(self.non_crossing))?;
        match self.c_nc_ratio {
            Some(r) => writeln!(f, "{:<40}{:>12.2}:1", "C/NC ratio", r)?,
            None => writeln!(f, "{:<40}{:>14}", "C/NC ratio", "n/a")?,
        }
        writeln!(f, "{:<40}{:>14}", "Total annotated samples (ped-frames)", self.annotated_samples)?;
        writeln!(f, "{:<40}{:>14.1}", "Avg. samples per clip", self.avg_samples_per_clip)?;
        writeln!(f, "{:<40}{:>14}", "Weather conditions", self.weather_conditions.len())?;
        writeln!(f, "{:<40}{:>14}", "Towns", self.towns.len())?;
        writeln!(f, "{:<40}{:>14}", "Sensor modalities (metadata)", self.sensor_modalities.len())?;
        if self.excluded > 0 {
            writeln!(f, "{:<40}{:>14}", "Never visible (excluded)", self.excluded)?;
        }
        for e in &self.errors {
            writeln!(f, "error: {}: {}", e.path.display(), e.reason)?;
        }
        Ok(())
    }
}
