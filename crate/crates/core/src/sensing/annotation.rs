use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::camera::BoundingBox;
use super::weather::Difficulty;
use crate::behaviour::{ArchetypeName, BehaviourState, BehaviourType, Role};
use crate::error::{Error, Result};
use crate::world::LaneType;

/// Float written with exactly six decimals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fixed6(pub f64);

impl Fixed6 {
    fn text(self) -> String {
        let s = format!("{:.6}", self.0);
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            "0.000000".to_string()
        } else {
            s
        }
    }
}

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite float in annotation"));
        }
        let raw = RawValue::from_string(self.text()).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fixed6 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Fixed6)
    }
}

impl From<f64> for Fixed6 {
    fn from(x: f64) -> Self {
        Fixed6(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub x_min: Fixed6,
    pub y_min: Fixed6,
    pub x_max: Fixed6,
    pub y_max: Fixed6,
    pub clipped: bool,
}

impl From<&BoundingBox> for BoxRecord {
    fn from(b: &BoundingBox) -> Self {
        BoxRecord {
            x_min: b.x_min.into(),
            y_min: b.y_min.into(),
            x_max: b.x_max.into(),
            y_max: b.y_max.into(),
            clipped: b.clipped,
        }
    }
}

/// One (frame, pedestrian) record. Label, TTE and box are only present on
/// frames that pass the visibility gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub frame: u32,
    pub ped_id: u32,
    pub visible: bool,
    pub gate_stage_failed: u8,
    pub state: BehaviourState,
    pub lane_type: LaneType,
    pub label_raw: Option<u8>,
    pub label: Option<u8>,
    pub tte: Option<i64>,
    pub bbox: Option<BoxRecord>,
    pub distance_to_ego: Fixed6,
    pub position: [Fixed6; 2],
    pub archetype: ArchetypeName,
    pub group_id: Option<u32>,
    pub behaviour_type: Option<BehaviourType>,
    /// Reserved for 2D pose keypoints; never populated.
    pub keypoints: Option<Vec<[Fixed6; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequenceLabel {
    Crosser,
    NonCrosser,
    /// Never passed the visibility gate.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianRecord {
    pub id: u32,
    pub archetype: ArchetypeName,
    pub role: Role,
    pub behaviour_type: Option<BehaviourType>,
    pub group_id: Option<u32>,
    pub sequence_label: SequenceLabel,
    pub first_cross_frame: Option<u32>,
    pub visible_frames: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipManifest {
    pub clip_id: String,
    pub seed: u64,
    pub town: String,
    pub weather: String,
    pub difficulty: Difficulty,
    pub fps: u32,
    pub frame_count: u32,
    pub pedestrian_count: u32,
    pub vehicle_count: u32,
    pub annotated_samples: u64,
    pub pedestrians: Vec<PedestrianRecord>,
    /// Sensors requested on the command line; only RGB geometry is simulated.
    pub sensors: serde_json::Value,
    pub spawn_plan_digest: String,
    pub spawn_plan: serde_json::Value,
    pub config: serde_json::Value,
    /// Notes such as reduced vehicle counts.
    pub notes: Vec<String>,
}

fn write_files(dir: &Path, manifest: &ClipManifest, annotations: &[FrameAnnotation]) -> Result<()> {
    let mpath = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))?;

    let apath = dir.join("annotations.jsonl");
    let file = fs::File::create(&apath).map_err(|e| Error::io(&apath, e))?;
    let mut w = BufWriter::new(file);
    for a in annotations {
        serde_json::to_writer(&mut w, a)?;
        w.write_all(b"\n").map_err(|e| Error::io(&apath, e))?;
    }
    w.flush().map_err(|e| Error::io(&apath, e))?;
    Ok(())
}

/// Writes `<clip_id>/manifest.json` and `<clip_id>/annotations.jsonl`.
/// Files are staged in a hidden directory and moved into place, so a failed
/// write leaves nothing behind.
pub fn write_clip(manifest: &ClipManifest, annotations: &[FrameAnnotation], out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let staging = out_dir.join(format!(".{}.partial", manifest.clip_id));
    let target = out_dir.join(&manifest.clip_id);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
    let result = write_files(&staging, manifest, annotations).and_then(|()| {
        if target.exists() {
            fs::remove_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        }
        fs::rename(&staging, &target).map_err(|e| Error::io(&target, e))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result.map(|()| target)
}

pub fn read_annotations(path: &Path) -> Result<Vec<FrameAnnotation>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
