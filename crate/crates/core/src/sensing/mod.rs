//! Camera model, visibility gate, crossing labels, annotation files and
//! dataset statistics.

mod annotation;
mod camera;
mod gate;
mod labels;
mod stats;
mod weather;

pub use annotation::{
    read_annotations, write_clip, BoxRecord, ClipManifest, Fixed6, FrameAnnotation, PedestrianRecord,
    SequenceLabel,
};
pub use camera::{project_bbox, BoundingBox, CameraModel, PED_BODY_DEPTH, PED_BODY_WIDTH};
pub use gate::{gate_stages, visibility_gate, GateParams, GateResult};
pub use labels::{compute_tte, compute_tte_at, raw_crossing_label, raw_label_for, sequence_label, smooth_labels, SMOOTHING_WINDOW};
pub use stats::{clip_dirs_in, dataset_stats, stats_from_manifests, DatasetStats, StatsError};
pub use weather::{weather_by_name, weather_index, Difficulty, WeatherCondition, WEATHER_CONDITIONS};
