use std::path::PathBuf;

use thiserror::Error;

use crate::behaviour::BehaviourState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown scenario type `{given}` (registered: {registered})")]
    UnknownScenarioType { given: String, registered: String },

    #[error("illegal transition {from:?} -> {to:?} for pedestrian {ped_id} at tick {tick}")]
    IllegalTransition {
        ped_id: u32,
        from: BehaviourState,
        to: BehaviourState,
        tick: u32,
    },

    #[error("simulation invariant violated: {0}")]
    Invariant(String),

    #[error("group {group_id} has {leaders} leaders")]
    GroupConsistency { group_id: u32, leaders: usize },

    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
