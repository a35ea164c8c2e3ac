//! Fixed-timestep teleoperation harness.
//!
//! A simulated end-effector is driven by a 30 Hz input stream through an
//! admittance model; fixtures are evaluated every frame and the episode is
//! logged frame by frame.

mod admittance;
mod archetypes;
mod episode;
mod generate;
mod input;
mod scene;
pub mod shapes;
mod state;
mod tasks;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldmap::FieldMapError;
use crate::fixtures::FixtureError;
use crate::geom::GeomError;
use crate::score::ScoreError;

pub use admittance::{step, AdmittanceParams};
pub use episode::{run_episode, EpisodeBounds, EpisodeRunner, EpisodeLog, EpisodeSummary, Event, EventKind, FrameFlags, FrameLog};
pub use archetypes::{archetype_document, pillar_approach_document, pillars_mesh, EXCHANGE_ROUTE, PATH_ROUTE, PILLARS, PILLAR_HEIGHT, PILLAR_RADIUS, PILLAR_ROUTE_X, RINGS_ALPHA_DEG, RINGS_TARGET};
pub use generate::{
    archetype, gen_input, gen_input_for_scene, PerturbationSpec, ANGLE_PER_MM, DWELL_FRAMES, FREQUENCY_BAND, FUMBLE_FRAMES, TAIL_CREEP, TAIL_FRAMES,
};
pub use input::{InputFrame, InputStream, CSV_HEADER, RATE_TOLERANCE};
pub use scene::{
    FixtureDoc, GainsDoc, GeometryDoc, Goal, GoalDoc, LimitsDoc, MapDoc, MetricReference, Scene, SceneDocument, ScriptDoc,
    ScriptHints, DEFAULT_SCRIPT_SPEED, SCENE_SCHEMA_VERSION,
};
pub use state::EEState;
pub use tasks::{TaskEntry, TaskKind, TaskLibrary, TaskRole};

/// Loop rate, Hz.
pub const FRAME_RATE: f64 = 30.0;
/// Fixed timestep, s.
pub const DT: f64 = 1.0 / FRAME_RATE;
/// Default start-region radius, mm.
pub const DEFAULT_START_RADIUS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown task kind {0:?}")]
    UnknownTask(String),
    #[error("{field}: {message}")]
    Scene { field: String, message: String },
    #[error("unsupported schema_version {0}")]
    Schema(u32),
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input stream row {row}: {message}")]
    Stream { row: usize, message: String },
    #[error("input stream row {row}: time {found} s is off the 30 Hz grid (expected {expected} s)")]
    RateMismatch { row: usize, expected: f64, found: f64 },
    #[error("input stream is empty")]
    EmptyStream,
    #[error("scene units are {scene}, input stream units are {stream}")]
    UnitMismatch { scene: LengthUnit, stream: LengthUnit },
    #[error("unknown length unit {0:?}")]
    UnknownUnit(String),
    #[error("admittance: {0}")]
    Admittance(String),
    #[error("negative perturbation amplitude {0}")]
    BadAmplitude(f64),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Map(#[from] FieldMapError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

impl SimError {
    pub(crate) fn scene(field: impl Into<String>, message: impl fmt::Display) -> SimError {
        SimError::Scene { field: field.into(), message: message.to_string() }
    }

    /// True for errors raised while reading files.
    pub fn is_io(&self) -> bool {
        matches!(self, SimError::Io { .. })
    }
}

/// Length unit declared by scene documents and input streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LengthUnit {
    #[default]
    #[serde(rename = "mm")]
    Millimetre,
    #[serde(rename = "m")]
    Metre,
}

impl LengthUnit {
    /// Factor converting this unit to millimetres.
    pub fn to_mm(self) -> f64 {
        match self {
            LengthUnit::Millimetre => 1.0,
            LengthUnit::Metre => 1000.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LengthUnit::Millimetre => "mm",
            LengthUnit::Metre => "m",
        }
    }
}

impl fmt::Display for LengthUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for LengthUnit {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "mm" => Ok(LengthUnit::Millimetre),
            "m" => Ok(LengthUnit::Metre),
            other => Err(SimError::UnknownUnit(other.to_string())),
        }
    }
}
