//! Haptic assistance laws.
//!
//! Each fixture produces an elastic term (proportional to the mapped error)
//! and a viscous term (proportional to its rate of change), combined as
//! `F = K_F·F_elastic + η_F·F_viscous` and `T = K_T·T_elastic + η_T·T_viscous`
//! and then saturated to the gain set's limits.

mod laws;
mod set;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldmap::{FieldMapError, MapParams};
use crate::geom::{ConeFrame, NormalMode, Polyline, TriMesh, Vec3};

pub use laws::{
    combine_and_clamp, insertion_guidance, obstacle_avoidance, surface_guidance, trajectory_guidance,
    relax_factor, FixtureFlags, FixtureOutput, LawState,
};
pub use set::{Evaluation, FixtureReport, FixtureSet};

pub const DEFAULT_F_MAX: f64 = 5.0;
pub const DEFAULT_T_MAX: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixtureError {
    #[error("non-finite {0} in fixture output")]
    NonFinite(&'static str),
    #[error("proximity result has no {0}")]
    Missing(&'static str),
    #[error("fixture kind {kind:?} cannot bind {geometry} geometry")]
    GeometryMismatch { kind: FixtureKind, geometry: &'static str },
    #[error("surface guidance needs a torque map")]
    MissingTorqueMap,
    #[error("gain {name} must be finite and non-negative, got {value}")]
    BadGain { name: &'static str, value: f64 },
    #[error("saturation limit {name} must be positive, got {value}")]
    BadLimit { name: &'static str, value: f64 },
    #[error(transparent)]
    Map(#[from] FieldMapError),
}

/// Visco-elastic gains and saturation limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    /// N
    pub k_f: f64,
    /// N·s
    pub eta_f: f64,
    /// N·m
    pub k_t: f64,
    /// N·m·s
    pub eta_t: f64,
    #[serde(default = "default_f_max")]
    pub f_max: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_f_max() -> f64 {
    DEFAULT_F_MAX
}

fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}

impl Default for GainSet {
    fn default() -> Self {
        Self { k_f: 1.0, eta_f: 0.0, k_t: 0.0, eta_t: 0.0, f_max: DEFAULT_F_MAX, t_max: DEFAULT_T_MAX }
    }
}

impl GainSet {
    pub fn validate(&self) -> Result<(), FixtureError> {
        for (name, value) in [("k_f", self.k_f), ("eta_f", self.eta_f), ("k_t", self.k_t), ("eta_t", self.eta_t)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(FixtureError::BadGain { name, value });
            }
        }
        for (name, value) in [("f_max", self.f_max), ("t_max", self.t_max)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FixtureError::BadLimit { name, value });
            }
        }
        Ok(())
    }
}

/// Force (N) and torque (N·m) with the raw law terms kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
    /// Pre-gain, pre-clamp law outputs.
    pub elastic_force: Vec3,
    pub viscous_force: Vec3,
    pub elastic_torque: Vec3,
    pub viscous_torque: Vec3,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        force: Vec3::ZERO,
        torque: Vec3::ZERO,
        elastic_force: Vec3::ZERO,
        viscous_force: Vec3::ZERO,
        elastic_torque: Vec3::ZERO,
        viscous_torque: Vec3::ZERO,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Trajectory,
    Obstacle,
    Surface,
    Insertion,
}

/// Which mesh feature an obstacle fixture measures distance to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshQuery {
    #[default]
    Vertex,
    Surface,
}

#[derive(Debug, Clone)]
pub enum FixtureGeometry {
    Polyline(Arc<Polyline>),
    Mesh(Arc<TriMesh>),
    Cone(ConeFrame),
}

impl FixtureGeometry {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FixtureGeometry::Polyline(_) => "polyline",
            FixtureGeometry::Mesh(_) => "mesh",
            FixtureGeometry::Cone(_) => "cone",
        }
    }
}

/// A fixture law bound to its reference geometry and parameters.
#[derive(Debug, Clone)]
pub struct FixtureBinding {
    pub id: String,
    pub kind: FixtureKind,
    pub geometry: FixtureGeometry,
    pub force_map: MapParams,
    /// Angular error map; used by surface guidance only (trajectory torque
    /// acts on the raw angle).
    pub torque_map: Option<MapParams>,
    pub gains: GainSet,
    pub enabled: bool,
    /// Evaluated and logged, never applied.
    pub shadow: bool,
    pub mesh_query: MeshQuery,
    pub normal_mode: NormalMode,
}

impl FixtureBinding {
    pub fn new(id: impl Into<String>, kind: FixtureKind, geometry: FixtureGeometry, force_map: MapParams, gains: GainSet) -> Self {
        Self {
            id: id.into(),
            kind,
            geometry,
            force_map,
            torque_map: None,
            gains,
            enabled: true,
            shadow: false,
            mesh_query: MeshQuery::default(),
            normal_mode: NormalMode::default(),
        }
    }

    pub fn with_torque_map(mut self, map: MapParams) -> Self {
        self.torque_map = Some(map);
        self
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        let ok = matches!(
            (self.kind, &self.geometry),
            (FixtureKind::Trajectory, FixtureGeometry::Polyline(_))
                | (FixtureKind::Obstacle, FixtureGeometry::Mesh(_))
                | (FixtureKind::Surface, FixtureGeometry::Mesh(_))
                | (FixtureKind::Insertion, FixtureGeometry::Cone(_))
        );
        if !ok {
            return Err(FixtureError::GeometryMismatch { kind: self.kind, geometry: self.geometry.kind_name() });
        }
        if self.kind == FixtureKind::Surface && self.torque_map.is_none() {
            return Err(FixtureError::MissingTorqueMap);
        }
        self.force_map.validate()?;
        if let Some(t) = &self.torque_map {
            t.validate()?;
        }
        self.gains.validate()
    }
}
