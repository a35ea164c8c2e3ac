//! Geometry kernel: exact proximity queries against polylines and triangle
//! meshes, a bounding-volume hierarchy for the mesh queries, axis-angle
//! rotation and insertion-cone coordinates.
//!
//! All lengths are millimetres. Every structure here is immutable after
//! construction, so queries can be shared freely across threads.

mod bvh;
mod cone;
mod mesh;
pub mod obj;
mod polyline;
mod rotation;
mod vec3;

use thiserror::Error;

pub use bvh::Aabb;
pub use cone::{ConeCoords, ConeFrame, DEFAULT_RELAX_FRACTION};
pub use mesh::{closest_point_on_triangle, NormalMode, TriMesh};
pub use polyline::{Polyline, PolylineProjection};
pub use rotation::{rotate_vector, Quat, Rotated};
pub use vec3::Vec3;

/// Segment lengths and axis norms below this are treated as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-9;

/// Result of a closest-feature query.
///
/// `distance` is always computed as `‖query − point‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximityResult {
    pub point: Vec3,
    /// Unit vector from the query towards `point`; `None` when the query lies
    /// on the feature.
    pub direction: Option<Vec3>,
    pub normal: Option<Vec3>,
    pub tangent: Option<Vec3>,
    pub distance: f64,
    /// Segment, vertex or face index depending on the query.
    pub feature_id: usize,
}

impl ProximityResult {
    pub(crate) fn new(query: Vec3, point: Vec3, feature_id: usize) -> Self {
        let delta = point - query;
        let distance = delta.norm();
        Self {
            point,
            direction: if distance > 0.0 { Some(delta / distance) } else { None },
            normal: None,
            tangent: None,
            distance,
            feature_id,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("segment {index} is degenerate (length {length:e} mm)")]
    DegenerateSegment { index: usize, length: f64 },
    #[error("non-finite coordinate in {what} {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("face {face} references vertex {vertex}, mesh has {count} vertices")]
    BadIndex { face: usize, vertex: usize, count: usize },
    #[error("face {0} has zero area")]
    DegenerateFace(usize),
    #[error("vertex {0} is not referenced by any face")]
    UnreferencedVertex(usize),
    #[error("vertex {0} has no well-defined normal (incident faces cancel)")]
    DegenerateVertexNormal(usize),
    #[error("insertion cone start and target coincide")]
    ZeroHeightCone,
    #[error("insertion angle must lie in (0, 90) degrees, got {0}")]
    BadConeAngle(f64),
    #[error("relax fraction must lie in [0, 1], got {0}")]
    BadRelaxFraction(f64),
    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },
}
