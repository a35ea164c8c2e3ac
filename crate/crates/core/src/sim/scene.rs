use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LengthUnit, SimError, TaskKind, TaskLibrary, DEFAULT_START_RADIUS};
use crate::fieldmap::{MapParams, Profile, DEFAULT_GAIN_CONSTANT, DEFAULT_SMOOTHING_ALPHA};
use crate::fixtures::{
    FixtureBinding, FixtureGeometry, FixtureKind, GainSet, MeshQuery, DEFAULT_F_MAX, DEFAULT_T_MAX,
};
use crate::geom::{obj, ConeFrame, NormalMode, Polyline, Quat, TriMesh, Vec3, DEFAULT_RELAX_FRACTION};
use crate::score::ScoreWeights;

pub const SCENE_SCHEMA_VERSION: u32 = 1;

/// Scene file as written on disk (TOML). Lengths are in `units`; angles in
/// radians except the cone's `alpha_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub schema_version: u32,
    pub name: String,
    pub task: String,
    #[serde(default = "default_units")]
    pub units: String,
    pub start: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_orientation: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsDoc>,
    pub goal: GoalDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<ScriptDoc>,
    #[serde(default)]
    pub geometry: Vec<GeometryDoc>,
    #[serde(default)]
    pub fixture: Vec<FixtureDoc>,
}

fn default_units() -> String {
    "mm".into()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropoff: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grab_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptDoc {
    /// Nominal tool speed, length units per second.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_axis: Option<[f64; 3]>,
    /// Polyline geometry the generated script follows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDoc {
    pub id: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
    /// OBJ path, relative to the scene file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<[i64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureDoc {
    pub id: String,
    pub kind: String,
    pub geometry: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_mode: Option<String>,
    pub force_map: MapDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque_map: Option<MapDoc>,
    pub gains: GainsDoc,
}

/// Error-map parameters. Give either `profile` or the raw exponent sign
/// `delta`. Insertion maps take their threshold from the cone.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steepness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

impl SceneDocument {
    pub fn parse(text: &str) -> Result<SceneDocument, SimError> {
        toml::from_str(text).map_err(|e| SimError::scene("document", e.message().trim().to_string() + &location(text, e.span())))
    }

    pub fn to_toml(&self) -> Result<String, SimError> {
        toml::to_string(self).map_err(|e| SimError::scene("document", e))
    }
}

fn location(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Completion condition of an episode.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    /// Within `tolerance` of the endpoint of a reference polyline.
    PathEnd { end: Vec3, tolerance: f64 },
    /// Within `tolerance` of a target point.
    Reach { target: Vec3, tolerance: f64 },
    /// Pass within `radius` of every gate, in order.
    Gates { gates: Vec<Vec3>, radius: f64 },
    /// Grab the object at `pickup` and release it within `zone_radius` of
    /// `dropoff`. Releasing elsewhere is a drop.
    Deliver { pickup: Vec3, dropoff: Vec3, grab_radius: f64, zone_radius: f64 },
}

/// Geometry the per-frame distance and angular errors are measured against.
#[derive(Debug, Clone)]
pub enum MetricReference {
    /// Distance to the polyline; angle between the tool axis and the local tangent.
    Polyline(Arc<Polyline>),
    /// Radial distance from the axis; angle between the tool axis and the cone axis.
    Cone(ConeFrame),
    /// Distance to the surface; angle between the tool axis and the tangent plane.
    Mesh(Arc<TriMesh>, NormalMode),
}

/// Hints for the input generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptHints {
    /// mm/s
    pub speed: f64,
    pub perturbation_axis: Option<Vec3>,
    /// Waypoints of the nominal route, mm.
    pub route: Option<Vec<Vec3>>,
}

pub const DEFAULT_SCRIPT_SPEED: f64 = 15.0;

/// A validated scene with all lengths in millimetres.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub task: TaskKind,
    /// Units the document was written in; input streams must match.
    pub units: LengthUnit,
    pub start: Vec3,
    pub start_orientation: Quat,
    pub start_radius: f64,
    pub weights: ScoreWeights,
    pub goal: Goal,
    pub geometry: Vec<(String, FixtureGeometry)>,
    pub fixtures: Vec<FixtureBinding>,
    pub metric_reference: Option<MetricReference>,
    pub f_max: f64,
    pub t_max: f64,
    pub smoothing_alpha: f64,
    pub script: ScriptHints,
}

impl Scene {
    /// Reads and validates a scene file. Mesh files resolve relative to it.
    pub fn load(path: &Path) -> Result<Scene, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scene::from_toml(&text, &base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Scene, SimError> {
        Scene::from_document(&SceneDocument::parse(text)?, base_dir)
    }

    pub fn from_document(doc: &SceneDocument, base_dir: &Path) -> Result<Scene, SimError> {
        if doc.schema_version != SCENE_SCHEMA_VERSION {
            return Err(SimError::Schema(doc.schema_version));
        }
        let units: LengthUnit = doc.units.parse().map_err(|_| SimError::scene("units", format!("expected \"mm\" or \"m\", got {:?}", doc.units)))?;
        let cv = Conv { s: units.to_mm() };
        let task: TaskKind = doc.task.parse().map_err(|e: SimError| SimError::scene("task", e))?;

        let start = cv.point("start", doc.start)?;
        let start_orientation = match doc.start_orientation {
            None => Quat::IDENTITY,
            Some(q) => {
                let q = Quat::from(q);
                if !(q.norm() > 1e-9 && q.norm().is_finite()) {
                    return Err(SimError::scene("start_orientation", "quaternion must be finite and non-zero"));
                }
                q.normalized()
            }
        };
        let start_radius = cv.length("start_radius", doc.start_radius.unwrap_or(DEFAULT_START_RADIUS / cv.s))?;
        let weights = match &doc.weights {
            None => TaskLibrary::builtin()
                .weights(task.id())
                .ok_or_else(|| SimError::scene("weights", "task has no default row"))?,
            Some(row) => parse_weights(row)?,
        };

        let mut geometry: Vec<(String, FixtureGeometry)> = Vec::with_capacity(doc.geometry.len());
        for (i, g) in doc.geometry.iter().enumerate() {
            let field = format!("geometry[{i}]");
            if g.id.trim().is_empty() {
                return Err(SimError::scene(format!("{field}.id"), "must not be empty"));
            }
            if geometry.iter().any(|(id, _)| id == &g.id) {
                return Err(SimError::scene(format!("{field}.id"), format!("duplicate geometry id {:?}", g.id)));
            }
            geometry.push((g.id.clone(), build_geometry(&field, g, &cv, base_dir)?));
        }
        let lookup = |field: &str, id: &str| -> Result<&FixtureGeometry, SimError> {
            geometry
                .iter()
                .find(|(gid, _)| gid == id)
                .map(|(_, g)| g)
                .ok_or_else(|| SimError::scene(field, format!("unknown geometry {id:?}")))
        };

        let mut fixtures = Vec::with_capacity(doc.fixture.len());
        for (i, f) in doc.fixture.iter().enumerate() {
            let field = format!("fixture[{i}]");
            if f.id.trim().is_empty() {
                return Err(SimError::scene(format!("{field}.id"), "must not be empty"));
            }
            if fixtures.iter().any(|b: &FixtureBinding| b.id == f.id) {
                return Err(SimError::scene(format!("{field}.id"), format!("duplicate fixture id {:?}", f.id)));
            }
            let geom = lookup(&format!("{field}.geometry"), &f.geometry)?.clone();
            fixtures.push(build_fixture(&field, f, geom, &cv)?);
        }

        let metric_reference = match &doc.metric_reference {
            Some(id) => Some(reference_for(lookup("metric_reference", id)?, &fixtures, id)),
            None => fixtures.first().map(|b| reference_for(&b.geometry, &fixtures, &b.id)),
        };

        let goal = build_goal(&doc.goal, &cv, &lookup, &fixtures)?;

        let limits = doc.limits.clone().unwrap_or_default();
        let f_max = positive("limits.f_max", limits.f_max.unwrap_or(DEFAULT_F_MAX))?;
        let t_max = positive("limits.t_max", limits.t_max.unwrap_or(DEFAULT_T_MAX))?;
        let smoothing_alpha = doc.smoothing_alpha.unwrap_or(DEFAULT_SMOOTHING_ALPHA);
        if !(0.0..=1.0).contains(&smoothing_alpha) {
            return Err(SimError::scene("smoothing_alpha", format!("must lie in [0, 1], got {smoothing_alpha}")));
        }

        let script_doc = doc.script.clone().unwrap_or_default();
        let speed = cv.length("script.speed", script_doc.speed.unwrap_or(DEFAULT_SCRIPT_SPEED / cv.s))?;
        if speed <= 0.0 {
            return Err(SimError::scene("script.speed", "must be positive"));
        }
        let perturbation_axis = match script_doc.perturbation_axis {
            None => None,
            Some(a) => Some(
                Vec3::from(a)
                    .try_normalize(1e-9)
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SimError::scene("script.perturbation_axis", "must be a finite non-zero vector"))?,
            ),
        };
        let route = match &script_doc.route {
            None => None,
            Some(id) => match lookup("script.route", id)? {
                FixtureGeometry::Polyline(p) => Some(p.points().to_vec()),
                FixtureGeometry::Cone(c) => Some(vec![c.start(), c.target()]),
                FixtureGeometry::Mesh(_) => return Err(SimError::scene("script.route", "a route must be a polyline or cone")),
            },
        };

        Ok(Scene {
            name: doc.name.clone(),
            task,
            units,
            start,
            start_orientation,
            start_radius,
            weights,
            goal,
            geometry,
            fixtures,
            metric_reference,
            f_max,
            t_max,
            smoothing_alpha,
            script: ScriptHints { speed, perturbation_axis, route },
        })
    }

    pub fn geometry(&self, id: &str) -> Option<&FixtureGeometry> {
        self.geometry.iter().find(|(g, _)| g == id).map(|(_, g)| g)
    }

    /// Meshes bound to obstacle fixtures, for clearance logging.
    pub fn obstacle_meshes(&self) -> Vec<Arc<TriMesh>> {
        let mut out: Vec<Arc<TriMesh>> = Vec::new();
        for b in self.fixtures.iter().filter(|b| b.kind == FixtureKind::Obstacle) {
            if let FixtureGeometry::Mesh(m) = &b.geometry {
                if !out.iter().any(|o| Arc::ptr_eq(o, m)) {
                    out.push(Arc::clone(m));
                }
            }
        }
        out
    }

    /// Copy with every fixture switched to shadow evaluation.
    pub fn all_shadow(&self) -> Scene {
        let mut s = self.clone();
        for f in &mut s.fixtures {
            f.shadow = true;
        }
        s
    }
}

struct Conv {
    s: f64,
}

impl Conv {
    fn point(&self, field: &str, p: [f64; 3]) -> Result<Vec3, SimError> {
        let v = Vec3::from(p) * self.s;
        if !v.is_finite() {
            return Err(SimError::scene(field, "non-finite coordinate"));
        }
        Ok(v)
    }

    fn points(&self, field: &str, ps: &[[f64; 3]]) -> Result<Vec<Vec3>, SimError> {
        ps.iter().enumerate().map(|(i, p)| self.point(&format!("{field}[{i}]"), *p)).collect()
    }

    fn length(&self, field: &str, v: f64) -> Result<f64, SimError> {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(SimError::scene(field, format!("must be finite and non-negative, got {v}")));
        }
        Ok(v * self.s)
    }
}

fn positive(field: &str, v: f64) -> Result<f64, SimError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(SimError::scene(field, format!("must be positive, got {v}")));
    }
    Ok(v)
}

fn parse_weights(row: &[i64]) -> Result<ScoreWeights, SimError> {
    let arr: [i64; 6] = row
        .try_into()
        .map_err(|_| SimError::scene("weights", format!("expected 6 entries (D, A, F, T, M, C), got {}", row.len())))?;
    let mut out = [0u32; 6];
    for (k, w) in arr.iter().enumerate() {
        out[k] = u32::try_from(*w).map_err(|_| SimError::scene(format!("weights[{k}]"), format!("must be a non-negative integer, got {w}")))?;
    }
    ScoreWeights::new(out).map_err(|e| SimError::scene("weights", e))
}

fn build_geometry(field: &str, g: &GeometryDoc, cv: &Conv, base_dir: &Path) -> Result<FixtureGeometry, SimError> {
    let need = |name: &str, present: bool| -> Result<(), SimError> {
        if present {
            Ok(())
        } else {
            Err(SimError::scene(format!("{field}.{name}"), format!("required for {} geometry", g.kind)))
        }
    };
    match g.kind.as_str() {
        "polyline" => {
            need("points", g.points.is_some())?;
            let pts = cv.points(&format!("{field}.points"), g.points.as_deref().unwrap_or_default())?;
            let line = Polyline::new(pts).map_err(|e| SimError::scene(format!("{field}.points"), e))?;
            Ok(FixtureGeometry::Polyline(Arc::new(line)))
        }
        "mesh" => {
            let mesh = match (&g.file, &g.vertices, &g.faces) {
                (Some(file), None, None) => {
                    let path: PathBuf = base_dir.join(file);
                    let text = std::fs::read_to_string(&path).map_err(|source| SimError::Io { path: path.clone(), source })?;
                    let m = obj::parse(&text).map_err(|e| SimError::scene(format!("{field}.file"), format!("{}: {e}", path.display())))?;
                    if cv.s == 1.0 {
                        m
                    } else {
                        let verts = m.vertices().iter().map(|v| *v * cv.s).collect();
                        TriMesh::new(verts, m.faces().to_vec()).map_err(|e| SimError::scene(format!("{field}.file"), e))?
                    }
                }
                (None, Some(vs), Some(fs)) => {
                    let verts = cv.points(&format!("{field}.vertices"), vs)?;
                    let mut faces = Vec::with_capacity(fs.len());
                    for (i, f) in fs.iter().enumerate() {
                        let mut tri = [0usize; 3];
                        for (k, ix) in f.iter().enumerate() {
                            tri[k] = usize::try_from(*ix)
                                .map_err(|_| SimError::scene(format!("{field}.faces[{i}]"), format!("negative index {ix}")))?;
                        }
                        faces.push(tri);
                    }
                    TriMesh::new(verts, faces).map_err(|e| SimError::scene(format!("{field}.faces"), e))?
                }
                _ => {
                    return Err(SimError::scene(
                        field.to_string(),
                        "mesh geometry needs either `file` or both `vertices` and `faces`",
                    ))
                }
            };
            Ok(FixtureGeometry::Mesh(Arc::new(mesh)))
        }
        "cone" => {
            need("start", g.start.is_some())?;
            need("target", g.target.is_some())?;
            need("alpha_deg", g.alpha_deg.is_some())?;
            let start = cv.point(&format!("{field}.start"), g.start.unwrap_or_default())?;
            let target = cv.point(&format!("{field}.target"), g.target.unwrap_or_default())?;
            let cone = ConeFrame::with_relax_fraction(
                start,
                target,
                g.alpha_deg.unwrap_or_default(),
                g.relax_fraction.unwrap_or(DEFAULT_RELAX_FRACTION),
            )
            .map_err(|e| SimError::scene(field.to_string(), e))?;
            Ok(FixtureGeometry::Cone(cone))
        }
        other => Err(SimError::scene(format!("{field}.kind"), format!("unknown geometry kind {other:?} (polyline, mesh, cone)"))),
    }
}

fn parse_kind(field: &str, s: &str) -> Result<FixtureKind, SimError> {
    match s {
        "trajectory" => Ok(FixtureKind::Trajectory),
        "obstacle" => Ok(FixtureKind::Obstacle),
        "surface" => Ok(FixtureKind::Surface),
        "insertion" => Ok(FixtureKind::Insertion),
        other => Err(SimError::scene(
            format!("{field}.kind"),
            format!("unknown fixture kind {other:?} (trajectory, obstacle, surface, insertion)"),
        )),
    }
}

fn build_fixture(field: &str, f: &FixtureDoc, geometry: FixtureGeometry, cv: &Conv) -> Result<FixtureBinding, SimError> {
    let kind = parse_kind(field, &f.kind)?;
    let compatible = matches!(
        (kind, &geometry),
        (FixtureKind::Trajectory, FixtureGeometry::Polyline(_))
            | (FixtureKind::Obstacle | FixtureKind::Surface, FixtureGeometry::Mesh(_))
            | (FixtureKind::Insertion, FixtureGeometry::Cone(_))
    );
    if !compatible {
        return Err(SimError::scene(
            format!("{field}.geometry"),
            format!("{} fixture cannot bind {} geometry {:?}", f.kind, geometry.kind_name(), f.geometry),
        ));
    }
    // Force maps act on lengths; torque maps on radians.
    let force_map = build_map(&format!("{field}.force_map"), &f.force_map, cv.s, kind == FixtureKind::Insertion)?;
    let torque_map = match (&f.torque_map, kind) {
        (None, FixtureKind::Surface) => {
            return Err(SimError::scene(format!("{field}.torque_map"), "required for surface fixtures"));
        }
        (None, _) => None,
        (Some(m), FixtureKind::Surface) => Some(build_map(&format!("{field}.torque_map"), m, 1.0, false)?),
        (Some(_), _) => {
            return Err(SimError::scene(
                format!("{field}.torque_map"),
                format!("not used by {} fixtures; remove it", f.kind),
            ));
        }
    };
    let g = &f.gains;
    let gk = |name: &str, v: Option<f64>, default: f64| -> Result<f64, SimError> {
        let v = v.unwrap_or(default);
        if !(v >= 0.0 && v.is_finite()) {
            return Err(SimError::scene(format!("{field}.gains.{name}"), format!("must be finite and non-negative, got {v}")));
        }
        Ok(v)
    };
    if g.k_f.is_none() {
        return Err(SimError::scene(format!("{field}.gains.k_f"), "required"));
    }
    let gains = GainSet {
        k_f: gk("k_f", g.k_f, 0.0)?,
        eta_f: gk("eta_f", g.eta_f, 0.0)?,
        k_t: gk("k_t", g.k_t, 0.0)?,
        eta_t: gk("eta_t", g.eta_t, 0.0)?,
        f_max: positive(&format!("{field}.gains.f_max"), g.f_max.unwrap_or(DEFAULT_F_MAX))?,
        t_max: positive(&format!("{field}.gains.t_max"), g.t_max.unwrap_or(DEFAULT_T_MAX))?,
    };
    let mesh_query = match f.query.as_deref() {
        None | Some("vertex") => MeshQuery::Vertex,
        Some("surface") => MeshQuery::Surface,
        Some(other) => return Err(SimError::scene(format!("{field}.query"), format!("expected \"vertex\" or \"surface\", got {other:?}"))),
    };
    let normal_mode = match f.normal_mode.as_deref() {
        None | Some("face") => NormalMode::Face,
        Some("interpolated") => NormalMode::Interpolated,
        Some(other) => {
            return Err(SimError::scene(format!("{field}.normal_mode"), format!("expected \"face\" or \"interpolated\", got {other:?}")))
        }
    };
    let mut binding = FixtureBinding::new(f.id.clone(), kind, geometry, force_map, gains);
    binding.torque_map = torque_map;
    binding.enabled = f.enabled.unwrap_or(true);
    binding.shadow = f.shadow.unwrap_or(false);
    binding.mesh_query = mesh_query;
    binding.normal_mode = normal_mode;
    binding.validate().map_err(|e| SimError::scene(field.to_string(), e))?;
    Ok(binding)
}

/// `scale` converts document length units to millimetres for this map.
fn build_map(field: &str, m: &MapDoc, scale: f64, dynamic_threshold: bool) -> Result<MapParams, SimError> {
    let threshold = match (m.threshold, dynamic_threshold) {
        (Some(_), true) => {
            return Err(SimError::scene(format!("{field}.threshold"), "insertion thresholds come from the cone aperture; remove it"));
        }
        (None, true) => 0.0,
        (None, false) => return Err(SimError::scene(format!("{field}.threshold"), "required")),
        (Some(t), false) => t * scale,
    };
    let half_width = m.half_width.ok_or_else(|| SimError::scene(format!("{field}.half_width"), "required"))? * scale;
    let steepness = m.steepness.ok_or_else(|| SimError::scene(format!("{field}.steepness"), "required"))? / scale;
    let profile = match (&m.profile, m.delta) {
        (Some(_), Some(_)) => return Err(SimError::scene(format!("{field}.delta"), "give either profile or delta, not both")),
        (None, None) => return Err(SimError::scene(format!("{field}.profile"), "required (or delta)")),
        (Some(p), None) => match p.as_str() {
            "rising_with_error" => Profile::RisingWithError,
            "falling_with_error" => Profile::FallingWithError,
            other => {
                return Err(SimError::scene(
                    format!("{field}.profile"),
                    format!("expected \"rising_with_error\" or \"falling_with_error\", got {other:?}"),
                ))
            }
        },
        (None, Some(d)) => {
            if d != 1.0 && d != -1.0 {
                return Err(SimError::scene(format!("{field}.delta"), format!("must be 1 or -1, got {d}")));
            }
            Profile::from_delta(d)
        }
    };
    let params = MapParams {
        threshold,
        half_width,
        steepness,
        profile,
        gain_constant: m.gain_constant.unwrap_or(DEFAULT_GAIN_CONSTANT),
    };
    params.validate().map_err(|e| SimError::scene(field.to_string(), e))?;
    Ok(params)
}

fn reference_for(g: &FixtureGeometry, fixtures: &[FixtureBinding], id: &str) -> MetricReference {
    match g {
        FixtureGeometry::Polyline(p) => MetricReference::Polyline(Arc::clone(p)),
        FixtureGeometry::Cone(c) => MetricReference::Cone(*c),
        FixtureGeometry::Mesh(m) => {
            let mode = fixtures
                .iter()
                .find(|b| b.id == id || matches!(&b.geometry, FixtureGeometry::Mesh(o) if Arc::ptr_eq(o, m)))
                .map(|b| b.normal_mode)
                .unwrap_or_default();
            MetricReference::Mesh(Arc::clone(m), mode)
        }
    }
}

fn build_goal<'a>(
    g: &GoalDoc,
    cv: &Conv,
    lookup: &dyn Fn(&str, &str) -> Result<&'a FixtureGeometry, SimError>,
    fixtures: &[FixtureBinding],
) -> Result<Goal, SimError> {
    let tolerance = |default: f64| cv.length("goal.tolerance", g.tolerance.unwrap_or(default / cv.s));
    match g.kind.as_str() {
        "path_end" => {
            let line = match &g.geometry {
                Some(id) => match lookup("goal.geometry", id)? {
                    FixtureGeometry::Polyline(p) => Arc::clone(p),
                    other => return Err(SimError::scene("goal.geometry", format!("path_end needs a polyline, {id:?} is a {}", other.kind_name()))),
                },
                None => fixtures
                    .iter()
                    .find_map(|b| match &b.geometry {
                        FixtureGeometry::Polyline(p) => Some(Arc::clone(p)),
                        _ => None,
                    })
                    .ok_or_else(|| SimError::scene("goal.geometry", "path_end needs a polyline geometry"))?,
            };
            Ok(Goal::PathEnd { end: line.end(), tolerance: tolerance(2.0)? })
        }
        "reach" => {
            let target = match (g.target, &g.geometry) {
                (Some(t), None) => cv.point("goal.target", t)?,
                (None, Some(id)) => match lookup("goal.geometry", id)? {
                    FixtureGeometry::Cone(c) => c.target(),
                    FixtureGeometry::Polyline(p) => p.end(),
                    FixtureGeometry::Mesh(_) => return Err(SimError::scene("goal.geometry", "reach cannot target a mesh")),
                },
                _ => return Err(SimError::scene("goal.target", "reach needs exactly one of target or geometry")),
            };
            Ok(Goal::Reach { target, tolerance: tolerance(1.0)? })
        }
        "gates" => {
            let gates = g.gates.as_deref().ok_or_else(|| SimError::scene("goal.gates", "required"))?;
            if gates.is_empty() {
                return Err(SimError::scene("goal.gates", "must list at least one gate"));
            }
            let radius = cv.length("goal.tolerance", g.tolerance.unwrap_or(3.0 / cv.s))?;
            Ok(Goal::Gates { gates: cv.points("goal.gates", gates)?, radius })
        }
        "deliver" => {
            let pickup = cv.point("goal.pickup", g.pickup.ok_or_else(|| SimError::scene("goal.pickup", "required"))?)?;
            let dropoff = cv.point("goal.dropoff", g.dropoff.ok_or_else(|| SimError::scene("goal.dropoff", "required"))?)?;
            let grab_radius = positive("goal.grab_radius", cv.length("goal.grab_radius", g.grab_radius.unwrap_or(8.0 / cv.s))?)?;
            let zone_radius = positive("goal.zone_radius", cv.length("goal.zone_radius", g.zone_radius.unwrap_or(8.0 / cv.s))?)?;
            Ok(Goal::Deliver { pickup, dropoff, grab_radius, zone_radius })
        }
        other => Err(SimError::scene("goal.kind", format!("unknown goal {other:?} (path_end, reach, gates, deliver)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
schema_version = 1
name = "minimal"
task = "path"
start = [0.0, 0.0, 0.0]

[goal]
kind = "path_end"

[[geometry]]
id = "route"
kind = "polyline"
points = [[0.0, 0.0, 0.0], [50.0, 0.0, 0.0]]

[[fixture]]
id = "guide"
kind = "trajectory"
geometry = "route"
force_map = { threshold = 0.5, half_width = 1.0, steepness = 1.0, profile = "rising_with_error" }
gains = { k_f = 2.0, eta_f = 0.1, k_t = 0.05 }
"#;

    fn err_field(text: &str) -> String {
        match Scene::from_toml(text, Path::new(".")).unwrap_err() {
            SimError::Scene { field, .. } => field,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn minimal_path_scene_loads() {
        let s = Scene::from_toml(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(s.task, TaskKind::Path);
        assert_eq!(s.fixtures.len(), 1);
        assert_eq!(s.fixtures[0].kind, FixtureKind::Trajectory);
        assert_eq!(s.weights.row(), [3, 2, 3, 1, 0, 1]);
        assert_eq!(s.start_radius, DEFAULT_START_RADIUS);
        assert!(matches!(s.metric_reference, Some(MetricReference::Polyline(_))));
        assert_eq!(s.goal, Goal::PathEnd { end: Vec3::new(50.0, 0.0, 0.0), tolerance: 2.0 });
    }

    #[test]
    fn bad_weight_row_is_named() {
        let text = MINIMAL.replace("start = [0.0, 0.0, 0.0]", "start = [0.0, 0.0, 0.0]\nweights = [3, 2, 3, 1, 0, 0]");
        let err = Scene::from_toml(&text, Path::new(".")).unwrap_err().to_string();
        assert!(err.starts_with("weights:"), "{err}");
        assert!(err.contains("sums to 9"), "{err}");
    }

    #[test]
    fn unknown_fixture_kind_is_named() {
        assert_eq!(err_field(&MINIMAL.replace("kind = \"trajectory\"", "kind = \"magnetic\"")), "fixture[0].kind");
    }

    #[test]
    fn dangling_geometry_is_named() {
        assert_eq!(err_field(&MINIMAL.replace("geometry = \"route\"", "geometry = \"nowhere\"")), "fixture[0].geometry");
    }

    #[test]
    fn missing_mesh_file_reports_path() {
        let text = MINIMAL.to_string() + "\n[[geometry]]\nid = \"wall\"\nkind = \"mesh\"\nfile = \"no_such_mesh.obj\"\n";
        match Scene::from_toml(&text, Path::new("/tmp/scenes")).unwrap_err() {
            SimError::Io { path, .. } => assert_eq!(path, Path::new("/tmp/scenes/no_such_mesh.obj")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn metre_scenes_convert_to_millimetres() {
        let text = MINIMAL
            .replace("start = [0.0, 0.0, 0.0]", "units = \"m\"\nstart = [0.0, 0.0, 0.0]")
            .replace("[50.0, 0.0, 0.0]", "[0.05, 0.0, 0.0]")
            .replace("threshold = 0.5, half_width = 1.0, steepness = 1.0", "threshold = 0.0005, half_width = 0.001, steepness = 1000.0");
        let s = Scene::from_toml(&text, Path::new(".")).unwrap();
        assert_eq!(s.units, LengthUnit::Metre);
        let FixtureGeometry::Polyline(p) = &s.fixtures[0].geometry else { panic!() };
        assert!((p.end().x - 50.0).abs() < 1e-12);
        let m = s.fixtures[0].force_map;
        assert!((m.threshold - 0.5).abs() < 1e-12 && (m.half_width - 1.0).abs() < 1e-12 && (m.steepness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_rejects_torque_map() {
        let text = MINIMAL.replace(
            "gains = {",
            "torque_map = { threshold = 0.1, half_width = 0.1, steepness = 1.0, profile = \"rising_with_error\" }\ngains = {",
        );
        assert_eq!(err_field(&text), "fixture[0].torque_map");
    }

    #[test]
    fn delta_sign_selects_profile() {
        let text = MINIMAL.replace("profile = \"rising_with_error\"", "delta = -1.0");
        let s = Scene::from_toml(&text, Path::new(".")).unwrap();
        assert_eq!(s.fixtures[0].force_map.profile, Profile::RisingWithError);
        assert_eq!(err_field(&MINIMAL.replace("profile = \"rising_with_error\"", "delta = 0.5")), "fixture[0].force_map.delta");
    }

    #[test]
    fn document_round_trips_through_toml() {
        let doc = SceneDocument::parse(MINIMAL).unwrap();
        let again = SceneDocument::parse(&doc.to_toml().unwrap()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn schema_and_unknown_keys_rejected() {
        assert!(matches!(
            Scene::from_toml(&MINIMAL.replace("schema_version = 1", "schema_version = 2"), Path::new(".")),
            Err(SimError::Schema(2))
        ));
        assert_eq!(err_field(&MINIMAL.replace("name = \"minimal\"", "name = \"minimal\"\ncolour = 3")), "document");
    }
}
