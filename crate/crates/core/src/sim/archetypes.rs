use super::scene::{FixtureDoc, GainsDoc, GeometryDoc, GoalDoc, LimitsDoc, MapDoc, ScriptDoc};
use super::{shapes, SceneDocument, TaskKind, SCENE_SCHEMA_VERSION};
use crate::geom::{Quat, TriMesh, Vec3};

/// Built-in desk-scale scene for a task archetype, in millimetres.
///
/// * `path`: a planar zig-zag route with trajectory guidance.
/// * `rings`: a straight insertion along a 10° cone.
/// * `pillars`: a route threading between two upright cylinders with
///   obstacle avoidance.
/// * `exchange`: carry an object from a pickup point to a hand-off zone
///   along a guided route.
pub fn archetype_document(task: TaskKind) -> SceneDocument {
    match task {
        TaskKind::Path => path(),
        TaskKind::Rings => rings(),
        TaskKind::Pillars => pillars(),
        TaskKind::Exchange => exchange(),
    }
}

fn base(name: &str, task: TaskKind, start: Vec3, heading: Vec3, goal: GoalDoc) -> SceneDocument {
    let q = Quat::from_to(Vec3::Z, heading.try_normalize(1e-12).unwrap_or(Vec3::Z));
    SceneDocument {
        schema_version: SCENE_SCHEMA_VERSION,
        name: name.into(),
        task: task.id().into(),
        units: "mm".into(),
        start: start.to_array(),
        start_orientation: Some(q.into()),
        start_radius: None,
        weights: None,
        metric_reference: None,
        smoothing_alpha: None,
        limits: Some(LimitsDoc { f_max: Some(5.0), t_max: Some(0.2) }),
        goal,
        script: None,
        geometry: Vec::new(),
        fixture: Vec::new(),
    }
}

fn polyline(id: &str, points: &[Vec3]) -> GeometryDoc {
    GeometryDoc {
        id: id.into(),
        kind: "polyline".into(),
        points: Some(points.iter().map(|p| p.to_array()).collect()),
        ..GeometryDoc::default()
    }
}

fn inline_mesh(id: &str, mesh: &TriMesh) -> GeometryDoc {
    GeometryDoc {
        id: id.into(),
        kind: "mesh".into(),
        vertices: Some(mesh.vertices().iter().map(|v| v.to_array()).collect()),
        faces: Some(mesh.faces().iter().map(|f| f.map(|i| i as i64)).collect()),
        ..GeometryDoc::default()
    }
}

fn map(threshold: Option<f64>, half_width: f64, steepness: f64, profile: &str) -> MapDoc {
    MapDoc {
        threshold,
        half_width: Some(half_width),
        steepness: Some(steepness),
        profile: Some(profile.into()),
        ..MapDoc::default()
    }
}

fn gains(k_f: f64, eta_f: f64, k_t: f64, eta_t: f64) -> GainsDoc {
    GainsDoc { k_f: Some(k_f), eta_f: Some(eta_f), k_t: Some(k_t), eta_t: Some(eta_t), ..GainsDoc::default() }
}

fn trajectory_fixture(id: &str, geometry: &str) -> FixtureDoc {
    FixtureDoc {
        id: id.into(),
        kind: "trajectory".into(),
        geometry: geometry.into(),
        force_map: map(Some(0.5), 1.0, 1.0, "rising_with_error"),
        gains: gains(2.0, 0.1, 0.05, 0.005),
        ..FixtureDoc::default()
    }
}

pub const PATH_ROUTE: [[f64; 3]; 6] = [
    [0.0, 0.0, 0.0],
    [40.0, 0.0, 0.0],
    [60.0, 20.0, 0.0],
    [100.0, 20.0, 0.0],
    [120.0, 0.0, 0.0],
    [150.0, 0.0, 0.0],
];

fn path() -> SceneDocument {
    let route: Vec<Vec3> = PATH_ROUTE.iter().map(|p| Vec3::from(*p)).collect();
    let goal = GoalDoc { kind: "path_end".into(), tolerance: Some(3.0), ..GoalDoc::default() };
    let mut doc = base("path", TaskKind::Path, route[0], route[1] - route[0], goal);
    doc.metric_reference = Some("route".into());
    doc.script = Some(ScriptDoc { speed: Some(15.0), perturbation_axis: Some([0.0, 0.0, 1.0]), route: Some("route".into()) });
    doc.geometry.push(polyline("route", &route));
    doc.fixture.push(trajectory_fixture("guide", "route"));
    doc
}

pub const RINGS_TARGET: [f64; 3] = [0.0, 0.0, 100.0];
pub const RINGS_ALPHA_DEG: f64 = 10.0;

fn rings() -> SceneDocument {
    let goal = GoalDoc { kind: "reach".into(), geometry: Some("cone".into()), tolerance: Some(1.5), ..GoalDoc::default() };
    let mut doc = base("rings", TaskKind::Rings, Vec3::ZERO, Vec3::Z, goal);
    doc.metric_reference = Some("cone".into());
    doc.script = Some(ScriptDoc { speed: Some(15.0), perturbation_axis: Some([1.0, 0.0, 0.0]), route: Some("cone".into()) });
    doc.geometry.push(GeometryDoc {
        id: "cone".into(),
        kind: "cone".into(),
        start: Some([0.0, 0.0, 0.0]),
        target: Some(RINGS_TARGET),
        alpha_deg: Some(RINGS_ALPHA_DEG),
        relax_fraction: Some(0.2),
        ..GeometryDoc::default()
    });
    doc.fixture.push(FixtureDoc {
        id: "funnel".into(),
        kind: "insertion".into(),
        geometry: "cone".into(),
        force_map: map(None, 0.1, 10.0, "rising_with_error"),
        gains: gains(5.0, 0.05, 0.0, 0.0),
        ..FixtureDoc::default()
    });
    doc
}

/// Pillar centres (x, y), radius and height, mm.
pub const PILLARS: [[f64; 2]; 2] = [[-9.0, 0.0], [9.0, 0.0]];
pub const PILLAR_RADIUS: f64 = 4.0;
pub const PILLAR_HEIGHT: f64 = 40.0;
/// The route runs along y through the 10 mm gap between the pillars.
pub const PILLAR_ROUTE_X: f64 = 0.0;

/// The two pillars as one closed mesh.
pub fn pillars_mesh() -> TriMesh {
    let parts: Vec<TriMesh> = PILLARS
        .iter()
        .map(|[x, y]| shapes::cylinder(Vec3::new(*x, *y, 0.0), PILLAR_RADIUS, PILLAR_HEIGHT, 32, 20).expect("valid cylinder"))
        .collect();
    shapes::merge(&parts).expect("disjoint cylinders")
}

fn pillars() -> SceneDocument {
    let route = [Vec3::new(PILLAR_ROUTE_X, -30.0, 10.0), Vec3::new(PILLAR_ROUTE_X, 30.0, 10.0)];
    let goal = GoalDoc { kind: "reach".into(), target: Some(route[1].to_array()), tolerance: Some(5.0), ..GoalDoc::default() };
    let mut doc = base("pillars", TaskKind::Pillars, route[0], route[1] - route[0], goal);
    doc.metric_reference = Some("route".into());
    doc.script = Some(ScriptDoc { speed: Some(15.0), perturbation_axis: Some([1.0, 0.0, 0.0]), route: Some("route".into()) });
    doc.geometry.push(polyline("route", &route));
    doc.geometry.push(inline_mesh("pillars", &pillars_mesh()));
    doc.fixture.push(FixtureDoc {
        id: "avoid".into(),
        kind: "obstacle".into(),
        geometry: "pillars".into(),
        force_map: map(Some(1.0), 1.5, 1.5, "falling_with_error"),
        gains: gains(3.0, 0.2, 0.0, 0.0),
        ..FixtureDoc::default()
    });
    doc
}

/// Pillars variant whose route runs straight into the right-hand pillar:
/// unassisted motion collides, assisted motion is held off.
pub fn pillar_approach_document() -> SceneDocument {
    let mut doc = pillars();
    let [x, y] = PILLARS[1];
    let route = [Vec3::new(x, y - 30.0, 10.0), Vec3::new(x, y + 30.0, 10.0)];
    doc.name = "pillars-approach".into();
    doc.start = route[0].to_array();
    doc.goal.target = Some(route[1].to_array());
    doc.geometry[0] = polyline("route", &route);
    doc
}

pub const EXCHANGE_ROUTE: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [40.0, 10.0, 0.0], [80.0, 40.0, 10.0]];

fn exchange() -> SceneDocument {
    let route: Vec<Vec3> = EXCHANGE_ROUTE.iter().map(|p| Vec3::from(*p)).collect();
    let goal = GoalDoc {
        kind: "deliver".into(),
        pickup: Some(route[1].to_array()),
        dropoff: Some(route[2].to_array()),
        grab_radius: Some(8.0),
        zone_radius: Some(8.0),
        ..GoalDoc::default()
    };
    let mut doc = base("exchange", TaskKind::Exchange, route[0], route[1] - route[0], goal);
    let normal = (route[1] - route[0]).cross(route[2] - route[1]).try_normalize(1e-12).unwrap_or(Vec3::Z);
    doc.metric_reference = Some("route".into());
    doc.script = Some(ScriptDoc { speed: Some(15.0), perturbation_axis: Some(normal.to_array()), route: Some("route".into()) });
    doc.geometry.push(polyline("route", &route));
    doc.fixture.push(trajectory_fixture("guide", "route"));
    doc
}
