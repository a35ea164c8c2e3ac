use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::archetypes::archetype_document;
use super::{Goal, InputFrame, InputStream, MetricReference, Scene, SimError, TaskKind, DT};
use crate::fixtures::FixtureGeometry;
use crate::geom::{rotate_vector, Polyline, Vec3};

/// Tool tilt per millimetre of positional perturbation, rad/mm.
pub const ANGLE_PER_MM: f64 = 0.01;
/// Frames the grip stays closed at the pickup before moving on.
pub const DWELL_FRAMES: usize = 6;
/// Frames the grip slips open during a fumble.
pub const FUMBLE_FRAMES: usize = 6;
/// Zero-velocity frames appended after the route end.
pub const TAIL_FRAMES: usize = 30;
/// Tail speed as a fraction of the scripted speed: the tool keeps creeping
/// past the route end, taking up lag left by braking assistance.
pub const TAIL_CREEP: f64 = 0.3;
/// Perturbation frequency band, Hz.
pub const FREQUENCY_BAND: (f64, f64) = (0.2, 0.8);
/// Half-window for the smoothed tool heading, mm.
const HEADING_WINDOW: f64 = 3.0;

/// `task:amplitude` as accepted on the command line, e.g. `path:5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub task: TaskKind,
    /// mm
    pub amplitude: f64,
}

impl FromStr for PerturbationSpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        let (task, amp) = s.split_once(':').unwrap_or((s, "0"));
        let amplitude: f64 = amp
            .parse()
            .map_err(|_| SimError::scene("gen", format!("amplitude {amp:?} is not a number")))?;
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(SimError::BadAmplitude(amplitude));
        }
        Ok(PerturbationSpec { task: task.parse()?, amplitude })
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.task, self.amplitude)
    }
}

/// The built-in scene for a task archetype.
pub fn archetype(task: TaskKind) -> Scene {
    Scene::from_document(&archetype_document(task), Path::new(".")).expect("built-in scenes are valid")
}

/// Input stream for the built-in scene of `task`.
pub fn gen_input(task: TaskKind, amplitude: f64, seed: u64) -> Result<InputStream, SimError> {
    gen_input_for_scene(&archetype(task), amplitude, seed)
}

/// Sum of three seeded sinusoids scaled so its RMS equals that of a single
/// sinusoid of unit amplitude.
#[derive(Debug, Clone)]
struct Wobble {
    terms: [(f64, f64, f64); 3],
    norm: f64,
}

impl Wobble {
    fn new(rng: &mut ChaCha8Rng) -> Wobble {
        let mut terms = [(0.0, 0.0, 0.0); 3];
        for t in &mut terms {
            let a = rng.random_range(0.5..1.0);
            let f = rng.random_range(FREQUENCY_BAND.0..FREQUENCY_BAND.1);
            let phi = rng.random_range(0.0..TAU);
            *t = (a, f, phi);
        }
        let norm = terms.iter().map(|(a, _, _)| a * a).sum::<f64>().sqrt();
        Wobble { terms, norm }
    }

    fn at(&self, tau: f64) -> f64 {
        self.terms.iter().map(|(a, f, phi)| a * (TAU * f * tau + phi).sin()).sum::<f64>() / self.norm
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

#[derive(Debug, Clone, Copy)]
struct Plan {
    s: f64,
    grip: bool,
    clutch: bool,
}

enum Action {
    Clutch(usize),
    Grab,
    Fumble,
}

/// Scripted operator input for a scene.
///
/// The nominal script moves along the scene's route at the scripted speed with
/// the tool axis following the route heading; at amplitude 0 it is the
/// expert-like reference motion. A positive amplitude adds a smooth lateral
/// offset along the perturbation axis (three seeded sinusoids in the
/// [`FREQUENCY_BAND`], faded in and out near the route ends), a matching tool
/// tilt, a clutch pause of `round(2·amplitude)` frames half way, and for
/// hand-off goals a chance `min(1, amplitude/10)` of a brief grip slip.
pub fn gen_input_for_scene(scene: &Scene, amplitude: f64, seed: u64) -> Result<InputStream, SimError> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(SimError::BadAmplitude(amplitude));
    }
    let route = route_of(scene)?;
    let length = route.length();
    let axis = match scene.script.perturbation_axis {
        Some(a) => a,
        None => route.segment_tangent(0).any_orthogonal(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wobble = (amplitude > 0.0).then(|| Wobble::new(&mut rng));

    let mut actions: Vec<(f64, Action)> = Vec::new();
    let pickup = match scene.goal {
        Goal::Deliver { pickup, .. } => Some(route.project(pickup).arclength),
        _ => None,
    };
    if let Some(s) = pickup {
        actions.push((s, Action::Grab));
    }
    if amplitude > 0.0 {
        let frames = (2.0 * amplitude).round() as usize;
        if frames > 0 {
            actions.push((0.5 * length, Action::Clutch(frames)));
        }
        if let Some(s_pick) = pickup {
            let fumble: f64 = rng.random();
            let at: f64 = rng.random_range(0.3..0.6);
            if fumble < (amplitude / 10.0).min(1.0) {
                actions.push((s_pick + (length - s_pick) * at, Action::Fumble));
            }
        }
    }
    actions.sort_by(|a, b| a.0.total_cmp(&b.0));

    let plan = build_plan(length, scene.script.speed * DT, &actions, pickup.is_some());

    let ramp = (0.05 * length).min(5.0);
    let mut tau = 0.0;
    let desired: Vec<(Vec3, Vec3)> = plan
        .iter()
        .map(|p| {
            let offset = match &wobble {
                Some(w) => amplitude * smoothstep(p.s / ramp) * smoothstep((length - p.s) / ramp) * w.at(tau),
                None => 0.0,
            };
            if !p.clutch {
                tau += DT;
            }
            let heading = heading(&route, p.s, length);
            let tilt_axis = axis.cross(heading).try_normalize(1e-9).unwrap_or_else(|| heading.any_orthogonal());
            let z = rotate_vector(heading, ANGLE_PER_MM * offset, tilt_axis).vector;
            let past_end = route.segment_tangent(route.segment_count() - 1) * (p.s - length).max(0.0);
            (route.point_at(p.s) + past_end + axis * offset, z)
        })
        .collect();

    let mut position = scene.start;
    let mut z = scene.start_orientation.z_axis();
    let mut frames = Vec::with_capacity(plan.len());
    for (i, p) in plan.iter().enumerate() {
        let (v, w) = match desired.get(i + 1) {
            Some((next_p, next_z)) if !p.clutch => {
                let v = (*next_p - position) / DT;
                let w = swing(z, *next_z) / DT;
                position = *next_p;
                z = *next_z;
                (v, w)
            }
            _ => (Vec3::ZERO, Vec3::ZERO),
        };
        frames.push(InputFrame {
            time: i as f64 * DT,
            target_velocity: v,
            target_angular_velocity: w,
            grip_closed: p.grip,
            clutch_engaged: p.clutch,
        });
    }
    let mut stream = InputStream::new(frames);
    stream.units = super::LengthUnit::Millimetre;
    if scene.units != stream.units {
        let s = 1.0 / scene.units.to_mm();
        for f in &mut stream.frames {
            f.target_velocity = f.target_velocity * s;
        }
        stream.units = scene.units;
    }
    Ok(stream)
}

fn build_plan(length: f64, step: f64, actions: &[(f64, Action)], deliver: bool) -> Vec<Plan> {
    let mut plan = vec![Plan { s: 0.0, grip: false, clutch: false }];
    let mut s = 0.0;
    let mut grip = false;
    let mut reclose_in: Option<usize> = None;
    let mut next = 0usize;
    while s < length {
        let target = (s + step).min(length);
        if next < actions.len() && actions[next].0 <= target {
            s = actions[next].0.max(s);
            plan.push(Plan { s, grip, clutch: false });
            match actions[next].1 {
                Action::Clutch(n) => plan.extend((0..n).map(|_| Plan { s, grip, clutch: true })),
                Action::Grab => {
                    grip = true;
                    plan.extend((0..DWELL_FRAMES).map(|_| Plan { s, grip, clutch: false }));
                }
                Action::Fumble => {
                    grip = false;
                    reclose_in = Some(FUMBLE_FRAMES);
                }
            }
            next += 1;
            continue;
        }
        s = target;
        if let Some(n) = reclose_in {
            if n <= 1 {
                grip = true;
                reclose_in = None;
            } else {
                reclose_in = Some(n - 1);
            }
        }
        plan.push(Plan { s, grip, clutch: false });
    }
    if deliver {
        plan.extend((0..3).map(|_| Plan { s: length, grip, clutch: false }));
        grip = false;
    }
    plan.extend((1..=TAIL_FRAMES).map(|k| Plan { s: length + k as f64 * TAIL_CREEP * step, grip, clutch: false }));
    plan
}

/// Rotation vector taking unit `from` onto unit `to` by the shortest arc.
fn swing(from: Vec3, to: Vec3) -> Vec3 {
    let angle = from.dot(to).clamp(-1.0, 1.0).acos();
    match from.cross(to).try_normalize(1e-15) {
        Some(k) => k * angle,
        None => Vec3::ZERO,
    }
}

fn heading(route: &Polyline, s: f64, length: f64) -> Vec3 {
    let a = route.point_at((s - HEADING_WINDOW).max(0.0));
    let b = route.point_at((s + HEADING_WINDOW).min(length));
    (b - a).try_normalize(1e-12).unwrap_or_else(|| route.segment_tangent(route.segment_at(s)))
}

fn route_of(scene: &Scene) -> Result<Polyline, SimError> {
    let mut points = match (&scene.script.route, &scene.metric_reference) {
        (Some(r), _) => r.clone(),
        (None, Some(MetricReference::Polyline(p))) => p.points().to_vec(),
        (None, Some(MetricReference::Cone(c))) => vec![c.start(), c.target()],
        _ => scene
            .fixtures
            .iter()
            .find_map(|b| match &b.geometry {
                FixtureGeometry::Polyline(p) => Some(p.points().to_vec()),
                FixtureGeometry::Cone(c) => Some(vec![c.start(), c.target()]),
                FixtureGeometry::Mesh(_) => None,
            })
            .ok_or_else(|| SimError::scene("script.route", "scene has no polyline or cone to script a route along"))?,
    };
    if points[0].distance(scene.start) > 1e-9 {
        points.insert(0, scene.start);
    }
    Polyline::new(points).map_err(|e| SimError::scene("script.route", e))
}
