use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{admittance, AdmittanceParams, EEState, Goal, InputFrame, InputStream, MetricReference, Scene, SimError, DT};
use crate::fixtures::{FixtureSet, Wrench};
use crate::geom::{Quat, TriMesh, Vec3};
use crate::score::{aggregate, MetricVector};

/// Identifier of the single exchange object.
const OBJECT_ID: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameFlags {
    pub grip: bool,
    pub clutch: bool,
    /// An object is held at the end of this frame.
    pub holding: bool,
    /// A held object was released outside the hand-off zone.
    pub drop: bool,
    /// Any insertion fixture reports the tool beyond its target.
    pub overshoot: bool,
    /// Any fixture hit a degenerate direction this frame.
    pub degenerate: bool,
}

/// State and wrenches of one frame, recorded before the frame's motion step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLog {
    pub index: usize,
    pub time: f64,
    pub position: Vec3,
    pub orientation: Quat,
    pub velocity: Vec3,
    /// Wrench fed to the admittance; zero when assistance is off.
    pub applied_force: Vec3,
    pub applied_torque: Vec3,
    /// Wrench the enabled fixtures would render, shadow ones included.
    pub feedback_force: Vec3,
    pub feedback_torque: Vec3,
    /// Per enabled fixture, in binding order: (force, torque).
    pub fixtures: Vec<(Vec3, Vec3)>,
    pub distance_error: f64,
    pub angular_error: f64,
    /// Smallest signed distance to any obstacle mesh (negative inside).
    pub clearance: Option<f64>,
    pub flags: FrameFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeBounds {
    /// First frame outside the start region.
    pub start: usize,
    /// Frame where the goal held, or the last frame when incomplete.
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Start,
    End,
    Grab,
    Drop,
    Deliver,
    Gate { index: usize },
    ClutchEngaged,
    ClutchReleased,
    Overshoot { fixture: String },
    Degenerate { fixture: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub frame: usize,
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scene: String,
    pub task: String,
    pub seed: u64,
    pub assist: bool,
    pub fixture_ids: Vec<String>,
    pub frames: Vec<FrameLog>,
    pub bounds: Option<EpisodeBounds>,
    /// Started but the goal never held.
    pub incomplete: bool,
    pub events: Vec<Event>,
}

/// Everything about an episode except the frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub scene: String,
    pub task: String,
    pub seed: u64,
    pub assist: bool,
    pub frames: usize,
    pub started: bool,
    pub incomplete: bool,
    pub bounds: Option<EpisodeBounds>,
    pub duration_s: Option<f64>,
    pub metrics: Option<MetricVector>,
    pub events: Vec<Event>,
    /// SHA-256 of the frame-log CSV, hex.
    pub digest: String,
}

impl EpisodeLog {
    pub fn started(&self) -> bool {
        self.bounds.is_some()
    }

    /// Frames from start to end inclusive, `None` if the episode never started.
    pub fn in_bounds(&self) -> Option<&[FrameLog]> {
        self.bounds.map(|b| &self.frames[b.start..=b.end])
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from(
            "frame,t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,fx,fy,fz,tx,ty,tz,fb_fx,fb_fy,fb_fz,fb_tx,fb_ty,fb_tz,\
             D,A,clearance,grip,clutch,holding,drop,overshoot,degenerate",
        );
        for id in &self.fixture_ids {
            for c in ["fx", "fy", "fz", "tx", "ty", "tz"] {
                let _ = write!(h, ",{id}_{c}");
            }
        }
        h
    }

    /// One row per frame in the column order of [`EpisodeLog::csv_header`].
    /// Floats use the shortest round-trip representation, so the bytes are
    /// a pure function of the values.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for f in &self.frames {
            f.write_csv_row(&mut out);
        }
        out
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv().as_bytes()))
    }

    pub fn metrics(&self) -> Option<MetricVector> {
        aggregate(self).ok()
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            scene: self.scene.clone(),
            task: self.task.clone(),
            seed: self.seed,
            assist: self.assist,
            frames: self.frames.len(),
            started: self.started(),
            incomplete: self.incomplete,
            bounds: self.bounds,
            duration_s: self.bounds.map(|b| self.frames[b.end].time - self.frames[b.start].time),
            metrics: self.metrics(),
            events: self.events.clone(),
            digest: self.digest(),
        }
    }

    /// Smallest obstacle clearance over the in-bounds frames.
    pub fn min_clearance(&self) -> Option<f64> {
        self.in_bounds()?.iter().filter_map(|f| f.clearance).reduce(f64::min)
    }
}

impl FrameLog {
    /// Appends this frame as one CSV line, newline included.
    pub fn write_csv_row(&self, out: &mut String) {
        let _ = write!(out, "{},{}", self.index, self.time);
        push_vec(out, self.position);
        let q = self.orientation;
        let _ = write!(out, ",{},{},{},{}", q.w, q.x, q.y, q.z);
        for v in [self.velocity, self.applied_force, self.applied_torque, self.feedback_force, self.feedback_torque] {
            push_vec(out, v);
        }
        let _ = write!(out, ",{},{},", self.distance_error, self.angular_error);
        if let Some(c) = self.clearance {
            let _ = write!(out, "{c}");
        }
        let fl = self.flags;
        for b in [fl.grip, fl.clutch, fl.holding, fl.drop, fl.overshoot, fl.degenerate] {
            let _ = write!(out, ",{}", u8::from(b));
        }
        for (force, torque) in &self.fixtures {
            push_vec(out, *force);
            push_vec(out, *torque);
        }
        out.push('\n');
    }
}

fn push_vec(out: &mut String, v: Vec3) {
    let _ = write!(out, ",{},{},{}", v.x, v.y, v.z);
}

struct ObjectState {
    position: Vec3,
    held: bool,
    delivered: bool,
}

/// Runs one episode: for each input frame, apply grip and clutch, resolve
/// grabs and drops, evaluate the fixtures, record the frame, then advance the
/// pose by one admittance step.
///
/// The episode starts at the first frame outside the start region and ends at
/// the first later frame where the goal holds; the loop stops there. A stream
/// that runs out first leaves the episode flagged incomplete. The `seed` is
/// recorded for provenance; the simulation itself is deterministic.
pub fn run_episode(scene: &Scene, stream: &InputStream, params: &AdmittanceParams, seed: u64) -> Result<EpisodeLog, SimError> {
    stream.validate()?;
    if stream.units != scene.units {
        return Err(SimError::UnitMismatch { scene: scene.units, stream: stream.units });
    }
    let stream = stream.to_millimetres();
    let mut runner = EpisodeRunner::new(scene, params, seed)?;
    for input in &stream.frames {
        if runner.advance(input)? {
            break;
        }
    }
    Ok(runner.finish())
}

/// Frame-by-frame episode driver behind [`run_episode`].
///
/// Inputs must already be in millimetres on the 30 Hz grid.
pub struct EpisodeRunner<'a> {
    scene: &'a Scene,
    params: AdmittanceParams,
    seed: u64,
    fixtures: FixtureSet,
    fixture_ids: Vec<String>,
    obstacles: Vec<Arc<TriMesh>>,
    state: EEState,
    object: Option<ObjectState>,
    next_gate: usize,
    frames: Vec<FrameLog>,
    events: Vec<Event>,
    start: Option<usize>,
    end: Option<usize>,
    prev_overshoot: Vec<bool>,
    prev_degenerate: Vec<bool>,
}

impl<'a> EpisodeRunner<'a> {
    pub fn new(scene: &'a Scene, params: &AdmittanceParams, seed: u64) -> Result<Self, SimError> {
        params.validate()?;
        let fixtures = FixtureSet::new(scene.fixtures.clone(), scene.f_max, scene.t_max, scene.smoothing_alpha)?;
        let fixture_ids = fixtures.enabled_ids();
        let object = match scene.goal {
            Goal::Deliver { pickup, .. } => Some(ObjectState { position: pickup, held: false, delivered: false }),
            _ => None,
        };
        Ok(EpisodeRunner {
            scene,
            params: *params,
            seed,
            fixtures,
            prev_overshoot: vec![false; fixture_ids.len()],
            prev_degenerate: vec![false; fixture_ids.len()],
            fixture_ids,
            obstacles: scene.obstacle_meshes(),
            state: EEState::at(scene.start, scene.start_orientation),
            object,
            next_gate: 0,
            frames: Vec::new(),
            events: Vec::new(),
            start: None,
            end: None,
        })
    }

    /// Current end-effector state.
    pub fn state(&self) -> &EEState {
        &self.state
    }

    /// Frames recorded so far.
    pub fn frames(&self) -> &[FrameLog] {
        &self.frames
    }

    /// True once the goal has been reached.
    pub fn is_done(&self) -> bool {
        self.end.is_some()
    }

    /// Processes one input frame. Returns true when the episode has ended;
    /// further calls are then no-ops.
    pub fn advance(&mut self, input: &InputFrame) -> Result<bool, SimError> {
        if self.end.is_some() {
            return Ok(true);
        }
        let scene = self.scene;
        let i = self.frames.len();
        let now = input.time;
        let events = &mut self.events;
        let mut event = |kind: EventKind| events.push(Event { frame: i, time: now, kind });
        let state = &mut self.state;

        let was_gripping = state.grip_closed;
        if input.clutch_engaged != state.clutch_engaged {
            event(if input.clutch_engaged { EventKind::ClutchEngaged } else { EventKind::ClutchReleased });
        }
        state.grip_closed = input.grip_closed;
        state.clutch_engaged = input.clutch_engaged;

        let mut flags = FrameFlags { grip: state.grip_closed, clutch: state.clutch_engaged, ..FrameFlags::default() };
        let mut delivered_now = false;
        if let (Some(obj), Goal::Deliver { dropoff, grab_radius, zone_radius, .. }) = (self.object.as_mut(), &scene.goal) {
            if obj.held {
                obj.position = state.position;
            }
            if !was_gripping && state.grip_closed && !obj.held && !obj.delivered && state.position.distance(obj.position) <= *grab_radius {
                obj.held = true;
                state.held_object = Some(OBJECT_ID);
                event(EventKind::Grab);
            } else if was_gripping && !state.grip_closed && obj.held {
                obj.held = false;
                state.held_object = None;
                if state.position.distance(*dropoff) <= *zone_radius {
                    obj.delivered = true;
                    delivered_now = true;
                    event(EventKind::Deliver);
                } else {
                    flags.drop = true;
                    event(EventKind::Drop);
                }
            }
            flags.holding = obj.held;
        }

        let eval = self.fixtures.evaluate(state, now)?;
        for (k, report) in eval.fixtures.iter().enumerate() {
            flags.overshoot |= report.flags.overshoot;
            let degenerate = report.flags.degenerate_force || report.flags.degenerate_torque;
            flags.degenerate |= degenerate;
            if report.flags.overshoot && !self.prev_overshoot[k] {
                event(EventKind::Overshoot { fixture: report.id.clone() });
            }
            if degenerate && !self.prev_degenerate[k] {
                event(EventKind::Degenerate { fixture: report.id.clone() });
            }
            self.prev_overshoot[k] = report.flags.overshoot;
            self.prev_degenerate[k] = degenerate;
        }
        let applied = if self.params.assist_enabled { eval.applied } else { Wrench::ZERO };
        let (distance_error, angular_error) = errors(scene.metric_reference.as_ref(), state);

        self.frames.push(FrameLog {
            index: i,
            time: now,
            position: state.position,
            orientation: state.orientation,
            velocity: state.velocity,
            applied_force: applied.force,
            applied_torque: applied.torque,
            feedback_force: eval.total.force,
            feedback_torque: eval.total.torque,
            fixtures: eval.fixtures.iter().map(|r| (r.wrench.force, r.wrench.torque)).collect(),
            distance_error,
            angular_error,
            clearance: clearance(&self.obstacles, state.position),
            flags,
        });

        if self.start.is_none() && state.position.distance(scene.start) > scene.start_radius {
            self.start = Some(i);
            event(EventKind::Start);
        }
        if let Goal::Gates { gates, radius } = &scene.goal {
            if self.next_gate < gates.len() && state.position.distance(gates[self.next_gate]) <= *radius {
                event(EventKind::Gate { index: self.next_gate });
                self.next_gate += 1;
            }
        }
        if self.start.is_some() {
            let done = match &scene.goal {
                Goal::PathEnd { end, tolerance } => state.position.distance(*end) <= *tolerance,
                Goal::Reach { target, tolerance } => state.position.distance(*target) <= *tolerance,
                Goal::Gates { gates, .. } => self.next_gate == gates.len(),
                Goal::Deliver { .. } => delivered_now || self.object.as_ref().is_some_and(|o| o.delivered),
            };
            if done {
                self.end = Some(i);
                event(EventKind::End);
                return Ok(true);
            }
        }

        *state = admittance::step(state, input, &applied, &self.params, DT);
        Ok(false)
    }

    /// Closes the episode and returns its log.
    pub fn finish(self) -> EpisodeLog {
        let last = self.frames.len().saturating_sub(1);
        let bounds = self.start.map(|s| EpisodeBounds { start: s, end: self.end.unwrap_or(last) });
        EpisodeLog {
            scene: self.scene.name.clone(),
            task: self.scene.task.id().to_string(),
            seed: self.seed,
            assist: self.params.assist_enabled,
            fixture_ids: self.fixture_ids,
            frames: self.frames,
            incomplete: self.start.is_some() && self.end.is_none(),
            bounds,
            events: self.events,
        }
    }
}

pub(crate) fn errors(reference: Option<&MetricReference>, state: &EEState) -> (f64, f64) {
    let z = state.z_axis();
    match reference {
        None => (0.0, 0.0),
        Some(MetricReference::Polyline(line)) => {
            let q = line.closest_point(state.position);
            let t = q.tangent.unwrap_or(Vec3::Z);
            (q.distance, z.dot(t).clamp(-1.0, 1.0).acos())
        }
        Some(MetricReference::Cone(cone)) => {
            let c = cone.decompose(state.position);
            (c.radial.norm(), z.dot(cone.axis_unit()).clamp(-1.0, 1.0).acos())
        }
        Some(MetricReference::Mesh(mesh, mode)) => {
            let q = mesh.closest_surface_point_with(state.position, *mode);
            let n = q.normal.unwrap_or(Vec3::Z);
            (q.distance, z.dot(n).abs().clamp(0.0, 1.0).asin())
        }
    }
}

fn clearance(obstacles: &[Arc<TriMesh>], p: Vec3) -> Option<f64> {
    obstacles.iter().map(|m| m.signed_distance(p)).reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::sim::{InputFrame, Scene};

    const SCENE: &str = r#"
schema_version = 1
name = "line"
task = "path"
start = [0.0, 0.0, 0.0]
start_orientation = [0.7071067811865476, 0.0, 0.7071067811865476, 0.0]

[goal]
kind = "path_end"
tolerance = 1.0

[[geometry]]
id = "route"
kind = "polyline"
points = [[0.0, 0.0, 0.0], [30.0, 0.0, 0.0]]

[[fixture]]
id = "guide"
kind = "trajectory"
geometry = "route"
force_map = { threshold = 0.5, half_width = 1.0, steepness = 1.0, profile = "rising_with_error" }
gains = { k_f = 2.0, eta_f = 0.1, k_t = 0.05 }
"#;

    fn scene() -> Scene {
        Scene::from_toml(SCENE, Path::new(".")).unwrap()
    }

    fn stream(n: usize, v: Vec3) -> InputStream {
        InputStream::new(
            (0..n)
                .map(|i| InputFrame {
                    time: i as f64 * DT,
                    target_velocity: v,
                    target_angular_velocity: Vec3::ZERO,
                    grip_closed: false,
                    clutch_engaged: false,
                })
                .collect(),
        )
    }

    #[test]
    fn idle_stream_never_starts() {
        let log = run_episode(&scene(), &stream(60, Vec3::ZERO), &AdmittanceParams::default(), 0).unwrap();
        assert!(!log.started());
        assert!(log.in_bounds().is_none());
        assert!(!log.incomplete);
        assert!(log.metrics().is_none());
    }

    #[test]
    fn straight_traversal_completes_on_the_line() {
        let log = run_episode(&scene(), &stream(60, Vec3::new(15.0, 0.0, 0.0)), &AdmittanceParams::default(), 0).unwrap();
        let b = log.bounds.unwrap();
        assert!(!log.incomplete);
        // 2 mm start radius at 0.5 mm per frame.
        assert_eq!(b.start, 5);
        let m = log.metrics().unwrap();
        assert!(m.d < 1e-9 && m.a < 1e-9, "{m:?}");
        assert_eq!(log.frames.last().unwrap().index, b.end);
    }

    #[test]
    fn short_stream_is_incomplete() {
        let log = run_episode(&scene(), &stream(20, Vec3::new(15.0, 0.0, 0.0)), &AdmittanceParams::default(), 0).unwrap();
        assert!(log.incomplete);
        assert_eq!(log.bounds.unwrap().end, 19);
    }

    #[test]
    fn unassisted_logs_zero_applied_but_shadow_wrenches() {
        let s = stream(60, Vec3::new(15.0, 3.0, 0.0));
        let log = run_episode(&scene(), &s, &AdmittanceParams::unassisted(), 7).unwrap();
        assert!(log.frames.iter().all(|f| f.applied_force == Vec3::ZERO && f.applied_torque == Vec3::ZERO));
        assert!(log.frames.iter().any(|f| f.fixtures[0].0.norm() > 0.0));
        let end = log.frames.last().unwrap().position;
        assert!((end - Vec3::new(0.5, 0.1, 0.0) * log.frames.len() as f64 + Vec3::new(0.5, 0.1, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let s = stream(60, Vec3::new(15.0, 3.0, -1.0));
        let a = run_episode(&scene(), &s, &AdmittanceParams::default(), 3).unwrap();
        let b = run_episode(&scene(), &s, &AdmittanceParams::default(), 3).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn csv_has_one_row_per_frame_and_fixture_columns() {
        let log = run_episode(&scene(), &stream(10, Vec3::new(15.0, 0.0, 0.0)), &AdmittanceParams::default(), 0).unwrap();
        let csv = log.to_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.ends_with("guide_tx,guide_ty,guide_tz"));
        let cols = header.split(',').count();
        assert_eq!(lines.clone().count(), 10);
        assert!(lines.all(|l| l.split(',').count() == cols));
    }

    #[test]
    fn unit_and_rate_mismatch_rejected() {
        let mut s = stream(10, Vec3::ZERO);
        s.units = crate::sim::LengthUnit::Metre;
        assert!(matches!(run_episode(&scene(), &s, &AdmittanceParams::default(), 0), Err(SimError::UnitMismatch { .. })));
        let mut s = stream(10, Vec3::ZERO);
        s.frames[4].time = 0.5;
        assert!(matches!(run_episode(&scene(), &s, &AdmittanceParams::default(), 0), Err(SimError::RateMismatch { .. })));
    }

    #[test]
    fn clutch_counts_time_but_not_motion() {
        let mut s = stream(60, Vec3::new(15.0, 0.0, 0.0));
        for f in &mut s.frames[10..16] {
            f.clutch_engaged = true;
        }
        let log = run_episode(&scene(), &s, &AdmittanceParams::default(), 0).unwrap();
        let p10 = log.frames[10].position;
        assert!(log.frames[10..=16].iter().all(|f| f.position == p10));
        let m = log.metrics().unwrap();
        let n = log.in_bounds().unwrap().len() as f64;
        assert!((m.c - 6.0 / n).abs() < 1e-15);
        assert!(log.events.iter().any(|e| e.kind == EventKind::ClutchEngaged));
    }
}
