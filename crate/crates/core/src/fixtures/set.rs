use super::laws::{clamp_norm, insertion_guidance, obstacle_avoidance, surface_guidance, trajectory_guidance};
use super::{FixtureBinding, FixtureError, FixtureFlags, FixtureGeometry, FixtureKind, LawState, MeshQuery, Wrench};
use crate::fixtures::{DEFAULT_F_MAX, DEFAULT_T_MAX};
use crate::geom::ProximityResult;
use crate::sim::EEState;

#[derive(Debug, Clone)]
struct Channel {
    binding: FixtureBinding,
    law: LawState,
}

/// One fixture's contribution for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub id: String,
    pub wrench: Wrench,
    pub shadow: bool,
    pub flags: FixtureFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Clamped sum of enabled, non-shadow fixtures.
    pub applied: Wrench,
    /// Clamped sum of every enabled fixture, shadow ones included. This is
    /// the feedback the assistance would render and what the F/T metrics use.
    pub total: Wrench,
    /// Enabled fixtures in binding order.
    pub fixtures: Vec<FixtureReport>,
}

/// All fixtures of a scene plus their viscous-term history.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    channels: Vec<Channel>,
    f_max: f64,
    t_max: f64,
}

impl FixtureSet {
    pub fn new(bindings: Vec<FixtureBinding>, f_max: f64, t_max: f64, smoothing_alpha: f64) -> Result<Self, FixtureError> {
        for (name, value) in [("f_max", f_max), ("t_max", t_max)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FixtureError::BadLimit { name, value });
            }
        }
        let channels = bindings
            .into_iter()
            .map(|binding| {
                binding.validate()?;
                Ok(Channel { binding, law: LawState::with_alpha(smoothing_alpha)? })
            })
            .collect::<Result<Vec<_>, FixtureError>>()?;
        Ok(Self { channels, f_max, t_max })
    }

    pub fn with_default_limits(bindings: Vec<FixtureBinding>) -> Result<Self, FixtureError> {
        Self::new(bindings, DEFAULT_F_MAX, DEFAULT_T_MAX, crate::fieldmap::DEFAULT_SMOOTHING_ALPHA)
    }

    pub fn bindings(&self) -> impl Iterator<Item = &FixtureBinding> {
        self.channels.iter().map(|c| &c.binding)
    }

    pub fn enabled_ids(&self) -> Vec<String> {
        self.channels
            .iter()
            .filter(|c| c.binding.enabled)
            .map(|c| c.binding.id.clone())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Evaluates every enabled fixture at `now` (seconds), sums and clamps.
    pub fn evaluate(&mut self, state: &EEState, now: f64) -> Result<Evaluation, FixtureError> {
        let mut fixtures = Vec::with_capacity(self.channels.len());
        let mut applied = Wrench::ZERO;
        let mut total = Wrench::ZERO;
        for ch in self.channels.iter_mut().filter(|c| c.binding.enabled) {
            let out = evaluate_one(state, &ch.binding, &mut ch.law, now)?;
            accumulate(&mut total, &out.wrench);
            if !ch.binding.shadow {
                accumulate(&mut applied, &out.wrench);
            }
            fixtures.push(FixtureReport {
                id: ch.binding.id.clone(),
                wrench: out.wrench,
                shadow: ch.binding.shadow,
                flags: out.flags,
            });
        }
        for w in [&mut applied, &mut total] {
            w.force = clamp_norm(w.force, self.f_max);
            w.torque = clamp_norm(w.torque, self.t_max);
        }
        Ok(Evaluation { applied, total, fixtures })
    }
}

fn accumulate(sum: &mut Wrench, w: &Wrench) {
    sum.force += w.force;
    sum.torque += w.torque;
    sum.elastic_force += w.elastic_force;
    sum.viscous_force += w.viscous_force;
    sum.elastic_torque += w.elastic_torque;
    sum.viscous_torque += w.viscous_torque;
}

/// Proximity query a binding needs, or `None` for cone fixtures.
pub(crate) fn query(binding: &FixtureBinding, state: &EEState) -> Option<ProximityResult> {
    let p = state.position;
    match (&binding.geometry, binding.kind) {
        (FixtureGeometry::Polyline(line), _) => Some(line.closest_point(p)),
        (FixtureGeometry::Mesh(mesh), FixtureKind::Obstacle) => Some(match binding.mesh_query {
            MeshQuery::Vertex => mesh.closest_vertex(p),
            MeshQuery::Surface => mesh.closest_surface_point_with(p, binding.normal_mode),
        }),
        (FixtureGeometry::Mesh(mesh), _) => Some(mesh.closest_surface_point_with(p, binding.normal_mode)),
        (FixtureGeometry::Cone(_), _) => None,
    }
}

fn evaluate_one(
    state: &EEState,
    binding: &FixtureBinding,
    law: &mut LawState,
    now: f64,
) -> Result<super::FixtureOutput, FixtureError> {
    match (binding.kind, &binding.geometry) {
        (FixtureKind::Insertion, FixtureGeometry::Cone(cone)) => insertion_guidance(state, cone, binding, law, now),
        (kind, _) => {
            let q = query(binding, state).ok_or(FixtureError::GeometryMismatch {
                kind,
                geometry: binding.geometry.kind_name(),
            })?;
            match kind {
                FixtureKind::Trajectory => trajectory_guidance(state, &q, binding, law, now),
                FixtureKind::Obstacle => obstacle_avoidance(state, &q, binding, law, now),
                FixtureKind::Surface => surface_guidance(state, &q, binding, law, now),
                FixtureKind::Insertion => Err(FixtureError::GeometryMismatch {
                    kind,
                    geometry: binding.geometry.kind_name(),
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fieldmap::{MapParams, Profile};
    use crate::fixtures::GainSet;
    use crate::geom::{Polyline, Quat, Vec3};

    fn line_binding(id: &str, y: f64) -> FixtureBinding {
        let line = Polyline::new(vec![Vec3::new(0.0, y, 0.0), Vec3::new(10.0, y, 0.0)]).unwrap();
        let map = MapParams::new(0.5, 0.5, 1.0, Profile::RisingWithError).unwrap();
        let gains = GainSet { k_f: 1.0, ..GainSet::default() };
        FixtureBinding::new(id, FixtureKind::Trajectory, FixtureGeometry::Polyline(Arc::new(line)), map, gains)
    }

    fn state() -> EEState {
        EEState::at(Vec3::new(5.0, 0.0, 0.0), Quat::from_to(Vec3::Z, Vec3::X))
    }

    #[test]
    fn empty_set_is_zero() {
        let mut set = FixtureSet::with_default_limits(vec![]).unwrap();
        let e = set.evaluate(&state(), 0.0).unwrap();
        assert_eq!(e.applied, Wrench::ZERO);
        assert!(e.fixtures.is_empty());
    }

    #[test]
    fn single_fixture_passes_through() {
        let mut set = FixtureSet::with_default_limits(vec![line_binding("a", 3.0)]).unwrap();
        let e = set.evaluate(&state(), 0.0).unwrap();
        assert_eq!(e.applied.force, e.fixtures[0].wrench.force);
        assert!(e.applied.force.y > 0.0);
    }

    #[test]
    fn opposite_fixtures_cancel() {
        let mut set = FixtureSet::with_default_limits(vec![line_binding("up", 3.0), line_binding("down", -3.0)]).unwrap();
        let e = set.evaluate(&state(), 0.0).unwrap();
        assert_eq!(e.applied.force, Vec3::ZERO);
        assert!(e.fixtures[0].wrench.force.norm() > 0.5);
    }

    #[test]
    fn shadow_fixtures_are_logged_not_applied() {
        let mut shadow = line_binding("s", 3.0);
        shadow.shadow = true;
        let mut disabled = line_binding("off", -3.0);
        disabled.enabled = false;
        let mut set = FixtureSet::with_default_limits(vec![shadow, disabled]).unwrap();
        let e = set.evaluate(&state(), 0.0).unwrap();
        assert_eq!(e.applied.force, Vec3::ZERO);
        assert_eq!(e.fixtures.len(), 1);
        assert!(e.total.force.norm() > 0.5);
    }

    #[test]
    fn sum_is_clamped() {
        let mut a = line_binding("a", 3.0);
        a.gains.k_f = 4.0;
        let b = FixtureBinding { id: "b".into(), ..a.clone() };
        let mut set = FixtureSet::new(vec![a, b], 5.0, 0.2, 0.5).unwrap();
        let e = set.evaluate(&state(), 0.0).unwrap();
        assert!((e.applied.force.norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_geometry() {
        let mut b = line_binding("x", 1.0);
        b.kind = FixtureKind::Obstacle;
        assert!(matches!(
            FixtureSet::with_default_limits(vec![b]),
            Err(FixtureError::GeometryMismatch { .. })
        ));
    }
}
