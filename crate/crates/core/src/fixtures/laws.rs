use std::f64::consts::FRAC_PI_2;

use super::{FixtureBinding, FixtureError, GainSet, Wrench};
use crate::fieldmap::RateEstimator;
use crate::geom::{rotate_vector, ConeFrame, ProximityResult, Vec3, DEGENERATE_EPS};
use crate::sim::EEState;

/// Per-fixture history needed by the viscous terms. One per fixture channel.
#[derive(Debug, Clone, Default)]
pub struct LawState {
    pub force_rate: RateEstimator,
    pub torque_rate: RateEstimator,
    previous_radial: Option<f64>,
}

impl LawState {
    pub fn with_alpha(alpha: f64) -> Result<Self, FixtureError> {
        Ok(Self {
            force_rate: RateEstimator::new(alpha)?,
            torque_rate: RateEstimator::new(alpha)?,
            previous_radial: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FixtureFlags {
    /// Torque axis undefined (parallel vectors); torque zeroed.
    pub degenerate_torque: bool,
    /// Force direction undefined (zero error or parallel velocity); the
    /// affected term was zeroed or replaced by its limit direction.
    pub degenerate_force: bool,
    /// End-effector beyond the insertion target.
    pub overshoot: bool,
}

impl FixtureFlags {
    pub fn any(&self) -> bool {
        self.degenerate_torque || self.degenerate_force || self.overshoot
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureOutput {
    pub wrench: Wrench,
    pub flags: FixtureFlags,
}

/// `F = K_F·F_e + η_F·F_v`, `T = K_T·T_e + η_T·T_v`, each rescaled to its
/// limit when the norm exceeds it. The breakdown keeps the raw inputs.
pub fn combine_and_clamp(
    elastic_force: Vec3,
    viscous_force: Vec3,
    elastic_torque: Vec3,
    viscous_torque: Vec3,
    gains: &GainSet,
) -> Result<Wrench, FixtureError> {
    for (name, v) in [
        ("elastic force", elastic_force),
        ("viscous force", viscous_force),
        ("elastic torque", elastic_torque),
        ("viscous torque", viscous_torque),
    ] {
        if !v.is_finite() {
            return Err(FixtureError::NonFinite(name));
        }
    }
    let force = clamp_norm(elastic_force * gains.k_f + viscous_force * gains.eta_f, gains.f_max);
    let torque = clamp_norm(elastic_torque * gains.k_t + viscous_torque * gains.eta_t, gains.t_max);
    Ok(Wrench { force, torque, elastic_force, viscous_force, elastic_torque, viscous_torque })
}

pub(crate) fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// Attracts the end-effector to the closest point of a reference polyline and
/// turns its tool axis onto the local tangent.
///
/// Force: `f(‖d‖)·d̂` elastic. The viscous term is `d̂` while moving away from
/// the line (`v̂·d̂ < 0`), otherwise `v̂` rotated by `(1 + v̂·d̂)·π/2` about
/// `v̂×d̂`. Torque: misalignment angle `acos(ẑ·t̂)` and its rate, about the
/// unit axis of `ẑ×t̂`.
pub fn trajectory_guidance(
    state: &EEState,
    q: &ProximityResult,
    binding: &FixtureBinding,
    law: &mut LawState,
    now: f64,
) -> Result<FixtureOutput, FixtureError> {
    let tangent = q.tangent.ok_or(FixtureError::Missing("tangent"))?;
    let mut flags = FixtureFlags::default();
    let mapped = binding.force_map.map(q.distance)?;

    let (elastic_force, viscous_force) = match q.direction {
        None => {
            flags.degenerate_force = true;
            (Vec3::ZERO, Vec3::ZERO)
        }
        Some(d) => {
            let viscous = match state.velocity.try_normalize(DEGENERATE_EPS) {
                None => Vec3::ZERO,
                Some(v) => {
                    let vd = v.dot(d);
                    if vd < 0.0 {
                        d
                    } else {
                        let theta = (1.0 + vd) * FRAC_PI_2;
                        let rotated = rotate_vector(v, theta, v.cross(d));
                        if rotated.degenerate_axis {
                            // v̂ ∥ d̂: a half turn about any perpendicular axis.
                            flags.degenerate_force = true;
                            -v
                        } else {
                            rotated.vector
                        }
                    }
                }
            };
            (d * mapped, viscous)
        }
    };

    let z = state.z_axis();
    let angle = z.dot(tangent).clamp(-1.0, 1.0).acos();
    let angle_rate = law.torque_rate.rate(angle, now)?;
    let (elastic_torque, viscous_torque) = match z.cross(tangent).try_normalize(DEGENERATE_EPS) {
        Some(axis) => (axis * angle, axis * angle_rate),
        None => {
            flags.degenerate_torque = true;
            (Vec3::ZERO, Vec3::ZERO)
        }
    };
    let wrench = combine_and_clamp(elastic_force, viscous_force, elastic_torque, viscous_torque, &binding.gains)?;
    Ok(FixtureOutput { wrench, flags })
}

/// Repels the end-effector along the obstacle normal at the closest mesh
/// feature: `f(‖d‖)·n̂` plus `d/dt[f(‖d‖)]·n̂`. No torque.
pub fn obstacle_avoidance(
    _state: &EEState,
    q: &ProximityResult,
    binding: &FixtureBinding,
    law: &mut LawState,
    now: f64,
) -> Result<FixtureOutput, FixtureError> {
    let n = q.normal.ok_or(FixtureError::Missing("normal"))?;
    let mapped = binding.force_map.map(q.distance)?;
    let rate = law.force_rate.rate(mapped, now)?;
    let wrench = combine_and_clamp(n * mapped, n * rate, Vec3::ZERO, Vec3::ZERO, &binding.gains)?;
    Ok(FixtureOutput { wrench, flags: FixtureFlags::default() })
}

/// Pulls the end-effector onto a reference surface along `−n̂` and turns its
/// tool axis into the surface tangent plane.
pub fn surface_guidance(
    state: &EEState,
    q: &ProximityResult,
    binding: &FixtureBinding,
    law: &mut LawState,
    now: f64,
) -> Result<FixtureOutput, FixtureError> {
    let n = q.normal.ok_or(FixtureError::Missing("normal"))?;
    let torque_map = binding.torque_map.as_ref().ok_or(FixtureError::MissingTorqueMap)?;
    let mut flags = FixtureFlags::default();

    let mapped = binding.force_map.map(q.distance)?;
    let rate = law.force_rate.rate(mapped, now)?;
    let elastic_force = -n * mapped;
    let viscous_force = -n * rate;

    let z = state.z_axis();
    let projected = z - n * z.dot(n);
    let (elastic_torque, viscous_torque) = match projected.try_normalize(DEGENERATE_EPS) {
        None => {
            flags.degenerate_torque = true;
            (Vec3::ZERO, Vec3::ZERO)
        }
        Some(zp) => {
            let theta = z.dot(zp).clamp(-1.0, 1.0).acos();
            let g = torque_map.map(theta)?;
            let g_rate = law.torque_rate.rate(g, now)?;
            match z.cross(zp).try_normalize(DEGENERATE_EPS) {
                Some(u) => (u * g, u * g_rate),
                None => {
                    flags.degenerate_torque = true;
                    (Vec3::ZERO, Vec3::ZERO)
                }
            }
        }
    };
    let wrench = combine_and_clamp(elastic_force, viscous_force, elastic_torque, viscous_torque, &binding.gains)?;
    Ok(FixtureOutput { wrench, flags })
}

/// Keeps the end-effector inside an insertion cone.
///
/// The map threshold follows the local cone radius `a·‖l‖`; the force acts
/// along the radial vector (towards the axis) and is halved once the
/// remaining axial distance is within the relax distance. The viscous term
/// differentiates the map under the current frame's threshold.
pub fn insertion_guidance(
    state: &EEState,
    cone: &ConeFrame,
    binding: &FixtureBinding,
    law: &mut LawState,
    now: f64,
) -> Result<FixtureOutput, FixtureError> {
    let mut flags = FixtureFlags::default();
    let coords = cone.decompose(state.position);
    if coords.overshoot {
        flags.overshoot = true;
        law.previous_radial = None;
        law.force_rate.reset();
        let wrench = combine_and_clamp(Vec3::ZERO, Vec3::ZERO, Vec3::ZERO, Vec3::ZERO, &binding.gains)?;
        return Ok(FixtureOutput { wrench, flags });
    }
    let relax = relax_factor(coords.axial.norm(), cone.relax_distance());
    let params = binding.force_map.with_threshold(coords.radial_threshold);
    let radial = coords.radial.norm();
    let mapped = params.map(radial)?;
    if let Some(prev) = law.previous_radial {
        law.force_rate.rebase(params.map(prev)?);
    }
    let rate = law.force_rate.rate(mapped, now)?;
    law.previous_radial = Some(radial);

    let (elastic_force, viscous_force) = match coords.radial.try_normalize(DEGENERATE_EPS) {
        Some(dir) => (dir * (relax * mapped), dir * (relax * rate)),
        None => {
            flags.degenerate_force = true;
            (Vec3::ZERO, Vec3::ZERO)
        }
    };
    let wrench = combine_and_clamp(elastic_force, viscous_force, Vec3::ZERO, Vec3::ZERO, &binding.gains)?;
    Ok(FixtureOutput { wrench, flags })
}

/// 1 outside the relax distance, ½ within it.
pub fn relax_factor(axial_distance: f64, relax_distance: f64) -> f64 {
    if axial_distance > relax_distance {
        1.0
    } else {
        0.5
    }
}
