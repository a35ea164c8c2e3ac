use serde::{Deserialize, Serialize};

use super::{EEState, InputFrame, SimError};
use crate::fixtures::Wrench;

/// Simulated hand compliance: how strongly rendered force and torque bend the
/// commanded motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceParams {
    /// mm/(N·s)
    pub g_f: f64,
    /// rad/(N·m·s)
    pub g_t: f64,
    pub assist_enabled: bool,
}

impl Default for AdmittanceParams {
    fn default() -> Self {
        Self { g_f: 10.0, g_t: 10.0, assist_enabled: true }
    }
}

impl AdmittanceParams {
    pub fn unassisted() -> Self {
        Self { assist_enabled: false, ..Self::default() }
    }

    pub fn with_assist(mut self, on: bool) -> Self {
        self.assist_enabled = on;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("g_f", self.g_f), ("g_t", self.g_t)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::Admittance(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Advances the end-effector by one frame.
///
/// While the clutch is engaged the pose is frozen. Otherwise the position
/// moves at `target_velocity + G_F·force` and the orientation at
/// `target_angular_velocity + G_T·torque` (world frame, exponential map). With
/// assistance disabled the wrench has no effect.
pub fn step(state: &EEState, input: &InputFrame, wrench: &Wrench, params: &AdmittanceParams, dt: f64) -> EEState {
    let mut next = *state;
    next.grip_closed = input.grip_closed;
    next.clutch_engaged = input.clutch_engaged;
    if input.clutch_engaged {
        next.velocity = crate::geom::Vec3::ZERO;
        return next;
    }
    let (force, torque) = if params.assist_enabled {
        (wrench.force, wrench.torque)
    } else {
        (crate::geom::Vec3::ZERO, crate::geom::Vec3::ZERO)
    };
    let velocity = input.target_velocity + force * params.g_f;
    let omega = input.target_angular_velocity + torque * params.g_t;
    next.position = state.position + velocity * dt;
    next.orientation = state.orientation.integrate(omega, dt);
    next.velocity = velocity;
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Quat, Vec3};
    use crate::sim::DT;

    fn input(v: Vec3, clutch: bool) -> InputFrame {
        InputFrame { time: 0.0, target_velocity: v, target_angular_velocity: Vec3::ZERO, grip_closed: false, clutch_engaged: clutch }
    }

    #[test]
    fn pure_input_motion() {
        let s = EEState::default();
        let next = step(&s, &input(Vec3::new(30.0, 0.0, 0.0), false), &Wrench::ZERO, &AdmittanceParams::default(), DT);
        assert!((next.position - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(next.velocity, Vec3::new(30.0, 0.0, 0.0));
    }

    #[test]
    fn clutch_freezes_pose() {
        let s = EEState::at(Vec3::new(1.0, 2.0, 3.0), Quat::from_axis_angle(Vec3::X, 0.3));
        let w = Wrench { force: Vec3::X, torque: Vec3::Y, ..Wrench::ZERO };
        let mut i = input(Vec3::new(30.0, 5.0, 0.0), true);
        i.target_angular_velocity = Vec3::Z;
        let next = step(&s, &i, &w, &AdmittanceParams::default(), DT);
        assert_eq!(next.position, s.position);
        assert_eq!(next.orientation, s.orientation);
        assert!(next.clutch_engaged);
    }

    #[test]
    fn force_moves_through_admittance() {
        let params = AdmittanceParams { g_f: 3.0, ..AdmittanceParams::default() };
        let w = Wrench { force: Vec3::Y, ..Wrench::ZERO };
        let next = step(&EEState::default(), &input(Vec3::ZERO, false), &w, &params, DT);
        assert!((next.position - Vec3::new(0.0, 0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unassisted_ignores_wrench() {
        let w = Wrench { force: Vec3::Y, torque: Vec3::X, ..Wrench::ZERO };
        let next = step(&EEState::default(), &input(Vec3::ZERO, false), &w, &AdmittanceParams::unassisted(), DT);
        assert_eq!(next.position, Vec3::ZERO);
        assert_eq!(next.orientation, Quat::IDENTITY);
    }
}
