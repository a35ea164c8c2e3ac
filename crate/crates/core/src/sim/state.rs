use serde::{Deserialize, Serialize};

use crate::geom::{Quat, Vec3};

/// Simulated end-effector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EEState {
    /// mm
    pub position: Vec3,
    pub orientation: Quat,
    /// mm/s, the linear rate applied during the last step.
    pub velocity: Vec3,
    pub grip_closed: bool,
    pub clutch_engaged: bool,
    pub held_object: Option<u32>,
}

impl EEState {
    pub fn at(position: Vec3, orientation: Quat) -> Self {
        Self {
            position,
            orientation: orientation.normalized(),
            velocity: Vec3::ZERO,
            grip_closed: false,
            clutch_engaged: false,
            held_object: None,
        }
    }

    /// Tool axis: the orientation applied to local `(0, 0, 1)`.
    pub fn z_axis(&self) -> Vec3 {
        self.orientation.z_axis()
    }
}

impl Default for EEState {
    fn default() -> Self {
        EEState::at(Vec3::ZERO, Quat::IDENTITY)
    }
}
