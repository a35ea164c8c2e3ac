//! Haptic virtual fixtures for teleoperated surgical training.
//!
//! * [`geom`]: proximity queries, rotations and insertion-cone coordinates.
//! * [`fieldmap`]: the sigmoidal error map and rate estimation.
//! * [`fixtures`]: trajectory, obstacle, surface and insertion assistance.
//! * [`sim`]: a deterministic 30 Hz teleoperation harness.
//! * [`score`]: per-episode metrics and the expert-normalized performance index.

pub mod fieldmap;
pub mod fixtures;
pub mod geom;
pub mod score;
pub mod sim;
