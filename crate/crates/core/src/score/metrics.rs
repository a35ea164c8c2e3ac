use serde::{Deserialize, Serialize};

use super::ScoreError;
use crate::sim::EpisodeLog;

/// Episode aggregate of the six skill metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricVector {
    /// Mean distance error, mm.
    pub d: f64,
    /// Mean angular error, rad.
    pub a: f64,
    /// Mean feedback force magnitude, N.
    pub f: f64,
    /// Mean feedback torque magnitude, N·m.
    pub t: f64,
    /// Drops while exchanging.
    pub m: u32,
    /// Fraction of frames spent clutched.
    pub c: f64,
}

impl MetricVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.d, self.a, self.f, self.t, f64::from(self.m), self.c]
    }
}

/// Means of D, A, F, T over the frames between episode start and end
/// (inclusive), the drop count, and the clutched-frame fraction.
pub fn aggregate(log: &EpisodeLog) -> Result<MetricVector, ScoreError> {
    let frames = log.in_bounds().ok_or(ScoreError::NotStarted)?;
    if frames.is_empty() {
        return Err(ScoreError::NoFrames);
    }
    let n = frames.len() as f64;
    let mut out = MetricVector::default();
    let mut clutched = 0usize;
    for f in frames {
        out.d += f.distance_error;
        out.a += f.angular_error;
        out.f += f.feedback_force.norm();
        out.t += f.feedback_torque.norm();
        if f.flags.drop {
            out.m += 1;
        }
        if f.flags.clutch {
            clutched += 1;
        }
    }
    out.d /= n;
    out.a /= n;
    out.f /= n;
    out.t /= n;
    out.c = clutched as f64 / n;
    Ok(out)
}
