//! Sigmoidal error mapping and the causal rate estimator used for the viscous
//! terms.
//!
//! The map is `1 / (1 + exp(c·δ·w·(E − t − h)))` with `c` the gain constant
//! (5 by default). `δ = −1` gives a map that rises with the error (guidance),
//! `δ = +1` one that falls with it (repulsion). Either way the map passes
//! through exactly ½ at `E = t + h`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GAIN_CONSTANT: f64 = 5.0;
pub const DEFAULT_SMOOTHING_ALPHA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldMapError {
    #[error("non-finite error value {0}")]
    NonFiniteError(f64),
    #[error("half width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("steepness must be positive, got {0}")]
    BadSteepness(f64),
    #[error("threshold must be finite, got {0}")]
    BadThreshold(f64),
    #[error("gain constant must be positive, got {0}")]
    BadGainConstant(f64),
    #[error("smoothing alpha must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("timestamp {now} does not advance past {previous}")]
    NonMonotoneTime { previous: f64, now: f64 },
}

/// Whether the mapped output grows or shrinks as the error grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// δ = −1: negligible below the threshold, saturating above it.
    RisingWithError,
    /// δ = +1: saturating close to zero error, negligible far away.
    FallingWithError,
}

impl Profile {
    /// The sign `δ` multiplying the exponent.
    pub fn delta(self) -> f64 {
        match self {
            Profile::RisingWithError => -1.0,
            Profile::FallingWithError => 1.0,
        }
    }

    /// Profile for a raw exponent sign.
    pub fn from_delta(delta: f64) -> Profile {
        if delta < 0.0 {
            Profile::RisingWithError
        } else {
            Profile::FallingWithError
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub threshold: f64,
    pub half_width: f64,
    pub steepness: f64,
    pub profile: Profile,
    #[serde(default = "default_gain_constant")]
    pub gain_constant: f64,
}

fn default_gain_constant() -> f64 {
    DEFAULT_GAIN_CONSTANT
}

impl MapParams {
    pub fn new(threshold: f64, half_width: f64, steepness: f64, profile: Profile) -> Result<Self, FieldMapError> {
        let p = Self { threshold, half_width, steepness, profile, gain_constant: DEFAULT_GAIN_CONSTANT };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FieldMapError> {
        if !self.threshold.is_finite() {
            return Err(FieldMapError::BadThreshold(self.threshold));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(FieldMapError::BadHalfWidth(self.half_width));
        }
        if !(self.steepness > 0.0 && self.steepness.is_finite()) {
            return Err(FieldMapError::BadSteepness(self.steepness));
        }
        if !(self.gain_constant > 0.0 && self.gain_constant.is_finite()) {
            return Err(FieldMapError::BadGainConstant(self.gain_constant));
        }
        Ok(())
    }

    /// Same parameters with a different threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Error value where the map equals ½.
    pub fn midpoint(&self) -> f64 {
        self.threshold + self.half_width
    }

    pub fn map(&self, error: f64) -> Result<f64, FieldMapError> {
        map_error(self, error)
    }
}

const MAP_FLOOR: f64 = f64::MIN_POSITIVE;
const MAP_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Evaluates the sigmoid. The result is kept strictly inside (0, 1) even where
/// the exponential saturates in floating point.
pub fn map_error(params: &MapParams, error: f64) -> Result<f64, FieldMapError> {
    if !error.is_finite() {
        return Err(FieldMapError::NonFiniteError(error));
    }
    let exponent = params.gain_constant * params.profile.delta() * params.steepness * (error - params.midpoint());
    let value = 1.0 / (1.0 + exponent.exp());
    Ok(value.clamp(MAP_FLOOR, MAP_CEIL))
}

/// Exponentially smoothed backward difference.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimator {
    alpha: f64,
    previous: Option<(f64, f64)>,
    last_rate: f64,
}

impl Default for RateEstimator {
    fn default() -> Self {
        Self { alpha: DEFAULT_SMOOTHING_ALPHA, previous: None, last_rate: 0.0 }
    }
}

impl RateEstimator {
    pub fn new(alpha: f64) -> Result<Self, FieldMapError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(FieldMapError::BadAlpha(alpha));
        }
        Ok(Self { alpha, previous: None, last_rate: 0.0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn has_history(&self) -> bool {
        self.previous.is_some()
    }

    pub fn reset(&mut self) {
        self.previous = None;
        self.last_rate = 0.0;
    }

    /// Replaces the stored previous sample value, keeping its timestamp. Used
    /// when the quantity being differentiated is re-parameterized between
    /// frames and the old sample must be re-expressed under the new
    /// parameters.
    pub fn rebase(&mut self, previous_value: f64) {
        if let Some((_, t)) = self.previous {
            self.previous = Some((previous_value, t));
        }
    }

    /// Feeds a sample and returns the smoothed rate. The first sample yields 0.
    pub fn rate(&mut self, value: f64, now: f64) -> Result<f64, FieldMapError> {
        let Some((prev_value, prev_time)) = self.previous else {
            self.previous = Some((value, now));
            self.last_rate = 0.0;
            return Ok(0.0);
        };
        if !(now > prev_time) {
            return Err(FieldMapError::NonMonotoneTime { previous: prev_time, now });
        }
        let raw = (value - prev_value) / (now - prev_time);
        let out = self.alpha * raw + (1.0 - self.alpha) * self.last_rate;
        self.previous = Some((value, now));
        self.last_rate = out;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(profile: Profile) -> MapParams {
        MapParams::new(10.0, 5.0, 0.2, profile).unwrap()
    }

    #[test]
    fn midpoint_is_half_for_both_profiles() {
        for p in [Profile::RisingWithError, Profile::FallingWithError] {
            assert_eq!(map_error(&params(p), 15.0).unwrap(), 0.5);
        }
    }

    #[test]
    fn saturation_values() {
        let rising = params(Profile::RisingWithError);
        let falling = params(Profile::FallingWithError);
        assert!((rising.map(25.0).unwrap() - 1.0 / (1.0 + (-10.0f64).exp())).abs() < 1e-15);
        assert!((rising.map(0.0).unwrap() - 1.0 / (1.0 + 15.0f64.exp())).abs() < 1e-20);
        assert!((falling.map(0.0).unwrap() - 1.0 / (1.0 + (-15.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn stays_open_interval_at_extremes() {
        let rising = params(Profile::RisingWithError);
        for e in [0.0, 1e6, 1e300] {
            let v = rising.map(e).unwrap();
            assert!(v > 0.0 && v < 1.0, "{e} -> {v}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(Profile::RisingWithError);
        assert!(matches!(p.map(f64::NAN), Err(FieldMapError::NonFiniteError(_))));
        assert!(matches!(p.map(f64::INFINITY), Err(FieldMapError::NonFiniteError(_))));
        assert!(MapParams::new(1.0, 0.0, 1.0, Profile::RisingWithError).is_err());
        assert!(MapParams::new(1.0, 1.0, -1.0, Profile::RisingWithError).is_err());
    }

    #[test]
    fn delta_round_trip() {
        for p in [Profile::RisingWithError, Profile::FallingWithError] {
            assert_eq!(Profile::from_delta(p.delta()), p);
        }
    }

    #[test]
    fn first_rate_is_zero() {
        let mut r = RateEstimator::default();
        assert_eq!(r.rate(42.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn backward_difference() {
        let mut r = RateEstimator::new(1.0).unwrap();
        r.rate(0.0, 0.0).unwrap();
        let v = r.rate(3.0, 1.0 / 30.0).unwrap();
        assert!((v - 90.0).abs() < 1e-9);
    }

    #[test]
    fn constant_signal_has_zero_rate() {
        let mut r = RateEstimator::default();
        r.rate(7.0, 0.0).unwrap();
        assert!(r.rate(7.0, 0.1).unwrap().abs() < 1e-12);
        assert!(r.rate(7.0, 0.2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn smoothing_blends_previous_rate() {
        let mut r = RateEstimator::new(0.5).unwrap();
        r.rate(0.0, 0.0).unwrap();
        assert_eq!(r.rate(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(r.rate(2.0, 2.0).unwrap(), 0.75);
    }

    #[test]
    fn rejects_non_monotone_time() {
        let mut r = RateEstimator::default();
        r.rate(0.0, 1.0).unwrap();
        assert!(matches!(r.rate(1.0, 1.0), Err(FieldMapError::NonMonotoneTime { .. })));
    }

    #[test]
    fn rebase_changes_reference_sample() {
        let mut r = RateEstimator::new(1.0).unwrap();
        r.rate(10.0, 0.0).unwrap();
        r.rebase(4.0);
        assert_eq!(r.rate(5.0, 1.0).unwrap(), 1.0);
    }
}
