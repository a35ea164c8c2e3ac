use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{LengthUnit, SimError, DT};
use crate::geom::Vec3;

/// Timestamp tolerance when checking the 30 Hz grid, s.
pub const RATE_TOLERANCE: f64 = 1e-6;

pub const CSV_HEADER: &str = "t,vx,vy,vz,wx,wy,wz,grip,clutch";

/// One sample of the operator's commanded motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputFrame {
    /// s
    pub time: f64,
    /// mm/s (or m/s for streams declared in metres)
    pub target_velocity: Vec3,
    /// rad/s, world frame
    pub target_angular_velocity: Vec3,
    pub grip_closed: bool,
    pub clutch_engaged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputStream {
    pub units: LengthUnit,
    pub frames: Vec<InputFrame>,
}

impl InputStream {
    pub fn new(frames: Vec<InputFrame>) -> Self {
        Self { units: LengthUnit::Millimetre, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Checks the stream is non-empty, finite and sampled on the 30 Hz grid.
    pub fn validate(&self) -> Result<(), SimError> {
        let Some(first) = self.frames.first() else {
            return Err(SimError::EmptyStream);
        };
        for (i, f) in self.frames.iter().enumerate() {
            if !(f.time.is_finite() && f.target_velocity.is_finite() && f.target_angular_velocity.is_finite()) {
                return Err(SimError::Stream { row: i, message: "non-finite value".into() });
            }
            let expected = first.time + i as f64 * DT;
            if (f.time - expected).abs() > RATE_TOLERANCE {
                return Err(SimError::RateMismatch { row: i, expected, found: f.time });
            }
        }
        Ok(())
    }

    /// Same stream with velocities expressed in millimetres.
    pub fn to_millimetres(&self) -> InputStream {
        let s = self.units.to_mm();
        InputStream {
            units: LengthUnit::Millimetre,
            frames: self
                .frames
                .iter()
                .map(|f| InputFrame { target_velocity: f.target_velocity * s, ..*f })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# units={}", self.units.symbol());
        out.push_str(CSV_HEADER);
        out.push('\n');
        for f in &self.frames {
            let v = f.target_velocity;
            let w = f.target_angular_velocity;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                f.time, v.x, v.y, v.z, w.x, w.y, w.z, u8::from(f.grip_closed), u8::from(f.clutch_engaged)
            );
        }
        out
    }

    /// Parses the `t, vx, vy, vz, wx, wy, wz, grip, clutch` CSV format. An
    /// optional leading `# units=mm|m` line declares the length unit
    /// (millimetres when absent).
    pub fn from_csv(text: &str) -> Result<InputStream, SimError> {
        let mut units = LengthUnit::Millimetre;
        let mut body = text;
        if let Some(first) = text.lines().next() {
            if let Some(comment) = first.trim().strip_prefix('#') {
                if let Some(u) = comment.trim().strip_prefix("units=") {
                    units = u.trim().parse()?;
                }
                body = text[first.len()..].trim_start_matches(['\r', '\n']);
            }
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(body.as_bytes());
        let headers = reader.headers().map_err(|e| SimError::Stream { row: 0, message: e.to_string() })?;
        let names: Vec<&str> = headers.iter().collect();
        let expected: Vec<&str> = CSV_HEADER.split(',').collect();
        if names != expected {
            return Err(SimError::Stream { row: 0, message: format!("expected header {CSV_HEADER:?}, found {:?}", names.join(",")) });
        }
        let mut frames = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| SimError::Stream { row: row + 1, message: e.to_string() })?;
            let num = |i: usize| -> Result<f64, SimError> {
                rec[i].parse::<f64>().map_err(|e| SimError::Stream {
                    row: row + 1,
                    message: format!("column {}: {e}", expected[i]),
                })
            };
            let flag = |i: usize| -> Result<bool, SimError> {
                match &rec[i] {
                    "0" | "false" => Ok(false),
                    "1" | "true" => Ok(true),
                    other => Err(SimError::Stream { row: row + 1, message: format!("column {}: bad flag {other:?}", expected[i]) }),
                }
            };
            frames.push(InputFrame {
                time: num(0)?,
                target_velocity: Vec3::new(num(1)?, num(2)?, num(3)?),
                target_angular_velocity: Vec3::new(num(4)?, num(5)?, num(6)?),
                grip_closed: flag(7)?,
                clutch_engaged: flag(8)?,
            });
        }
        Ok(InputStream { units, frames })
    }
}
