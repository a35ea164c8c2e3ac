use super::{GeomError, Vec3};

/// Relax distance as a fraction of the cone height.
pub const DEFAULT_RELAX_FRACTION: f64 = 0.2;

/// Insertion cone fixed in space: apex at `target`, axis towards `target`
/// from the initial end-effector position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeFrame {
    start: Vec3,
    target: Vec3,
    axis_unit: Vec3,
    alpha_deg: f64,
    aperture: f64,
    height: f64,
    relax_distance: f64,
}

/// Axial/radial split of the vector from a point to the cone target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCoords {
    /// Component of `target − p` along the axis.
    pub axial: Vec3,
    /// Remainder of `target − p`; points from `p` towards the axis.
    pub radial: Vec3,
    /// Cone radius `aperture · ‖axial‖` at this depth; zero on overshoot.
    pub radial_threshold: f64,
    /// `p` lies beyond the target along the axis.
    pub overshoot: bool,
}

impl ConeFrame {
    pub fn new(start: Vec3, target: Vec3, alpha_deg: f64) -> Result<Self, GeomError> {
        Self::with_relax_fraction(start, target, alpha_deg, DEFAULT_RELAX_FRACTION)
    }

    pub fn with_relax_fraction(
        start: Vec3,
        target: Vec3,
        alpha_deg: f64,
        relax_fraction: f64,
    ) -> Result<Self, GeomError> {
        if !start.is_finite() || !target.is_finite() {
            return Err(GeomError::NonFinite { what: "cone endpoint", index: 0 });
        }
        if !(alpha_deg > 0.0 && alpha_deg < 90.0) {
            return Err(GeomError::BadConeAngle(alpha_deg));
        }
        if !(0.0..=1.0).contains(&relax_fraction) {
            return Err(GeomError::BadRelaxFraction(relax_fraction));
        }
        let delta = target - start;
        let height = delta.norm();
        if height <= super::DEGENERATE_EPS {
            return Err(GeomError::ZeroHeightCone);
        }
        Ok(Self {
            start,
            target,
            axis_unit: delta / height,
            alpha_deg,
            aperture: (alpha_deg * std::f64::consts::PI / 180.0).tan(),
            height,
            relax_distance: relax_fraction * height,
        })
    }

    pub fn start(&self) -> Vec3 {
        self.start
    }

    pub fn target(&self) -> Vec3 {
        self.target
    }

    pub fn axis_unit(&self) -> Vec3 {
        self.axis_unit
    }

    pub fn alpha_deg(&self) -> f64 {
        self.alpha_deg
    }

    /// `tan(alpha)`.
    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn relax_distance(&self) -> f64 {
        self.relax_distance
    }

    pub fn decompose(&self, p: Vec3) -> ConeCoords {
        let d = self.target - p;
        let along = d.dot(self.axis_unit);
        let axial = self.axis_unit * along;
        let radial = d - axial;
        let overshoot = along < 0.0;
        ConeCoords {
            axial,
            radial,
            radial_threshold: if overshoot { 0.0 } else { self.aperture * axial.norm() },
            overshoot,
        }
    }
}
