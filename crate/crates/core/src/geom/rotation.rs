use serde::{Deserialize, Serialize};

use super::{Vec3, DEGENERATE_EPS};

/// Output of [`rotate_vector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotated {
    pub vector: Vec3,
    /// The axis was (near) zero; `vector` is the input unchanged.
    pub degenerate_axis: bool,
}

/// Rodrigues rotation of `v` by `theta` radians about `axis` (normalized
/// internally). A near-zero axis leaves `v` unchanged and sets the flag.
pub fn rotate_vector(v: Vec3, theta: f64, axis: Vec3) -> Rotated {
    let Some(k) = axis.try_normalize(DEGENERATE_EPS) else {
        return Rotated { vector: v, degenerate_axis: true };
    };
    let (s, c) = theta.sin_cos();
    let vector = v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
    Rotated { vector, degenerate_axis: false }
}

/// Unit quaternion `w + xi + yj + zk` for end-effector orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quat {
    fn default() -> Self {
        Quat::IDENTITY
    }
}

impl From<[f64; 4]> for Quat {
    fn from(a: [f64; 4]) -> Self {
        Quat { w: a[0], x: a[1], y: a[2], z: a[3] }
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Quat {
        let n = self.norm();
        Quat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    /// Exponential map of a rotation vector (axis times angle).
    pub fn from_rotation_vector(rv: Vec3) -> Quat {
        let angle = rv.norm();
        if angle < 1e-12 {
            // Second-order expansion keeps tiny steps well conditioned.
            let h = rv * 0.5;
            return Quat { w: 1.0 - angle * angle / 8.0, x: h.x, y: h.y, z: h.z }.normalized();
        }
        let (s, c) = (angle * 0.5).sin_cos();
        let k = rv / angle;
        Quat { w: c, x: k.x * s, y: k.y * s, z: k.z * s }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Quat {
        match axis.try_normalize(DEGENERATE_EPS) {
            Some(k) => Quat::from_rotation_vector(k * angle),
            None => Quat::IDENTITY,
        }
    }

    /// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
    pub fn from_to(from: Vec3, to: Vec3) -> Quat {
        let c = from.dot(to).clamp(-1.0, 1.0);
        let axis = from.cross(to);
        if axis.norm() < 1e-12 {
            if c > 0.0 {
                return Quat::IDENTITY;
            }
            return Quat::from_axis_angle(from.any_orthogonal(), std::f64::consts::PI);
        }
        Quat::from_axis_angle(axis, c.acos())
    }

    pub fn mul(self, o: Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Image of the local z-axis.
    pub fn z_axis(&self) -> Vec3 {
        self.rotate(Vec3::Z)
    }

    /// Advance by a world-frame angular velocity over `dt`, then renormalize.
    pub fn integrate(self, omega: Vec3, dt: f64) -> Quat {
        Quat::from_rotation_vector(omega * dt).mul(self).normalized()
    }
}
