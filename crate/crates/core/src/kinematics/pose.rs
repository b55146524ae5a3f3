use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Position in meters plus unit-quaternion orientation stored as `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub const fn new(position: [f64; 3], orientation: [f64; 4]) -> Pose {
        Pose {
            position,
            orientation,
        }
    }

    pub const fn identity() -> Pose {
        Pose {
            position: [0.0; 3],
            orientation: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn from_position(position: [f64; 3]) -> Pose {
        Pose {
            position,
            ..Pose::identity()
        }
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Pose {
        let q = iso.rotation.quaternion();
        Pose {
            position: iso.translation.vector.into(),
            orientation: [q.w, q.i, q.j, q.k],
        }
    }

    /// Orientation as a `UnitQuaternion`, renormalised.
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.orientation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.translation()), self.rotation())
    }

    pub fn quaternion_norm(&self) -> f64 {
        self.orientation.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.quaternion_norm() - 1.0).abs() < 1e-9
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.translation() - other.translation()).norm()
    }

    /// Angle in radians of the rotation taking `other` onto `self`.
    pub fn angle_to(&self, other: &Pose) -> f64 {
        self.rotation().angle_to(&other.rotation())
    }
}
