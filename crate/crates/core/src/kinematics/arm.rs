use nalgebra::{Isometry3, Vector3};

use super::KinematicsError;

pub const ARM_DOF: usize = 7;

/// Joint angles of one arm, radians.
pub type ArmJoints = [f64; ARM_DOF];

/// Serial chain description of one 7-joint arm.
///
/// `joint_origins[i]` places joint `i` in the frame of link `i - 1` (the
/// first entry is the mount in the robot base frame); the joint then
/// rotates about `joint_axes[i]` expressed in its own frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmConfig {
    pub joint_axes: [Vector3<f64>; ARM_DOF],
    pub joint_origins: [Isometry3<f64>; ARM_DOF],
    pub ee_offset: Isometry3<f64>,
    pub joint_limits: [(f64, f64); ARM_DOF],
    pub max_joint_speed: [f64; ARM_DOF],
    /// Posture the simulator starts in.
    pub ready: ArmJoints,
}

impl ArmConfig {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (i, axis) in self.joint_axes.iter().enumerate() {
            if (axis.norm() - 1.0).abs() >= 1e-9 {
                return Err(KinematicsError::InvalidConfig(format!(
                    "joint {i} axis is not unit length (norm {})",
                    axis.norm()
                )));
            }
        }
        for (i, &(lo, hi)) in self.joint_limits.iter().enumerate() {
            if !(lo < hi) {
                return Err(KinematicsError::InvalidConfig(format!(
                    "joint {i} limits [{lo}, {hi}] are not increasing"
                )));
            }
        }
        for (i, &v) in self.max_joint_speed.iter().enumerate() {
            if !(v > 0.0) {
                return Err(KinematicsError::InvalidConfig(format!(
                    "joint {i} max speed {v} must be > 0"
                )));
            }
        }
        self.check_limits(&self.ready)
            .map_err(|e| KinematicsError::InvalidConfig(format!("ready posture: {e}")))
    }

    pub fn check_limits(&self, joints: &ArmJoints) -> Result<(), KinematicsError> {
        for (i, (&q, &(lo, hi))) in joints.iter().zip(&self.joint_limits).enumerate() {
            // NaN fails both comparisons and is rejected too.
            if !(q >= lo && q <= hi) {
                return Err(KinematicsError::JointLimitViolation {
                    joint: i,
                    value: q,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, joints: &ArmJoints) -> ArmJoints {
        std::array::from_fn(|i| {
            let (lo, hi) = self.joint_limits[i];
            joints[i].clamp(lo, hi)
        })
    }
}
