use nalgebra::{Isometry3, SMatrix, Unit, UnitQuaternion, Vector3};

use super::arm::{ArmConfig, ArmJoints, ARM_DOF};
use super::{KinematicsError, Pose};

/// Geometric Jacobian: rows 0..3 linear velocity (m/rad), rows 3..6 angular
/// velocity (rad/rad), both in the robot base frame.
pub type Jacobian = SMatrix<f64, 6, ARM_DOF>;

/// World-frame placement of every joint plus the end-effector.
struct ChainFrames {
    joint_positions: [Vector3<f64>; ARM_DOF],
    joint_axes: [Vector3<f64>; ARM_DOF],
    ee: Isometry3<f64>,
}

fn compose(config: &ArmConfig, joints: &ArmJoints) -> ChainFrames {
    let mut t = Isometry3::identity();
    let mut joint_positions = [Vector3::zeros(); ARM_DOF];
    let mut joint_axes = [Vector3::zeros(); ARM_DOF];
    for i in 0..ARM_DOF {
        t *= config.joint_origins[i];
        joint_positions[i] = t.translation.vector;
        joint_axes[i] = t.rotation * config.joint_axes[i];
        let axis = Unit::new_unchecked(config.joint_axes[i]);
        t *= UnitQuaternion::from_axis_angle(&axis, joints[i]);
    }
    ChainFrames {
        joint_positions,
        joint_axes,
        ee: t * config.ee_offset,
    }
}

/// End-effector pose in the robot base frame.
pub fn forward_kinematics(config: &ArmConfig, joints: &ArmJoints) -> Result<Pose, KinematicsError> {
    config.check_limits(joints)?;
    Ok(Pose::from_isometry(&compose(config, joints).ee))
}

/// Column `i` is the end-effector twist produced by unit velocity of joint `i`.
pub fn jacobian(config: &ArmConfig, joints: &ArmJoints) -> Result<Jacobian, KinematicsError> {
    config.check_limits(joints)?;
    Ok(jacobian_unchecked(config, joints))
}

pub(crate) fn jacobian_unchecked(config: &ArmConfig, joints: &ArmJoints) -> Jacobian {
    let frames = compose(config, joints);
    let p_ee = frames.ee.translation.vector;
    let mut jac = Jacobian::zeros();
    for i in 0..ARM_DOF {
        let z = frames.joint_axes[i];
        let linear = z.cross(&(p_ee - frames.joint_positions[i]));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&linear);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    jac
}

pub(crate) fn fk_unchecked(config: &ArmConfig, joints: &ArmJoints) -> Isometry3<f64> {
    compose(config, joints).ee
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RobotConfig;
    use std::f64::consts::PI;

    fn left() -> ArmConfig {
        RobotConfig::default_config().left_arm
    }

    #[test]
    fn home_pose_matches_reference() {
        let cfg = RobotConfig::default_config();
        let reference = cfg.reference.unwrap();
        for (arm, golden) in [
            (&cfg.left_arm, reference.home_left),
            (&cfg.right_arm, reference.home_right),
        ] {
            let pose = forward_kinematics(arm, &[0.0; ARM_DOF]).unwrap();
            for k in 0..3 {
                assert!(
                    (pose.position[k] - golden.position[k]).abs() < 1e-12,
                    "{pose:?}"
                );
            }
            assert!(pose.angle_to(&golden) < 1e-12);
            assert!(pose.is_normalized());
        }
    }

    #[test]
    fn base_yaw_by_pi_mirrors_through_the_base_axis() {
        let arm = left();
        let base = arm.joint_origins[0].translation.vector;
        let q = [0.0, 0.7, -0.4, 1.1, 0.3, -0.5, 0.2];
        let mut q_rot = q;
        q_rot[0] += PI;
        let a = forward_kinematics(&arm, &q).unwrap();
        let b = forward_kinematics(&arm, &q_rot).unwrap();
        assert!(((b.position[0] - base.x) + (a.position[0] - base.x)).abs() < 1e-9);
        assert!(((b.position[1] - base.y) + (a.position[1] - base.y)).abs() < 1e-9);
        assert!((b.position[2] - a.position[2]).abs() < 1e-9);
    }

    #[test]
    fn limit_violation_is_reported() {
        let arm = left();
        let mut q = [0.0; ARM_DOF];
        q[3] = arm.joint_limits[3].1 + 0.1;
        assert!(matches!(
            forward_kinematics(&arm, &q),
            Err(KinematicsError::JointLimitViolation { joint: 3, .. })
        ));
        assert!(jacobian(&arm, &q).is_err());
        q[3] = f64::NAN;
        assert!(forward_kinematics(&arm, &q).is_err());
    }

    #[test]
    fn fk_is_bit_deterministic() {
        let arm = left();
        let q = [0.3, -0.2, 0.9, 1.4, -0.7, 0.4, 2.0];
        let a = forward_kinematics(&arm, &q).unwrap();
        let b = forward_kinematics(&arm, &q).unwrap();
        assert_eq!(a.position.map(f64::to_bits), b.position.map(f64::to_bits));
        assert_eq!(
            a.orientation.map(f64::to_bits),
            b.orientation.map(f64::to_bits)
        );
    }

    #[test]
    fn zero_velocity_gives_zero_twist() {
        let arm = left();
        let j = jacobian(&arm, &arm.ready).unwrap();
        let twist = j * SMatrix::<f64, ARM_DOF, 1>::zeros();
        assert_eq!(twist.norm(), 0.0);
    }

    #[test]
    fn stretched_configuration_is_singular() {
        let arm = left();
        let j = jacobian(&arm, &[0.0; ARM_DOF]).unwrap();
        let sv = j.svd(false, false).singular_values;
        let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smallest < 1e-8, "singular values {sv}");
    }
}
