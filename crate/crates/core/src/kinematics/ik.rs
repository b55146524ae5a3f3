use nalgebra::{Matrix3, Matrix6, SVector, Vector3, Vector6};

use super::arm::{ArmConfig, ArmJoints, ARM_DOF};
use super::chain::{fk_unchecked, jacobian_unchecked};
use super::{KinematicsError, Pose, RetargetParams};

/// 6-D pose error `[target.p - current.p, rotvec(q_target * q_current⁻¹)]`.
pub fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.translation() - current.translation();
    let dr = (target.rotation() * current.rotation().inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

fn clamp_norm(v: Vector3<f64>, max: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// One damped least-squares step `Δq = Jᵀ(JJᵀ + λ²I)⁻¹ e` toward `target`.
///
/// The translational error is clamped to `params.max_step` and the
/// rotational error to `params.max_rot_step` before solving. The returned
/// deltas keep `joints + Δq` inside the joint limits (clamped, never
/// reflected). With `track_orientation == false` only the three position
/// rows are used.
pub fn ik_step(
    config: &ArmConfig,
    joints: &ArmJoints,
    target: &Pose,
    params: &RetargetParams,
) -> Result<ArmJoints, KinematicsError> {
    config.check_limits(joints)?;
    params.validate()?;

    let current = Pose::from_isometry(&fk_unchecked(config, joints));
    let err = pose_error(&current, target);
    let e_pos = clamp_norm(err.fixed_rows::<3>(0).into_owned(), params.max_step);
    let e_rot = clamp_norm(err.fixed_rows::<3>(3).into_owned(), params.max_rot_step);

    let jac = jacobian_unchecked(config, joints);
    let lambda2 = params.damping * params.damping;

    let dq: SVector<f64, ARM_DOF> = if params.track_orientation {
        let e = Vector6::new(e_pos.x, e_pos.y, e_pos.z, e_rot.x, e_rot.y, e_rot.z);
        let a = jac * jac.transpose() + Matrix6::identity() * lambda2;
        let y = a
            .cholesky()
            .expect("JJᵀ + λ²I is positive definite for λ > 0")
            .solve(&e);
        jac.transpose() * y
    } else {
        let jp = jac.fixed_rows::<3>(0);
        let a = jp * jp.transpose() + Matrix3::identity() * lambda2;
        let y = a
            .cholesky()
            .expect("JJᵀ + λ²I is positive definite for λ > 0")
            .solve(&e_pos);
        jp.transpose() * y
    };

    Ok(std::array::from_fn(|i| {
        limited_delta(joints[i], dq[i], config.joint_limits[i])
    }))
}

/// `d` shrunk so that `q + d` lands inside `[lo, hi]` after rounding.
fn limited_delta(q: f64, d: f64, (lo, hi): (f64, f64)) -> f64 {
    let mut d = (q + d).clamp(lo, hi) - q;
    while q + d > hi {
        d = d.next_down();
    }
    while q + d < lo {
        d = d.next_up();
    }
    d
}
