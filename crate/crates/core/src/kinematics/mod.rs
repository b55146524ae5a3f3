//! Pure numerical layer for the two 7-joint arms.
//!
//! Nothing in here holds mutable shared state; every function is a pure
//! function of its arguments, apart from [`Retargeter`], which owns the
//! clutch anchors of one operator.

mod arm;
mod chain;
mod ik;
mod joint_state;
mod pose;
mod retarget;

pub use arm::{ArmConfig, ArmJoints, ARM_DOF};
pub use chain::{forward_kinematics, jacobian, Jacobian};
pub use ik::{ik_step, pose_error};
pub use joint_state::{JointState, Side, ACTION_DIM};
pub use pose::Pose;
pub use retarget::{
    retarget, ClutchAnchor, HandInput, RetargetOutput, RetargetParams, Retargeter, WorkspaceBox,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("joint {joint} = {value} rad is outside [{lo}, {hi}]")]
    JointLimitViolation {
        joint: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid arm configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid retarget parameters: {0}")]
    InvalidParams(String),
}
