use serde::{Deserialize, Serialize};

use super::arm::{ArmJoints, ARM_DOF};

/// Length of the commanded action vector: 7 + 7 arm joints and 2 grippers.
pub const ACTION_DIM: usize = 2 * ARM_DOF + 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// Full robot configuration.
///
/// Arm joints are radians, grippers are openings in `[0, 1]` (0 closed,
/// 1 open), head is `[yaw, pitch]` in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub left: ArmJoints,
    pub right: ArmJoints,
    pub grippers: [f64; 2],
    pub head: [f64; 2],
}

impl JointState {
    /// Number of scalar fields: 16 commanded DoF plus 2 head joints.
    pub const LEN: usize = ACTION_DIM + 2;

    pub fn arm(&self, side: Side) -> &ArmJoints {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn arm_mut(&mut self, side: Side) -> &mut ArmJoints {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }

    /// Commanded action layout: `[left 0..7, right 0..7, gripper_left, gripper_right]`.
    pub fn to_action(&self) -> [f64; ACTION_DIM] {
        let mut a = [0.0; ACTION_DIM];
        a[..ARM_DOF].copy_from_slice(&self.left);
        a[ARM_DOF..2 * ARM_DOF].copy_from_slice(&self.right);
        a[2 * ARM_DOF..].copy_from_slice(&self.grippers);
        a
    }

    /// Rebuilds a state from an action vector, taking the head from `head`.
    pub fn from_action(action: &[f64; ACTION_DIM], head: [f64; 2]) -> JointState {
        let mut s = JointState {
            head,
            ..Default::default()
        };
        s.left.copy_from_slice(&action[..ARM_DOF]);
        s.right.copy_from_slice(&action[ARM_DOF..2 * ARM_DOF]);
        s.grippers.copy_from_slice(&action[2 * ARM_DOF..]);
        s
    }

    /// Flat layout `[left 7, right 7, grippers 2, head 2]`, used on the wire
    /// and in episode archives.
    pub fn to_array(&self) -> [f64; Self::LEN] {
        let mut v = [0.0; Self::LEN];
        v[..ACTION_DIM].copy_from_slice(&self.to_action());
        v[ACTION_DIM..].copy_from_slice(&self.head);
        v
    }

    pub fn from_array(v: &[f64; Self::LEN]) -> JointState {
        let action: [f64; ACTION_DIM] = v[..ACTION_DIM].try_into().unwrap();
        JointState::from_action(&action, [v[ACTION_DIM], v[ACTION_DIM + 1]])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}
