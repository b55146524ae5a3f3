use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::chain::fk_unchecked;
use super::ik::ik_step;
use super::joint_state::{JointState, Side};
use super::{KinematicsError, Pose};
use crate::config::RobotConfig;

/// Axis-aligned bounds (meters, robot base frame) for end-effector targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorkspaceBox {
    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| p[i].clamp(self.min[i], self.max[i]))
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

impl Default for WorkspaceBox {
    fn default() -> Self {
        WorkspaceBox {
            min: [0.05, -0.65, -0.05],
            max: [0.90, 0.65, 0.85],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetargetParams {
    /// Controller displacement multiplier, in `(0, 10]`.
    pub translation_scale: f64,
    pub clutch_engaged: bool,
    /// DLS damping λ, in `(0, 1]`.
    pub damping: f64,
    /// Translational error clamp per IK step, meters.
    pub max_step: f64,
    /// Rotational error clamp per IK step, radians.
    pub max_rot_step: f64,
    pub workspace_box: WorkspaceBox,
    /// Track the full 6-D pose; when false only position is retargeted.
    pub track_orientation: bool,
    /// IK steps taken per retarget call.
    pub ik_iterations: usize,
}

impl Default for RetargetParams {
    fn default() -> Self {
        RetargetParams {
            translation_scale: 1.0,
            clutch_engaged: false,
            damping: 0.02,
            max_step: 0.05,
            max_rot_step: 0.25,
            workspace_box: WorkspaceBox::default(),
            track_orientation: true,
            ik_iterations: 1,
        }
    }
}

impl RetargetParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |m: &str| Err(KinematicsError::InvalidParams(m.to_string()));
        if !(self.translation_scale > 0.0 && self.translation_scale <= 10.0) {
            return bad("translation_scale must be in (0, 10]");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must be in (0, 1]");
        }
        if !(self.max_step > 0.0) || !(self.max_rot_step > 0.0) {
            return bad("max_step and max_rot_step must be > 0");
        }
        if (0..3).any(|i| !(self.workspace_box.min[i] <= self.workspace_box.max[i])) {
            return bad("workspace_box min must not exceed max");
        }
        Ok(())
    }
}

/// Operator input for one control tick.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandInput {
    pub left: Pose,
    pub right: Pose,
    /// `true` while the gripper button is held (closes the gripper).
    pub gripper_pressed: [bool; 2],
}

impl HandInput {
    pub fn hand(&self, side: Side) -> &Pose {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Where each end-effector and each controller were when the clutch engaged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClutchAnchor {
    pub ee: [Pose; 2],
    pub controller: [Pose; 2],
}

impl ClutchAnchor {
    pub fn capture(robot: &RobotConfig, current: &JointState, input: &HandInput) -> ClutchAnchor {
        ClutchAnchor {
            ee: Side::BOTH
                .map(|s| Pose::from_isometry(&fk_unchecked(robot.arm(s), current.arm(s)))),
            controller: [input.left, input.right],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetargetOutput {
    pub target: JointState,
    /// End-effector targets after workspace clamping; `None` while unclutched.
    pub ee_targets: Option<[Pose; 2]>,
}

fn ee_target(anchor: &ClutchAnchor, side: Side, hand: &Pose, params: &RetargetParams) -> Pose {
    let i = side.index();
    let displacement = hand.translation() - anchor.controller[i].translation();
    let raw: Vector3<f64> = anchor.ee[i].translation() + displacement * params.translation_scale;
    let position = params.workspace_box.clamp(raw.into());
    let rotation = if params.track_orientation {
        hand.rotation() * anchor.controller[i].rotation().inverse() * anchor.ee[i].rotation()
    } else {
        anchor.ee[i].rotation()
    };
    let q = rotation.quaternion();
    Pose::new(position, [q.w, q.i, q.j, q.k])
}

/// Maps controller poses and buttons to a target joint state.
///
/// With the clutch released the target is `current`, bit for bit. Engaged,
/// each arm's end-effector target is the anchor pose displaced by the scaled
/// controller motion since the anchor was taken, clamped to the workspace
/// box, then converted to joint targets with [`ik_step`]. Grippers target
/// 0 (closed) while their button is held and 1 (open) otherwise.
pub fn retarget(
    robot: &RobotConfig,
    current: &JointState,
    input: &HandInput,
    params: &RetargetParams,
    anchor: &ClutchAnchor,
) -> Result<RetargetOutput, KinematicsError> {
    if !params.clutch_engaged {
        return Ok(RetargetOutput {
            target: *current,
            ee_targets: None,
        });
    }
    params.validate()?;

    let mut target = *current;
    let mut ee_targets = [Pose::identity(); 2];
    for side in Side::BOTH {
        let arm = robot.arm(side);
        let goal = ee_target(anchor, side, input.hand(side), params);
        ee_targets[side.index()] = goal;
        // Out-of-limit measurements are pulled back in before stepping.
        let mut q = arm.clamp(current.arm(side));
        for _ in 0..params.ik_iterations {
            let dq = ik_step(arm, &q, &goal, params)?;
            for (qi, d) in q.iter_mut().zip(dq) {
                *qi += d;
            }
            q = arm.clamp(&q);
        }
        *target.arm_mut(side) = q;
    }
    target.grippers = input
        .gripper_pressed
        .map(|pressed| if pressed { 0.0 } else { 1.0 });
    Ok(RetargetOutput {
        target,
        ee_targets: Some(ee_targets),
    })
}

/// Stateful wrapper that captures a fresh [`ClutchAnchor`] every time the
/// clutch goes from released to engaged.
#[derive(Clone, Debug, Default)]
pub struct Retargeter {
    anchor: Option<ClutchAnchor>,
}

impl Retargeter {
    pub fn new() -> Retargeter {
        Retargeter::default()
    }

    pub fn anchor(&self) -> Option<&ClutchAnchor> {
        self.anchor.as_ref()
    }

    pub fn update(
        &mut self,
        robot: &RobotConfig,
        current: &JointState,
        input: &HandInput,
        params: &RetargetParams,
    ) -> Result<RetargetOutput, KinematicsError> {
        if !params.clutch_engaged {
            self.anchor = None;
            return Ok(RetargetOutput {
                target: *current,
                ee_targets: None,
            });
        }
        let anchor = *self
            .anchor
            .get_or_insert_with(|| ClutchAnchor::capture(robot, current, input));
        retarget(robot, current, input, params, &anchor)
    }
}
