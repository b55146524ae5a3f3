use serde::{Deserialize, Serialize};

use crate::config::RobotConfig;
use crate::kinematics::{JointState, ARM_DOF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub joints: JointState,
    pub targets: JointState,
    pub tick_index: u64,
    /// Always `tick_index * dt_ns`.
    pub sim_time_ns: u64,
    pub rng_seed: u64,
}

impl SimState {
    /// Ready posture, grippers open, time zero.
    pub fn initial(robot: &RobotConfig, seed: u64) -> SimState {
        let joints = JointState {
            left: robot.left_arm.ready,
            right: robot.right_arm.ready,
            grippers: [1.0, 1.0],
            head: robot.head.ready,
        };
        SimState {
            joints,
            targets: joints,
            tick_index: 0,
            sim_time_ns: 0,
            rng_seed: seed,
        }
    }
}

/// Move `current` toward `target` by at most `max_delta`.
fn approach(current: f64, target: f64, max_delta: f64) -> f64 {
    let gap = target - current;
    if gap.abs() <= max_delta {
        target
    } else {
        current + max_delta.copysign(gap)
    }
}

fn clamp_or_hold(value: f64, hold: f64, lo: f64, hi: f64) -> f64 {
    if value.is_finite() {
        value.clamp(lo, hi)
    } else {
        hold
    }
}

/// Targets pulled into joint limits; non-finite entries keep the previous value.
pub(crate) fn clamp_targets(robot: &RobotConfig, targets: &JointState) -> JointState {
    clamp_targets_from(robot, targets, targets)
}

fn clamp_targets_from(robot: &RobotConfig, targets: &JointState, hold: &JointState) -> JointState {
    let mut out = *targets;
    for i in 0..ARM_DOF {
        let (lo, hi) = robot.left_arm.joint_limits[i];
        out.left[i] = clamp_or_hold(targets.left[i], hold.left[i], lo, hi);
        let (lo, hi) = robot.right_arm.joint_limits[i];
        out.right[i] = clamp_or_hold(targets.right[i], hold.right[i], lo, hi);
    }
    for i in 0..2 {
        out.grippers[i] = clamp_or_hold(targets.grippers[i], hold.grippers[i], 0.0, 1.0);
        let (lo, hi) = robot.head.joint_limits[i];
        out.head[i] = clamp_or_hold(targets.head[i], hold.head[i], lo, hi);
    }
    out
}

/// Advance one fixed step of `dt_ns` nanoseconds.
///
/// Each joint moves toward its (clamped) target by at most
/// `max_joint_speed * dt`; grippers slew at `gripper_slew_per_s`.
pub fn tick(robot: &RobotConfig, state: &SimState, targets: &JointState, dt_ns: u64) -> SimState {
    debug_assert!(dt_ns > 0);
    let dt = dt_ns as f64 / 1e9;
    let targets = clamp_targets_from(robot, targets, &state.targets);
    let mut joints = state.joints;
    for i in 0..ARM_DOF {
        joints.left[i] = approach(
            joints.left[i],
            targets.left[i],
            robot.left_arm.max_joint_speed[i] * dt,
        );
        joints.right[i] = approach(
            joints.right[i],
            targets.right[i],
            robot.right_arm.max_joint_speed[i] * dt,
        );
    }
    let slew = robot.gripper_slew_per_s * dt;
    for i in 0..2 {
        joints.grippers[i] = approach(joints.grippers[i], targets.grippers[i], slew);
        joints.head[i] = approach(
            joints.head[i],
            targets.head[i],
            robot.head.max_joint_speed[i] * dt,
        );
    }
    let tick_index = state.tick_index + 1;
    SimState {
        joints,
        targets,
        tick_index,
        sim_time_ns: tick_index * dt_ns,
        rng_seed: state.rng_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: u64 = 20_000_000;

    fn setup() -> (RobotConfig, SimState) {
        let robot = RobotConfig::default_config();
        let state = SimState::initial(&robot, 0);
        (robot, state)
    }

    #[test]
    fn fixed_point_only_advances_clock() {
        let (robot, state) = setup();
        let next = tick(&robot, &state, &state.joints, DT);
        assert_eq!(next.joints, state.joints);
        assert_eq!(next.tick_index, 1);
        assert_eq!(next.sim_time_ns, DT);
    }

    #[test]
    fn rate_limit_arithmetic() {
        let (mut robot, mut state) = setup();
        robot.left_arm.max_joint_speed[0] = 1.0;
        state.joints.left[0] = 0.0;
        let mut targets = state.joints;
        targets.left[0] = 0.5;
        let next = tick(&robot, &state, &targets, DT);
        assert_eq!(next.joints.left[0], 0.02);
    }

    #[test]
    fn gripper_opens_in_thirteen_ticks() {
        let (robot, mut state) = setup();
        state.joints.grippers = [0.0, 0.0];
        let mut targets = state.joints;
        targets.grippers = [1.0, 1.0];
        for n in 1..=13 {
            state = tick(&robot, &state, &targets, DT);
            if n < 13 {
                assert!(
                    state.joints.grippers[0] < 1.0,
                    "tick {n}: {}",
                    state.joints.grippers[0]
                );
            }
        }
        assert_eq!(state.joints.grippers, [1.0, 1.0]);
    }

    #[test]
    fn targets_are_clamped_on_ingestion() {
        let (robot, state) = setup();
        let mut targets = state.joints;
        targets.left[1] = 100.0;
        targets.grippers[0] = -3.0;
        targets.head[0] = f64::NAN;
        let next = tick(&robot, &state, &targets, DT);
        assert_eq!(next.targets.left[1], robot.left_arm.joint_limits[1].1);
        assert_eq!(next.targets.grippers[0], 0.0);
        assert_eq!(next.targets.head[0], state.targets.head[0]);
        assert!(next.joints.is_finite());
    }
}
