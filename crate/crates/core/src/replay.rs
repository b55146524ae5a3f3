//! Open-loop replay of a recorded episode through the simulator.

use serde::Serialize;
use thiserror::Error;

use crate::config::RobotConfig;
use crate::kinematics::JointState;
use crate::pipeline::{Episode, EpisodeError};
use crate::simulator::{SimError, Simulator};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("robot config hash {loaded} does not match the archive's {archive}")]
    ConfigHashMismatch { archive: String, loaded: String },
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayReport {
    pub steps: usize,
    /// Simulator state after replaying every action but the last, aligned with the final recorded row.
    pub final_joints: JointState,
    pub recorded_final_joints: JointState,
    /// Largest per-joint deviation between the final states.
    pub final_max_abs_error: f64,
    /// Largest per-joint deviation over every replayed step.
    pub max_abs_error: f64,
    /// State after the last recorded action is also applied.
    pub after_last_action: JointState,
}

fn max_abs_diff(a: &JointState, b: &JointState) -> f64 {
    a.to_array()
        .iter()
        .zip(b.to_array())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Starts from the first recorded state and applies the recorded actions,
/// comparing every simulated state with the next recorded one.
pub fn replay_episode(robot: RobotConfig, ep: &Episode) -> Result<ReplayReport, ReplayError> {
    ep.validate()?;
    let loaded = robot.hash();
    if loaded != ep.meta.robot_config_hash {
        return Err(ReplayError::ConfigHashMismatch {
            archive: ep.meta.robot_config_hash.clone(),
            loaded,
        });
    }
    let mut sim = Simulator::with_dt(robot, ep.meta.seed, ep.meta.dt_ns)?;
    sim.reset_joints(ep.joints[0]);
    let target = |t: usize| JointState::from_action(&ep.actions[t], ep.joints[t].head);
    let mut max_abs_error: f64 = 0.0;
    for t in 0..ep.len() - 1 {
        let st = sim.step(&target(t));
        max_abs_error = max_abs_error.max(max_abs_diff(&st.joints, &ep.joints[t + 1]));
    }
    let final_joints = sim.state().joints;
    let recorded_final_joints = ep.joints[ep.len() - 1];
    let after_last_action = sim.step(&target(ep.len() - 1)).joints;
    Ok(ReplayReport {
        steps: ep.len(),
        final_joints,
        recorded_final_joints,
        final_max_abs_error: max_abs_diff(&final_joints, &recorded_final_joints),
        max_abs_error,
        after_last_action,
    })
}
