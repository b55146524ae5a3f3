//! Fixed-timestep kinematic robot.
//!
//! [`tick`] is a pure function of `(state, targets, dt)`; [`Simulator`] wraps
//! it for the single execution context that owns the running robot and adds
//! the synthetic three-camera observation model.

mod render;
mod state;

pub use render::{
    parse_camera, project_point, render_frame, render_rgb, FrameSpec, Prop, Scene, LEFT_EE_RGB,
    RIGHT_EE_RGB,
};
pub use state::{tick, SimState};

use thiserror::Error;

use crate::config::{CameraId, RobotConfig};
use crate::kinematics::{forward_kinematics, JointState, Pose};
use crate::protocol::FramePacket;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown camera {0:?}")]
    UnknownCamera(String),
    #[error("dt must be positive, got {0} ns")]
    BadTimestep(u64),
    #[error("jpeg encoding failed: {0}")]
    Encode(String),
}

/// Everything an observer receives for one tick.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationBundle {
    pub joints: JointState,
    pub ee_left: Pose,
    pub ee_right: Pose,
    /// Ordered head, wrist_left, wrist_right.
    pub frames: [FramePacket; 3],
    pub timestamp_ns: u64,
}

/// End-effector poses for a joint state, both arms.
pub fn ee_poses(robot: &RobotConfig, joints: &JointState) -> [Pose; 2] {
    [
        forward_kinematics(&robot.left_arm, &joints.left).expect("simulated joints stay in limits"),
        forward_kinematics(&robot.right_arm, &joints.right)
            .expect("simulated joints stay in limits"),
    ]
}

pub struct Simulator {
    robot: RobotConfig,
    scene: Scene,
    frame_spec: FrameSpec,
    dt_ns: u64,
    state: SimState,
}

impl Simulator {
    pub fn new(robot: RobotConfig, seed: u64) -> Simulator {
        let dt_ns = (robot.dt_s * 1e9).round() as u64;
        Simulator::with_dt(robot, seed, dt_ns).expect("config dt_s is validated positive")
    }

    pub fn with_dt(robot: RobotConfig, seed: u64, dt_ns: u64) -> Result<Simulator, SimError> {
        if dt_ns == 0 {
            return Err(SimError::BadTimestep(dt_ns));
        }
        let scene = Scene::generate(&robot, seed);
        let frame_spec = FrameSpec::from_config(&robot);
        let state = SimState::initial(&robot, seed);
        Ok(Simulator {
            robot,
            scene,
            frame_spec,
            dt_ns,
            state,
        })
    }

    pub fn robot(&self) -> &RobotConfig {
        &self.robot
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn dt_ns(&self) -> u64 {
        self.dt_ns
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn frame_spec(&self) -> FrameSpec {
        self.frame_spec
    }

    pub fn set_frame_spec(&mut self, spec: FrameSpec) {
        self.frame_spec = spec;
    }

    /// Replaces the current joints (and targets) without advancing time.
    pub fn reset_joints(&mut self, joints: JointState) {
        let clamped = state::clamp_targets(&self.robot, &joints);
        self.state.joints = clamped;
        self.state.targets = clamped;
    }

    pub fn step(&mut self, targets: &JointState) -> &SimState {
        self.state = tick(&self.robot, &self.state, targets, self.dt_ns);
        &self.state
    }

    pub fn render(&self, camera: CameraId) -> Result<FramePacket, SimError> {
        render_frame(
            &self.robot,
            &self.scene,
            &self.state,
            camera,
            &self.frame_spec,
        )
    }

    /// Observation bundle for `state`, with freshly rendered frames.
    pub fn snapshot_of(&self, state: &SimState) -> Result<ObservationBundle, SimError> {
        let [ee_left, ee_right] = ee_poses(&self.robot, &state.joints);
        let render = |cam| render_frame(&self.robot, &self.scene, state, cam, &self.frame_spec);
        Ok(ObservationBundle {
            joints: state.joints,
            ee_left,
            ee_right,
            frames: [
                render(CameraId::Head)?,
                render(CameraId::WristLeft)?,
                render(CameraId::WristRight)?,
            ],
            timestamp_ns: state.sim_time_ns,
        })
    }

    pub fn snapshot(&self) -> Result<ObservationBundle, SimError> {
        self.snapshot_of(&self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_contract() {
        let sim = Simulator::new(RobotConfig::default_config(), 0);
        let obs = sim.snapshot().unwrap();
        assert_eq!(obs.timestamp_ns, sim.state().sim_time_ns);
        let cams: Vec<_> = obs.frames.iter().map(|f| f.camera).collect();
        assert_eq!(cams, CameraId::ALL.to_vec());
        let [l, r] = ee_poses(sim.robot(), &obs.joints);
        assert_eq!(obs.ee_left, l);
        assert_eq!(obs.ee_right, r);
    }

    #[test]
    fn home_snapshot_matches_reference_poses() {
        let robot = RobotConfig::default_config();
        let reference = robot.reference.unwrap();
        let mut sim = Simulator::new(robot, 0);
        sim.reset_joints(JointState {
            grippers: [1.0; 2],
            ..Default::default()
        });
        let obs = sim.snapshot().unwrap();
        assert!(obs.ee_left.distance(&reference.home_left) < 1e-12);
        assert!(obs.ee_right.distance(&reference.home_right) < 1e-12);
        assert!(obs.ee_left.angle_to(&reference.home_left) < 1e-12);
    }

    #[test]
    fn zero_dt_rejected() {
        assert!(matches!(
            Simulator::with_dt(RobotConfig::default_config(), 0, 0),
            Err(SimError::BadTimestep(0))
        ));
    }
}
