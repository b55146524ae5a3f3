//! Core library for a desk-scale bimanual teleoperation and demonstration stack.
//!
//! The crate is organised by subsystem:
//!
//! - [`kinematics`]: forward kinematics, Jacobians, damped least-squares IK and
//!   hand-controller retargeting for two 7-joint arms.
//! - [`simulator`]: fixed-timestep kinematic robot with synthetic JPEG cameras.
//! - [`protocol`]: the `WBTP` wire format and topic-addressed sessions.
//! - [`pipeline`]: episode archives, static-prefix trimming, normalisation
//!   statistics, action chunking and dataset manifests.
//! - [`scoring`]: competition clock, subtask/round/total scores and scorecards.
//! - [`teleop`]: the robot-side server and a scripted operator client.

pub mod clock;
pub mod config;
pub mod kinematics;
pub mod pipeline;
pub mod protocol;
pub mod replay;
pub mod scoring;
pub mod simulator;
pub mod teleop;

pub use config::{CameraId, RobotConfig};
pub use kinematics::{ArmConfig, JointState, Pose, RetargetParams};
pub use pipeline::{Episode, TrimConfig};
pub use protocol::{Message, Session};
pub use scoring::{Alpha, SubtaskResult};
pub use simulator::{ObservationBundle, SimState, Simulator};
