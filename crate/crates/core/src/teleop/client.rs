use std::time::{Duration, Instant};

use serde::Serialize;

use super::TeleopError;
use crate::config::CameraId;
use crate::kinematics::{JointState, Pose};
use crate::protocol::{
    CommandRetarget, EventKind, EventStatus, LatencyStats, Message, Session, SessionEvent, Topic,
    TopicCounters,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveConfig {
    pub steps: usize,
    /// Edge length of the square traced by each hand, meters.
    pub side_m: f64,
    pub cameras: bool,
    pub reply_timeout: Duration,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            steps: 200,
            side_m: 0.08,
            cameras: true,
            reply_timeout: Duration::from_secs(5),
        }
    }
}

/// Offset along a closed square in the horizontal plane: +x, +y, −x, −y.
pub fn square_offset(step: usize, steps: usize, side: f64) -> [f64; 3] {
    let u = 4.0 * step as f64 / steps.max(1) as f64;
    let edge = (u.floor() as usize).min(3);
    let f = (u - edge as f64).clamp(0.0, 1.0) * side;
    match edge {
        0 => [f, 0.0, 0.0],
        1 => [side, f, 0.0],
        2 => [side - f, side, 0.0],
        _ => [0.0, side - f, 0.0],
    }
}

/// The scripted command stream: both hands trace mirrored squares with the
/// clutch held; grippers close during the middle half.
pub fn scripted_commands(cfg: &DriveConfig) -> Vec<CommandRetarget> {
    (0..cfg.steps)
        .map(|i| {
            let [x, y, z] = square_offset(i, cfg.steps, cfg.side_m);
            let grip = i >= cfg.steps / 4 && i < 3 * cfg.steps / 4;
            CommandRetarget {
                left: Pose::from_position([x, y, z]),
                right: Pose::from_position([x, -y, z]),
                gripper_pressed: [grip, grip],
                clutch: true,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriveReport {
    pub commands: usize,
    pub replies: usize,
    pub final_joints: Option<JointState>,
    pub final_tick: Option<u64>,
    pub frames_received: [u64; 3],
    pub latency: Option<LatencyStats>,
    pub command_counters: TopicCounters,
    pub joint_state_counters: TopicCounters,
}

/// Sends each scripted command and waits for its joint-state reply.
pub fn drive(session: &Session, cfg: &DriveConfig) -> Result<DriveReport, TeleopError> {
    session.subscribe(Topic::JointState)?;
    if cfg.cameras {
        for cam in CameraId::ALL {
            session.subscribe(Topic::Camera(cam))?;
        }
    }
    let commands = scripted_commands(cfg);
    let mut report = DriveReport {
        commands: 0,
        replies: 0,
        final_joints: None,
        final_tick: None,
        frames_received: [0; 3],
        latency: None,
        command_counters: TopicCounters::default(),
        joint_state_counters: TopicCounters::default(),
    };
    let count_frames = |report: &mut DriveReport| -> Result<(), TeleopError> {
        if cfg.cameras {
            for cam in CameraId::ALL {
                report.frames_received[cam.index()] +=
                    session.poll(Topic::Camera(cam))?.len() as u64;
            }
        }
        Ok(())
    };
    for cmd in commands {
        session.publish(Topic::Command, Message::Command(cmd))?;
        report.commands += 1;
        let deadline = Instant::now() + cfg.reply_timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(TeleopError::Timeout("joint-state reply"));
            }
            if let Some(env) = session.recv(Topic::JointState, left)? {
                if let Message::JointState(js) = env.message {
                    report.replies += 1;
                    report.final_joints = Some(js.joints);
                    report.final_tick = Some(js.tick);
                    break;
                }
            }
        }
        count_frames(&mut report)?;
    }
    count_frames(&mut report)?;
    report.latency = session.latency_stats(Topic::JointState).ok();
    report.command_counters = session.counters(Topic::Command);
    report.joint_state_counters = session.counters(Topic::JointState);
    Ok(report)
}

/// Sends a scoring request and waits for the server's verdict on it.
pub fn request_event(
    session: &Session,
    request: SessionEvent,
    timeout: Duration,
) -> Result<SessionEvent, TeleopError> {
    if !session.is_subscribed(Topic::Session) {
        session.subscribe(Topic::Session)?;
    }
    let kind = request.kind;
    session.publish(Topic::Session, Message::Event(request))?;
    let deadline = Instant::now() + timeout;
    loop {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            return Err(TeleopError::Timeout("session event reply"));
        }
        if let Some(env) = session.recv(Topic::Session, left)? {
            if let Message::Event(ev) = env.message {
                if ev.kind == kind && ev.status != EventStatus::Request {
                    return Ok(ev);
                }
            }
        }
    }
}

/// Convenience constructors for scoring requests.
pub fn event(kind: EventKind) -> SessionEvent {
    SessionEvent::request(kind)
}
