use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::CameraId;
use crate::kinematics::{HandInput, JointState, Pose};

/// Wire `msg_type` values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    CommandRetarget = 1,
    JointState = 2,
    Frame = 3,
    SessionControl = 4,
    SessionEvent = 5,
}

impl MessageType {
    pub fn from_u8(v: u8) -> Option<MessageType> {
        Some(match v {
            1 => MessageType::CommandRetarget,
            2 => MessageType::JointState,
            3 => MessageType::Frame,
            4 => MessageType::SessionControl,
            5 => MessageType::SessionEvent,
            _ => return None,
        })
    }
}

/// Upstream teleoperation command: both hand poses, gripper buttons, clutch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommandRetarget {
    pub left: Pose,
    pub right: Pose,
    pub gripper_pressed: [bool; 2],
    pub clutch: bool,
}

impl CommandRetarget {
    pub fn hand_input(&self) -> HandInput {
        HandInput {
            left: self.left,
            right: self.right,
            gripper_pressed: self.gripper_pressed,
        }
    }
}

/// Downstream robot state. `echo_send_time_ns` repeats the `send_time_ns`
/// of the latest command the robot applied (0 when none), so the operator
/// can measure round-trip time against its own clock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointStateMsg {
    pub tick: u64,
    pub sim_time_ns: u64,
    pub echo_send_time_ns: u64,
    pub joints: JointState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Codec {
    Jfif = 0,
}

/// One compressed camera image.
#[derive(Clone, PartialEq, Eq)]
pub struct FramePacket {
    pub camera: CameraId,
    pub seq: u32,
    pub capture_time_ns: u64,
    pub codec: Codec,
    pub width: u16,
    pub height: u16,
    pub payload: Vec<u8>,
}

impl fmt::Debug for FramePacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FramePacket")
            .field("camera", &self.camera)
            .field("seq", &self.seq)
            .field("capture_time_ns", &self.capture_time_ns)
            .field("codec", &self.codec)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("payload_len", &self.payload.len())
            .finish()
    }
}

impl FramePacket {
    /// Codec framing check: JFIF payloads start `FF D8` and end `FF D9`.
    pub fn is_well_formed(&self) -> bool {
        let p = &self.payload;
        self.width > 0
            && self.height > 0
            && match self.codec {
                Codec::Jfif => {
                    p.len() >= 4 && p[..2] == [0xFF, 0xD8] && p[p.len() - 2..] == [0xFF, 0xD9]
                }
            }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SessionControl {
    Subscribe(Topic),
    Unsubscribe(Topic),
    Heartbeat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EventKind {
    RoundStart = 1,
    SubtaskStart = 2,
    ComponentAchieved = 3,
    SubtaskComplete = 4,
    SubtaskAbort = 5,
    RoundFinish = 6,
}

impl EventKind {
    pub fn from_u8(v: u8) -> Option<EventKind> {
        Some(match v {
            1 => EventKind::RoundStart,
            2 => EventKind::SubtaskStart,
            3 => EventKind::ComponentAchieved,
            4 => EventKind::SubtaskComplete,
            5 => EventKind::SubtaskAbort,
            6 => EventKind::RoundFinish,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EventStatus {
    /// Operator → robot: please apply.
    Request = 0,
    Accepted = 1,
    Rejected = 2,
}

impl EventStatus {
    pub fn from_u8(v: u8) -> Option<EventStatus> {
        Some(match v {
            0 => EventStatus::Request,
            1 => EventStatus::Accepted,
            2 => EventStatus::Rejected,
            _ => return None,
        })
    }
}

/// Scoring-session transition. Requests flow operator → robot; the robot
/// answers with the same kind marked accepted or rejected and the live
/// scoring figures.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionEvent {
    pub kind: EventKind,
    pub status: EventStatus,
    /// Active subtask id 1..=3, 0 when none.
    pub subtask: u8,
    /// Wire code: 0 none, 1 in-person (0.5), 2 remote (1), 3 autonomous (4).
    pub alpha_code: u8,
    /// Base points accumulated so far in the subtask.
    pub points: u8,
    pub time_ns: u64,
    /// Completion time, 0 when not (yet) timed.
    pub beta_ns: u64,
    /// Computed subtask score after completion, otherwise 0.
    pub score: f64,
    /// Component label for `ComponentAchieved`, reason text for rejections.
    pub label: String,
}

impl SessionEvent {
    pub fn request(kind: EventKind) -> SessionEvent {
        SessionEvent {
            kind,
            status: EventStatus::Request,
            subtask: 0,
            alpha_code: 0,
            points: 0,
            time_ns: 0,
            beta_ns: 0,
            score: 0.0,
            label: String::new(),
        }
    }
}

/// Topic names used for addressing. Each message kind belongs to exactly
/// one topic; frames are split per camera.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    Command,
    JointState,
    Camera(CameraId),
    Session,
    Control,
}

impl Topic {
    pub const ALL: [Topic; 7] = [
        Topic::Command,
        Topic::JointState,
        Topic::Camera(CameraId::Head),
        Topic::Camera(CameraId::WristLeft),
        Topic::Camera(CameraId::WristRight),
        Topic::Session,
        Topic::Control,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Topic::Command => "cmd",
            Topic::JointState => "joint_state",
            Topic::Camera(CameraId::Head) => "camera/head",
            Topic::Camera(CameraId::WristLeft) => "camera/wrist_left",
            Topic::Camera(CameraId::WristRight) => "camera/wrist_right",
            Topic::Session => "session",
            Topic::Control => "control",
        }
    }

    /// Only video may be dropped under backpressure.
    pub fn is_lossy(&self) -> bool {
        matches!(self, Topic::Camera(_))
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topic {
    type Err = String;

    fn from_str(s: &str) -> Result<Topic, String> {
        Topic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown topic {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Command(CommandRetarget),
    JointState(JointStateMsg),
    Frame(FramePacket),
    Control(SessionControl),
    Event(SessionEvent),
}

impl Message {
    pub fn msg_type(&self) -> MessageType {
        match self {
            Message::Command(_) => MessageType::CommandRetarget,
            Message::JointState(_) => MessageType::JointState,
            Message::Frame(_) => MessageType::Frame,
            Message::Control(_) => MessageType::SessionControl,
            Message::Event(_) => MessageType::SessionEvent,
        }
    }

    pub fn topic(&self) -> Topic {
        match self {
            Message::Command(_) => Topic::Command,
            Message::JointState(_) => Topic::JointState,
            Message::Frame(f) => Topic::Camera(f.camera),
            Message::Control(_) => Topic::Control,
            Message::Event(_) => Topic::Session,
        }
    }
}

/// A message plus the header fields of the frame that carried it.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub flags: u16,
    pub seq: u32,
    pub send_time_ns: u64,
    pub message: Message,
}

impl Envelope {
    pub fn new(seq: u32, send_time_ns: u64, message: Message) -> Envelope {
        Envelope {
            flags: 0,
            seq,
            send_time_ns,
            message,
        }
    }
}
