//! Operator/robot wire protocol: `WBTP` binary frames, topic-addressed
//! sessions and latency statistics.

pub mod codec;
mod message;
pub mod session;
pub mod stats;
pub mod transport;

pub use codec::{decode, encode, frame_len, DecodeError, EncodeError, HEADER_LEN, MAX_PAYLOAD};
pub use message::{
    Codec, CommandRetarget, Envelope, EventKind, EventStatus, FramePacket, JointStateMsg, Message,
    MessageType, SessionControl, SessionEvent, Topic,
};
pub use session::{
    CloseReason, Session, SessionConfig, SessionError, TopicCounters, DEFAULT_FRAME_BUFFER,
    DEFAULT_HEARTBEAT_MS, DEFAULT_TCP_PORT, DEFAULT_WS_PORT,
};
pub use stats::{LatencyStats, StatsError};
