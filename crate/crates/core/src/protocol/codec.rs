//! `WBTP` frame encoding.
//!
//! ```text
//! offset size field
//!  0      4   magic "WBTP" (57 42 54 50)
//!  4      1   version (1)
//!  5      1   msg_type
//!  6      2   flags
//!  8      4   seq
//! 12      8   send_time_ns
//! 20      4   payload_len
//! 24      n   payload
//! ```
//!
//! All integers and floats are little-endian. Payload layouts are listed in
//! `docs/wire-protocol.md`.

use thiserror::Error;

use super::message::*;
use crate::config::CameraId;
use crate::kinematics::{JointState, Pose};

pub const MAGIC: [u8; 4] = *b"WBTP";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 24;
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

pub const COMMAND_PAYLOAD_LEN: usize = 2 * 7 * 8 + 3;
pub const JOINT_STATE_PAYLOAD_LEN: usize = 3 * 8 + JointState::LEN * 8;
const FRAME_FIXED_LEN: usize = 18;
const EVENT_FIXED_LEN: usize = 8 + 8 + 8 + 8 + 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the 16 MiB limit")]
    PayloadTooLarge(usize),
    #[error("field too long: {0}")]
    FieldTooLong(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown msg_type {0}")]
    UnknownMsgType(u8),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    TruncatedFrame { needed: usize, available: usize },
    #[error("length mismatch: payload_len {declared}, message needs {expected}")]
    LengthMismatch { declared: usize, expected: usize },
    #[error("declared payload of {0} bytes exceeds the 16 MiB limit")]
    PayloadTooLarge(usize),
    #[error("malformed payload: {0}")]
    Malformed(&'static str),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn pose(&mut self, p: &Pose) {
        p.position
            .iter()
            .chain(&p.orientation)
            .for_each(|&v| self.f64(v));
    }
    fn string(&mut self, s: &str, what: &'static str) -> Result<(), EncodeError> {
        let len = u16::try_from(s.len()).map_err(|_| EncodeError::FieldTooLong(what))?;
        self.u16(len);
        self.0.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(DecodeError::LengthMismatch {
                declared: self.buf.len(),
                expected: self.pos + n,
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bool(&mut self) -> Result<bool, DecodeError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(DecodeError::Malformed("boolean byte must be 0 or 1")),
        }
    }
    fn pose(&mut self) -> Result<Pose, DecodeError> {
        let mut v = [0.0; 7];
        for x in &mut v {
            *x = self.f64()?;
        }
        Ok(Pose::new([v[0], v[1], v[2]], [v[3], v[4], v[5], v[6]]))
    }
    fn string(&mut self) -> Result<String, DecodeError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| DecodeError::Malformed("string is not UTF-8"))
    }
    fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }
    fn finish(&self) -> Result<(), DecodeError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(DecodeError::LengthMismatch {
                declared: self.buf.len(),
                expected: self.pos,
            })
        }
    }
}

fn encode_payload(msg: &Message, w: &mut Writer) -> Result<(), EncodeError> {
    match msg {
        Message::Command(c) => {
            w.pose(&c.left);
            w.pose(&c.right);
            w.u8(c.gripper_pressed[0] as u8);
            w.u8(c.gripper_pressed[1] as u8);
            w.u8(c.clutch as u8);
        }
        Message::JointState(j) => {
            w.u64(j.tick);
            w.u64(j.sim_time_ns);
            w.u64(j.echo_send_time_ns);
            j.joints.to_array().iter().for_each(|&v| w.f64(v));
        }
        Message::Frame(f) => {
            w.u8(f.camera as u8);
            w.u8(f.codec as u8);
            w.u16(f.width);
            w.u16(f.height);
            w.u32(f.seq);
            w.u64(f.capture_time_ns);
            w.0.extend_from_slice(&f.payload);
        }
        Message::Control(c) => match c {
            SessionControl::Subscribe(t) => {
                w.u8(1);
                w.string(t.as_str(), "topic")?;
            }
            SessionControl::Unsubscribe(t) => {
                w.u8(2);
                w.string(t.as_str(), "topic")?;
            }
            SessionControl::Heartbeat => {
                w.u8(3);
                w.u16(0);
            }
        },
        Message::Event(e) => {
            w.u8(e.kind as u8);
            w.u8(e.status as u8);
            w.u8(e.subtask);
            w.u8(e.alpha_code);
            w.u8(e.points);
            w.0.extend_from_slice(&[0; 3]);
            w.u64(e.time_ns);
            w.u64(e.beta_ns);
            w.f64(e.score);
            w.string(&e.label, "label")?;
        }
    }
    Ok(())
}

/// Serialise one envelope into exactly one frame.
pub fn encode(env: &Envelope) -> Result<Vec<u8>, EncodeError> {
    let payload_hint = match &env.message {
        Message::Frame(f) => FRAME_FIXED_LEN + f.payload.len(),
        _ => 256,
    };
    if payload_hint > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLarge(payload_hint));
    }
    let mut w = Writer(Vec::with_capacity(HEADER_LEN + payload_hint));
    w.0.extend_from_slice(&MAGIC);
    w.u8(VERSION);
    w.u8(env.message.msg_type() as u8);
    w.u16(env.flags);
    w.u32(env.seq);
    w.u64(env.send_time_ns);
    w.u32(0); // patched below
    encode_payload(&env.message, &mut w)?;
    let payload_len = w.0.len() - HEADER_LEN;
    if payload_len > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLarge(payload_len));
    }
    w.0[20..24].copy_from_slice(&(payload_len as u32).to_le_bytes());
    Ok(w.0)
}

/// Validates the header at the start of `buf` and returns the total frame
/// length (header + payload) it declares. Needs only `HEADER_LEN` bytes.
pub fn frame_len(buf: &[u8]) -> Result<usize, DecodeError> {
    let prefix = buf.len().min(4);
    if buf[..prefix] != MAGIC[..prefix] {
        return Err(DecodeError::BadMagic);
    }
    if buf.len() < HEADER_LEN {
        return Err(DecodeError::TruncatedFrame {
            needed: HEADER_LEN,
            available: buf.len(),
        });
    }
    if buf[4] != VERSION {
        return Err(DecodeError::UnsupportedVersion(buf[4]));
    }
    if MessageType::from_u8(buf[5]).is_none() {
        return Err(DecodeError::UnknownMsgType(buf[5]));
    }
    let payload_len = u32::from_le_bytes(buf[20..24].try_into().unwrap()) as usize;
    if payload_len > MAX_PAYLOAD {
        return Err(DecodeError::PayloadTooLarge(payload_len));
    }
    Ok(HEADER_LEN + payload_len)
}

fn decode_payload(kind: MessageType, payload: &[u8]) -> Result<Message, DecodeError> {
    let fixed = |expected: usize| {
        if payload.len() == expected {
            Ok(())
        } else {
            Err(DecodeError::LengthMismatch {
                declared: payload.len(),
                expected,
            })
        }
    };
    let mut r = Reader {
        buf: payload,
        pos: 0,
    };
    let msg = match kind {
        MessageType::CommandRetarget => {
            fixed(COMMAND_PAYLOAD_LEN)?;
            let left = r.pose()?;
            let right = r.pose()?;
            let gripper_pressed = [r.bool()?, r.bool()?];
            let clutch = r.bool()?;
            Message::Command(CommandRetarget {
                left,
                right,
                gripper_pressed,
                clutch,
            })
        }
        MessageType::JointState => {
            fixed(JOINT_STATE_PAYLOAD_LEN)?;
            let tick = r.u64()?;
            let sim_time_ns = r.u64()?;
            let echo_send_time_ns = r.u64()?;
            let mut v = [0.0; JointState::LEN];
            for x in &mut v {
                *x = r.f64()?;
            }
            Message::JointState(JointStateMsg {
                tick,
                sim_time_ns,
                echo_send_time_ns,
                joints: JointState::from_array(&v),
            })
        }
        MessageType::Frame => {
            if payload.len() < FRAME_FIXED_LEN {
                return Err(DecodeError::LengthMismatch {
                    declared: payload.len(),
                    expected: FRAME_FIXED_LEN,
                });
            }
            let camera =
                CameraId::from_u8(r.u8()?).ok_or(DecodeError::Malformed("unknown camera id"))?;
            let codec = match r.u8()? {
                0 => Codec::Jfif,
                _ => return Err(DecodeError::Malformed("unknown codec")),
            };
            let width = r.u16()?;
            let height = r.u16()?;
            let seq = r.u32()?;
            let capture_time_ns = r.u64()?;
            let frame = FramePacket {
                camera,
                seq,
                capture_time_ns,
                codec,
                width,
                height,
                payload: r.rest().to_vec(),
            };
            if !frame.is_well_formed() {
                return Err(DecodeError::Malformed(
                    "frame payload violates codec framing",
                ));
            }
            Message::Frame(frame)
        }
        MessageType::SessionControl => {
            let op = r.u8()?;
            let topic = r.string()?;
            r.finish()?;
            let parse = |t: &str| {
                t.parse::<Topic>()
                    .map_err(|_| DecodeError::Malformed("unknown topic"))
            };
            Message::Control(match op {
                1 => SessionControl::Subscribe(parse(&topic)?),
                2 => SessionControl::Unsubscribe(parse(&topic)?),
                3 if topic.is_empty() => SessionControl::Heartbeat,
                3 => return Err(DecodeError::Malformed("heartbeat carries no topic")),
                _ => return Err(DecodeError::Malformed("unknown control op")),
            })
        }
        MessageType::SessionEvent => {
            if payload.len() < EVENT_FIXED_LEN {
                return Err(DecodeError::LengthMismatch {
                    declared: payload.len(),
                    expected: EVENT_FIXED_LEN,
                });
            }
            let kind =
                EventKind::from_u8(r.u8()?).ok_or(DecodeError::Malformed("unknown event kind"))?;
            let status = EventStatus::from_u8(r.u8()?)
                .ok_or(DecodeError::Malformed("unknown event status"))?;
            let subtask = r.u8()?;
            let alpha_code = r.u8()?;
            let points = r.u8()?;
            if r.take(3)? != [0, 0, 0] {
                return Err(DecodeError::Malformed("reserved bytes must be zero"));
            }
            let time_ns = r.u64()?;
            let beta_ns = r.u64()?;
            let score = r.f64()?;
            let label = r.string()?;
            r.finish()?;
            Message::Event(SessionEvent {
                kind,
                status,
                subtask,
                alpha_code,
                points,
                time_ns,
                beta_ns,
                score,
                label,
            })
        }
    };
    Ok(msg)
}

/// Decode the first frame in `buf`.
///
/// Returns the envelope and the number of bytes it occupied. On
/// `TruncatedFrame` nothing is consumed and the caller should retry with
/// more data. Never panics on arbitrary input.
pub fn decode(buf: &[u8]) -> Result<(Envelope, usize), DecodeError> {
    let total = frame_len(buf)?;
    if buf.len() < total {
        return Err(DecodeError::TruncatedFrame {
            needed: total,
            available: buf.len(),
        });
    }
    let kind = MessageType::from_u8(buf[5]).expect("checked by frame_len");
    let flags = u16::from_le_bytes(buf[6..8].try_into().unwrap());
    let seq = u32::from_le_bytes(buf[8..12].try_into().unwrap());
    let send_time_ns = u64::from_le_bytes(buf[12..20].try_into().unwrap());
    let message = decode_payload(kind, &buf[HEADER_LEN..total])?;
    Ok((
        Envelope {
            flags,
            seq,
            send_time_ns,
            message,
        },
        total,
    ))
}
