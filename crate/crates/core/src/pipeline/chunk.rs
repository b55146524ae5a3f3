use super::episode::{Action, Episode};
use crate::kinematics::JointState;

pub const DEFAULT_CHUNK: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct ChunkSample {
    pub t: usize,
    pub joints: JointState,
    /// Step index of each camera's frame, `None` if the camera was not recorded.
    pub frame_refs: [Option<usize>; 3],
    /// K actions starting at `t`; past the end the last real action repeats.
    pub actions: Vec<Action>,
    /// `pad_mask[i]` is true iff `t + i` is a real step.
    pub pad_mask: Vec<bool>,
}

/// One training sample per step.
///
/// # Panics
/// If `k == 0`.
pub fn make_chunks(ep: &Episode, k: usize) -> Vec<ChunkSample> {
    assert!(k >= 1, "chunk size must be at least 1");
    let t_len = ep.len();
    (0..t_len)
        .map(|t| ChunkSample {
            t,
            joints: ep.joints[t],
            frame_refs: ep.frames.each_ref().map(|f| (!f.is_empty()).then_some(t)),
            actions: (t..t + k).map(|i| ep.actions[i.min(t_len - 1)]).collect(),
            pad_mask: (t..t + k).map(|i| i < t_len).collect(),
        })
        .collect()
}
