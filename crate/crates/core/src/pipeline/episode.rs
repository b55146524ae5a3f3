use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointState, Pose, ACTION_DIM};
use crate::scoring::Alpha;
use crate::simulator::ObservationBundle;

pub type Action = [f64; ACTION_DIM];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpisodeError {
    #[error("episode has no steps")]
    Empty,
    #[error("series {name} has {len} entries, expected {expected}")]
    LengthMismatch {
        name: &'static str,
        len: usize,
        expected: usize,
    },
    #[error("timestamps not strictly increasing at step {0}")]
    NonMonotonicTime(usize),
    #[error("step {step}: expected timestamp {expected} ns, got {actual} ns")]
    IrregularTimestep {
        step: usize,
        expected: u64,
        actual: u64,
    },
    #[error("camera {camera}: {count} frames for {steps} steps")]
    FrameCount {
        camera: usize,
        count: usize,
        steps: usize,
    },
    #[error("camera {camera} step {step}: payload is not a JFIF image")]
    BadFrame { camera: usize, step: usize },
    #[error("dt must be positive")]
    BadTimestep,
    #[error("meta.frame_counts {declared:?} disagrees with stored frames {actual:?}")]
    FrameCountMeta {
        declared: [usize; 3],
        actual: [usize; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub task: String,
    pub operator_mode: Alpha,
    pub dt_ns: u64,
    pub robot_config_hash: String,
    pub seed: u64,
    /// Frames stored per camera, head / wrist_left / wrist_right. Each is 0 or T.
    pub frame_counts: [usize; 3],
}

impl EpisodeMeta {
    pub fn new(
        task: impl Into<String>,
        operator_mode: Alpha,
        dt_ns: u64,
        robot_config_hash: impl Into<String>,
    ) -> EpisodeMeta {
        EpisodeMeta {
            task: task.into(),
            operator_mode,
            dt_ns,
            robot_config_hash: robot_config_hash.into(),
            seed: 0,
            frame_counts: [0; 3],
        }
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_ns as f64 / 1e9
    }
}

/// One demonstration: per-step observations, commanded actions and camera frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub meta: EpisodeMeta,
    pub joints: Vec<JointState>,
    pub ee_left: Vec<Pose>,
    pub ee_right: Vec<Pose>,
    pub actions: Vec<Action>,
    pub timestamps_ns: Vec<u64>,
    /// JFIF payloads per camera, indexed by step.
    pub frames: [Vec<Vec<u8>>; 3],
}

pub(crate) fn is_jfif(payload: &[u8]) -> bool {
    payload.len() >= 4 && payload.starts_with(&[0xFF, 0xD8]) && payload.ends_with(&[0xFF, 0xD9])
}

impl Episode {
    pub fn empty(meta: EpisodeMeta) -> Episode {
        Episode {
            meta,
            joints: Vec::new(),
            ee_left: Vec::new(),
            ee_right: Vec::new(),
            actions: Vec::new(),
            timestamps_ns: Vec::new(),
            frames: Default::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ns.is_empty()
    }

    pub fn stored_frame_counts(&self) -> [usize; 3] {
        [
            self.frames[0].len(),
            self.frames[1].len(),
            self.frames[2].len(),
        ]
    }

    /// Appends one step. Frames are kept only if `with_frames`.
    pub fn push_observation(&mut self, obs: &ObservationBundle, action: Action, with_frames: bool) {
        self.joints.push(obs.joints);
        self.ee_left.push(obs.ee_left);
        self.ee_right.push(obs.ee_right);
        self.actions.push(action);
        self.timestamps_ns.push(obs.timestamp_ns);
        if with_frames {
            for (slot, packet) in self.frames.iter_mut().zip(&obs.frames) {
                slot.push(packet.payload.clone());
            }
        }
        self.meta.frame_counts = self.stored_frame_counts();
    }

    pub fn validate(&self) -> Result<(), EpisodeError> {
        let t = self.len();
        if t == 0 {
            return Err(EpisodeError::Empty);
        }
        if self.meta.dt_ns == 0 {
            return Err(EpisodeError::BadTimestep);
        }
        let lens = [
            ("joints", self.joints.len()),
            ("ee_left", self.ee_left.len()),
            ("ee_right", self.ee_right.len()),
            ("actions", self.actions.len()),
        ];
        for (name, len) in lens {
            if len != t {
                return Err(EpisodeError::LengthMismatch {
                    name,
                    len,
                    expected: t,
                });
            }
        }
        if let Some(i) = self.timestamps_ns.windows(2).position(|w| w[1] <= w[0]) {
            return Err(EpisodeError::NonMonotonicTime(i + 1));
        }
        for (camera, frames) in self.frames.iter().enumerate() {
            if !frames.is_empty() && frames.len() != t {
                return Err(EpisodeError::FrameCount {
                    camera,
                    count: frames.len(),
                    steps: t,
                });
            }
            if let Some(step) = frames.iter().position(|f| !is_jfif(f)) {
                return Err(EpisodeError::BadFrame { camera, step });
            }
        }
        let actual = self.stored_frame_counts();
        if self.meta.frame_counts != actual {
            return Err(EpisodeError::FrameCountMeta {
                declared: self.meta.frame_counts,
                actual,
            });
        }
        Ok(())
    }

    /// Timestamps advance by exactly `meta.dt_ns`.
    pub fn check_constant_dt(&self) -> Result<(), EpisodeError> {
        let Some(&t0) = self.timestamps_ns.first() else {
            return Err(EpisodeError::Empty);
        };
        for (step, &ts) in self.timestamps_ns.iter().enumerate() {
            let expected = t0 + step as u64 * self.meta.dt_ns;
            if ts != expected {
                return Err(EpisodeError::IrregularTimestep {
                    step,
                    expected,
                    actual: ts,
                });
            }
        }
        Ok(())
    }

    /// Steps `range` as a new episode.
    pub fn slice(&self, range: Range<usize>) -> Episode {
        let frames = self.frames.clone().map(|f| {
            if f.is_empty() {
                f
            } else {
                f[range.clone()].to_vec()
            }
        });
        let mut meta = self.meta.clone();
        meta.frame_counts = frames.each_ref().map(Vec::len);
        Episode {
            meta,
            joints: self.joints[range.clone()].to_vec(),
            ee_left: self.ee_left[range.clone()].to_vec(),
            ee_right: self.ee_right[range.clone()].to_vec(),
            actions: self.actions[range.clone()].to_vec(),
            timestamps_ns: self.timestamps_ns[range].to_vec(),
            frames,
        }
    }
}
