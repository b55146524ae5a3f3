//! Static-prefix detection and trimming on end-effector positions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::Episode;
use crate::kinematics::Pose;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrimError {
    #[error("episode has {0} steps, need at least 2")]
    TooShort(usize),
    #[error("invalid trim config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrimConfig {
    /// τ, meters per frame.
    pub threshold_m: f64,
    /// W: minimum number of static frames before onset for a prefix to be trimmed.
    pub window: usize,
    pub keep_prefix_frames: usize,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            threshold_m: 2e-3,
            window: 5,
            keep_prefix_frames: 1,
        }
    }
}

impl TrimConfig {
    pub fn validate(&self) -> Result<(), TrimError> {
        if !(self.threshold_m.is_finite() && self.threshold_m > 0.0) {
            return Err(TrimError::InvalidConfig("threshold must be positive"));
        }
        if self.window == 0 {
            return Err(TrimError::InvalidConfig("window must be at least 1"));
        }
        Ok(())
    }
}

fn step_distance(a: &Pose, b: &Pose) -> f64 {
    let d: [f64; 3] = std::array::from_fn(|k| b.position[k] - a.position[k]);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// `[‖ΔL‖, ‖ΔR‖]` for steps 1..T; entry `i - 1` is the displacement into step `i`.
pub fn displacements(ep: &Episode) -> Vec<[f64; 2]> {
    (1..ep.len())
        .map(|i| {
            [
                step_distance(&ep.ee_left[i - 1], &ep.ee_left[i]),
                step_distance(&ep.ee_right[i - 1], &ep.ee_right[i]),
            ]
        })
        .collect()
}

/// First step whose larger arm displacement reaches τ, or `None` if the episode never moves.
pub fn detect_motion_onset(ep: &Episode, cfg: &TrimConfig) -> Result<Option<usize>, TrimError> {
    cfg.validate()?;
    if ep.len() < 2 {
        return Err(TrimError::TooShort(ep.len()));
    }
    Ok(displacements(ep)
        .iter()
        .position(|[l, r]| l.max(*r) >= cfg.threshold_m)
        .map(|i| i + 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrimOutcome {
    pub episode: Episode,
    pub onset: Option<usize>,
    /// Steps removed from the front.
    pub dropped: usize,
    /// No displacement ever reached τ; the episode is returned unchanged.
    pub all_static: bool,
}

/// Drops `[0, t₀ − keep)` when at least `window` static frames precede onset t₀.
///
/// At least two steps always remain, so the result can be trimmed again.
/// With `keep_prefix_frames ≥ 1` trimming is idempotent. With 0 the onset
/// displacement itself leaves the episode, so a pause right after onset can
/// become a new static prefix.
pub fn trim_episode(ep: &Episode, cfg: &TrimConfig) -> Result<TrimOutcome, TrimError> {
    let onset = detect_motion_onset(ep, cfg)?;
    let dropped = match onset {
        Some(t0) if t0 >= cfg.window && t0 > cfg.keep_prefix_frames => {
            (t0 - cfg.keep_prefix_frames).min(ep.len() - 2)
        }
        _ => 0,
    };
    let episode = if dropped == 0 {
        ep.clone()
    } else {
        ep.slice(dropped..ep.len())
    };
    Ok(TrimOutcome {
        episode,
        onset,
        dropped,
        all_static: onset.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{JointState, ACTION_DIM};
    use crate::pipeline::EpisodeMeta;
    use crate::scoring::Alpha;

    fn from_signal(d: &[f64]) -> Episode {
        let mut e = Episode::empty(EpisodeMeta::new("t", Alpha::Remote, 1, "h"));
        let mut x = 0.0;
        for i in 0..=d.len() {
            if i > 0 {
                x += d[i - 1];
            }
            e.joints.push(JointState::default());
            e.ee_left.push(Pose::from_position([x, 0.0, 0.0]));
            e.ee_right.push(Pose::from_position([0.0, 0.5, 0.0]));
            e.actions.push([0.0; ACTION_DIM]);
            e.timestamps_ns.push(i as u64);
        }
        e
    }

    #[test]
    fn onset_walkthrough() {
        let e = from_signal(&[0.0, 0.0, 0.0, 0.0, 0.01, 0.01, 0.01]);
        let cfg = TrimConfig {
            threshold_m: 0.005,
            ..Default::default()
        };
        assert_eq!(detect_motion_onset(&e, &cfg), Ok(Some(5)));
        let out = trim_episode(&e, &cfg).unwrap();
        assert_eq!(out.dropped, 4);
        assert_eq!(out.episode.len(), e.len() - 4);
        assert_eq!(out.episode.timestamps_ns[0], 4);
    }

    #[test]
    fn static_and_short() {
        let e = from_signal(&[0.0; 6]);
        let out = trim_episode(&e, &TrimConfig::default()).unwrap();
        assert!(out.all_static);
        assert_eq!(out.episode, e);
        assert_eq!(
            detect_motion_onset(&from_signal(&[]), &TrimConfig::default()),
            Err(TrimError::TooShort(1))
        );
    }

    #[test]
    fn short_prefix_is_kept() {
        let e = from_signal(&[0.0, 0.0, 0.01, 0.01]);
        let out = trim_episode(&e, &TrimConfig::default()).unwrap();
        assert_eq!(out.onset, Some(3));
        assert_eq!(out.dropped, 0);
    }

    #[test]
    fn at_least_two_steps_remain() {
        let e = from_signal(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.01]);
        let cfg = TrimConfig {
            keep_prefix_frames: 0,
            ..Default::default()
        };
        let out = trim_episode(&e, &cfg).unwrap();
        assert_eq!(out.dropped, 5);
        assert_eq!(out.episode.len(), 2);
        assert_eq!(
            trim_episode(&out.episode, &cfg).unwrap().episode,
            out.episode
        );
    }

    #[test]
    fn bad_config() {
        let e = from_signal(&[0.0]);
        let cfg = TrimConfig {
            threshold_m: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            detect_motion_onset(&e, &cfg),
            Err(TrimError::InvalidConfig(_))
        ));
        let cfg = TrimConfig {
            window: 0,
            ..Default::default()
        };
        assert!(matches!(
            trim_episode(&e, &cfg),
            Err(TrimError::InvalidConfig(_))
        ));
    }
}
