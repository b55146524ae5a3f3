use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::Episode;
use crate::kinematics::ACTION_DIM;

pub const STD_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormError {
    #[error("no steps to compute statistics over")]
    Empty,
}

/// Per-dimension count, mean and sum of squared deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Moments {
        Moments {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for k in 0..self.mean.len() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    /// Population standard deviation, floored.
    pub fn std(&self, floor: f64) -> Vec<f64> {
        self.m2
            .iter()
            .map(|s| (s / self.count as f64).sqrt().max(floor))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub steps: u64,
    pub action_mean: [f64; ACTION_DIM],
    pub action_std: [f64; ACTION_DIM],
    /// Over the observed 16 commanded joints (arms and grippers).
    pub joint_mean: [f64; ACTION_DIM],
    pub joint_std: [f64; ACTION_DIM],
}

fn arr(v: Vec<f64>) -> [f64; ACTION_DIM] {
    v.try_into().expect("dimension is ACTION_DIM")
}

pub fn compute_norm_stats(episodes: &[Episode]) -> Result<NormStats, NormError> {
    let mut actions = Moments::new(ACTION_DIM);
    let mut joints = Moments::new(ACTION_DIM);
    for ep in episodes {
        let mut a = Moments::new(ACTION_DIM);
        let mut j = Moments::new(ACTION_DIM);
        for (act, js) in ep.actions.iter().zip(&ep.joints) {
            a.push(act);
            j.push(&js.to_action());
        }
        actions.merge(&a);
        joints.merge(&j);
    }
    if actions.count == 0 {
        return Err(NormError::Empty);
    }
    Ok(NormStats {
        steps: actions.count,
        action_mean: arr(actions.mean.clone()),
        action_std: arr(actions.std(STD_FLOOR)),
        joint_mean: arr(joints.mean.clone()),
        joint_std: arr(joints.std(STD_FLOOR)),
    })
}
