use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Operation coefficient α.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    InPerson,
    Remote,
    Autonomous,
}

impl Alpha {
    pub const ALL: [Alpha; 3] = [Alpha::InPerson, Alpha::Remote, Alpha::Autonomous];

    pub fn value(self) -> f64 {
        match self {
            Alpha::InPerson => 0.5,
            Alpha::Remote => 1.0,
            Alpha::Autonomous => 4.0,
        }
    }

    pub fn from_value(v: f64) -> Option<Alpha> {
        Alpha::ALL.into_iter().find(|a| a.value() == v)
    }

    /// `SessionEvent.alpha_code`: 1, 2, 3; 0 means unset.
    pub fn wire_code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_wire_code(code: u8) -> Option<Alpha> {
        code.checked_sub(1)
            .and_then(|i| Alpha::ALL.get(i as usize).copied())
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value();
        if v.fract() == 0.0 {
            write!(f, "{}", v as i64)
        } else {
            write!(f, "{v}")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component {
    pub label: &'static str,
    pub points: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubtaskSpec {
    pub id: u8,
    pub name: &'static str,
    pub components: &'static [Component],
}

impl SubtaskSpec {
    pub fn max_points(&self) -> u8 {
        self.components.iter().map(|c| c.points).sum()
    }

    pub fn component(&self, label: &str) -> Option<&'static Component> {
        self.components.iter().find(|c| c.label == label)
    }
}

pub const MAX_SUBTASK_POINTS: u8 = 5;

pub const SUBTASKS: [SubtaskSpec; 3] = [
    SubtaskSpec {
        id: 1,
        name: "tablecloth unfolding",
        components: &[Component {
            label: "unfold tablecloth",
            points: 5,
        }],
    },
    SubtaskSpec {
        id: 2,
        name: "opening the food container",
        components: &[
            Component {
                label: "unlock two sides",
                points: 3,
            },
            Component {
                label: "remove lid",
                points: 2,
            },
        ],
    },
    SubtaskSpec {
        id: 3,
        name: "packing pizza",
        components: &[
            Component {
                label: "place pizza",
                points: 1,
            },
            Component {
                label: "align lid",
                points: 2,
            },
            Component {
                label: "lock two sides",
                points: 2,
            },
        ],
    },
];

pub fn subtask_spec(id: u8) -> Option<&'static SubtaskSpec> {
    SUBTASKS.iter().find(|s| s.id == id)
}

/// Outcome of one subtask. `beta_ns` is `None` for an untimed subtask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubtaskResult {
    pub s: u8,
    pub beta_ns: Option<u64>,
    pub alpha: Alpha,
}

impl SubtaskResult {
    pub fn timed(s: u8, beta_s: f64, alpha: Alpha) -> SubtaskResult {
        SubtaskResult {
            s,
            beta_ns: Some((beta_s * 1e9).round() as u64),
            alpha,
        }
    }

    pub fn beta_s(&self) -> Option<f64> {
        self.beta_ns.map(|ns| ns as f64 / 1e9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub index: u32,
    /// Subtasks 1, 2, 3 in order.
    pub results: [SubtaskResult; 3],
}

impl RoundRecord {
    /// Every subtask timed.
    pub fn is_complete(&self) -> bool {
        self.results.iter().all(|r| r.beta_ns.is_some())
    }

    /// Sum of the timed β values, seconds.
    pub fn duration_s(&self) -> f64 {
        self.results
            .iter()
            .filter_map(SubtaskResult::beta_s)
            .fold(0.0, |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("subtask has no completion time")]
    MissingBeta,
}

/// What an untimed subtask contributes to a round score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaPolicy {
    /// Contributes 0 and is annotated.
    #[default]
    Zero,
    /// Scored as if it took this many seconds.
    AssumeSeconds(f64),
}

/// `s / β · α`, β in seconds.
pub fn subtask_score(r: &SubtaskResult) -> Result<f64, ScoreError> {
    match r.beta_s() {
        Some(beta) if beta > 0.0 => Ok(r.s as f64 / beta * r.alpha.value()),
        _ => Err(ScoreError::MissingBeta),
    }
}

/// A note attached to a round score when the β policy was applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Annotation {
    pub round: u32,
    pub subtask: u8,
    pub note: String,
}

pub fn subtask_score_with(r: &SubtaskResult, policy: BetaPolicy) -> (f64, Option<String>) {
    match (subtask_score(r), policy) {
        (Ok(v), _) => (v, None),
        (Err(_), BetaPolicy::Zero) => (0.0, Some(format!("untimed (s = {}): contributes 0", r.s))),
        (Err(_), BetaPolicy::AssumeSeconds(b)) => (
            r.s as f64 / b * r.alpha.value(),
            Some(format!(
                "untimed (s = {}): scored with assumed beta = {b} s",
                r.s
            )),
        ),
    }
}

pub fn round_score(r: &RoundRecord, policy: BetaPolicy) -> (f64, Vec<Annotation>) {
    let mut total = 0.0;
    let mut notes = Vec::new();
    for (k, res) in r.results.iter().enumerate() {
        let (v, note) = subtask_score_with(res, policy);
        total += v;
        if let Some(note) = note {
            notes.push(Annotation {
                round: r.index,
                subtask: k as u8 + 1,
                note,
            });
        }
    }
    (total, notes)
}

pub fn total_score(rounds: &[RoundRecord], policy: BetaPolicy) -> f64 {
    rounds
        .iter()
        .map(|r| round_score(r, policy).0)
        .fold(0.0, |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_points_sum_to_five() {
        for s in &SUBTASKS {
            assert_eq!(s.max_points(), MAX_SUBTASK_POINTS, "{}", s.name);
        }
        assert_eq!(
            subtask_spec(2)
                .unwrap()
                .component("unlock two sides")
                .unwrap()
                .points,
            3
        );
    }

    #[test]
    fn alpha_values_and_codes() {
        assert_eq!(Alpha::ALL.map(Alpha::value), [0.5, 1.0, 4.0]);
        for a in Alpha::ALL {
            assert_eq!(Alpha::from_wire_code(a.wire_code()), Some(a));
            assert_eq!(Alpha::from_value(a.value()), Some(a));
        }
        assert_eq!(Alpha::from_wire_code(0), None);
        assert_eq!(Alpha::from_value(2.0), None);
        assert_eq!(Alpha::InPerson.to_string(), "0.5");
        assert_eq!(Alpha::Autonomous.to_string(), "4");
    }

    #[test]
    fn score_examples() {
        let r = SubtaskResult::timed(5, 13.0, Alpha::Remote);
        assert_eq!(subtask_score(&r).unwrap(), 5.0 / 13.0);
        let r = SubtaskResult::timed(5, 107.0, Alpha::Autonomous);
        assert_eq!(subtask_score(&r).unwrap(), 4.0 * (5.0 / 107.0));
        let r = SubtaskResult::timed(0, 50.0, Alpha::InPerson);
        assert_eq!(subtask_score(&r).unwrap(), 0.0);
        let r = SubtaskResult {
            s: 1,
            beta_ns: None,
            alpha: Alpha::Remote,
        };
        assert_eq!(subtask_score(&r), Err(ScoreError::MissingBeta));
    }

    #[test]
    fn beta_policy() {
        let untimed = SubtaskResult {
            s: 1,
            beta_ns: None,
            alpha: Alpha::Remote,
        };
        let rec = RoundRecord {
            index: 9,
            results: [
                SubtaskResult::timed(5, 84.0, Alpha::Remote),
                SubtaskResult::timed(5, 10.0, Alpha::Remote),
                untimed,
            ],
        };
        let (v, notes) = round_score(&rec, BetaPolicy::Zero);
        assert_eq!(v, 5.0 / 84.0 + 5.0 / 10.0);
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].subtask, 3);
        let (v, _) = round_score(&rec, BetaPolicy::AssumeSeconds(20.0));
        assert_eq!(v, 5.0 / 84.0 + 5.0 / 10.0 + 1.0 / 20.0);
        assert!(!rec.is_complete());
        assert_eq!(rec.duration_s(), 94.0);
    }

    #[test]
    fn empty_total_is_zero() {
        let t = total_score(&[], BetaPolicy::Zero);
        assert_eq!(t, 0.0);
        assert!(t.is_sign_positive());
    }
}
