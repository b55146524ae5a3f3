//! Competition scoring: subtask/round/total formulas, the round and subtask
//! state machine, scorecards, and the official nine-round record.

pub mod machine;
pub mod report;
pub mod rules;
pub mod table1;

pub use machine::{
    replay, Ack, Clock, Event, LogEntry, ManualClock, MonotonicClock, Phase, ScoringError,
    ScoringSession, ScoringState, SessionLog, MIN_BETA_NS, SESSION_WINDOW_NS,
};
pub use report::{format_beta, RoundRow, Scorecard};
pub use rules::{
    round_score, subtask_score, subtask_spec, total_score, Alpha, Annotation, BetaPolicy,
    Component, RoundRecord, ScoreError, SubtaskResult, SubtaskSpec, SUBTASKS,
};
