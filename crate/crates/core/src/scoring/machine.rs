use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rules::{subtask_score, subtask_spec, Alpha, BetaPolicy, RoundRecord, SubtaskResult};
use crate::clock;

/// Rounds may only start within this window from session start.
pub const SESSION_WINDOW_NS: u64 = 30 * 60 * 1_000_000_000;
/// Shortest accepted completion time.
pub const MIN_BETA_NS: u64 = 1_000_000;

pub trait Clock: Send {
    fn now_ns(&self) -> u64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MonotonicClock;

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        clock::monotonic_ns()
    }
}

/// Externally driven clock for replays and tests. Clones share the time.
#[derive(Clone, Debug, Default)]
pub struct ManualClock(Arc<AtomicU64>);

impl ManualClock {
    pub fn new(t_ns: u64) -> ManualClock {
        ManualClock(Arc::new(AtomicU64::new(t_ns)))
    }
    pub fn set(&self, t_ns: u64) {
        self.0.store(t_ns, Ordering::SeqCst);
    }
    pub fn advance(&self, dt_ns: u64) {
        self.0.fetch_add(dt_ns, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ns(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RoundStart,
    SubtaskStart {
        subtask: u8,
        alpha: Alpha,
    },
    ComponentAchieved {
        label: String,
    },
    SubtaskComplete,
    /// Ends the active subtask without a completion time; achieved points are kept.
    SubtaskAbort,
    RoundFinish,
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::RoundStart => "round_start",
            Event::SubtaskStart { .. } => "subtask_start",
            Event::ComponentAchieved { .. } => "component_achieved",
            Event::SubtaskComplete => "subtask_complete",
            Event::SubtaskAbort => "subtask_abort",
            Event::RoundFinish => "round_finish",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("illegal transition: {event} while {state}")]
    IllegalTransition { event: &'static str, state: String },
    #[error("unknown component {0:?} for the active subtask")]
    UnknownComponent(String),
    #[error("component {0:?} already achieved")]
    DuplicateComponent(String),
    #[error("session window expired ({elapsed_ms} ms since session start)")]
    SessionExpired { elapsed_ms: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActiveSubtask {
    pub id: u8,
    pub alpha: Alpha,
    pub started_ns: u64,
    pub achieved: Vec<&'static str>,
}

impl ActiveSubtask {
    pub fn points(&self) -> u8 {
        let spec = subtask_spec(self.id).expect("active id is valid");
        self.achieved
            .iter()
            .map(|l| spec.component(l).expect("achieved labels are valid").points)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    /// Between subtasks; `results.len()` subtasks are done.
    Round {
        results: Vec<SubtaskResult>,
    },
    Subtask {
        results: Vec<SubtaskResult>,
        active: ActiveSubtask,
    },
}

impl Phase {
    fn describe(&self) -> String {
        match self {
            Phase::Idle => "idle".into(),
            Phase::Round { results } if results.len() == 3 => "round awaiting finish".into(),
            Phase::Round { results } => format!("round awaiting subtask {}", results.len() + 1),
            Phase::Subtask { active, .. } => format!("subtask {} active", active.id),
        }
    }
}

/// What an accepted transition produced.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Ack {
    pub round: u32,
    pub subtask: u8,
    pub alpha: Option<Alpha>,
    pub points: u8,
    pub beta_ns: Option<u64>,
    /// Subtask score once the subtask is completed, else 0.
    pub score: f64,
}

/// Pure state of a scoring session. Transitions either succeed or leave the
/// state untouched.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScoringState {
    pub session_start_ns: u64,
    pub rounds: Vec<RoundRecord>,
    pub phase: Phase,
}

impl ScoringState {
    pub fn new(session_start_ns: u64) -> ScoringState {
        ScoringState {
            session_start_ns,
            rounds: Vec::new(),
            phase: Phase::Idle,
        }
    }

    fn illegal(&self, event: &Event) -> ScoringError {
        ScoringError::IllegalTransition {
            event: event.name(),
            state: self.phase.describe(),
        }
    }

    pub fn apply(&mut self, event: &Event, now_ns: u64) -> Result<Ack, ScoringError> {
        let round = self.rounds.len() as u32 + 1;
        let mut ack = Ack {
            round,
            ..Default::default()
        };
        let next = match (&self.phase, event) {
            (Phase::Idle, Event::RoundStart) => {
                let elapsed = now_ns.saturating_sub(self.session_start_ns);
                if elapsed >= SESSION_WINDOW_NS {
                    return Err(ScoringError::SessionExpired {
                        elapsed_ms: elapsed / 1_000_000,
                    });
                }
                Phase::Round {
                    results: Vec::new(),
                }
            }
            (Phase::Round { results }, Event::SubtaskStart { subtask, alpha })
                if results.len() < 3 && *subtask as usize == results.len() + 1 =>
            {
                ack.subtask = *subtask;
                ack.alpha = Some(*alpha);
                Phase::Subtask {
                    results: results.clone(),
                    active: ActiveSubtask {
                        id: *subtask,
                        alpha: *alpha,
                        started_ns: now_ns,
                        achieved: Vec::new(),
                    },
                }
            }
            (Phase::Subtask { results, active }, Event::ComponentAchieved { label }) => {
                let spec = subtask_spec(active.id).expect("active id is valid");
                let component = spec
                    .component(label)
                    .ok_or_else(|| ScoringError::UnknownComponent(label.clone()))?;
                if active.achieved.contains(&component.label) {
                    return Err(ScoringError::DuplicateComponent(label.clone()));
                }
                let mut active = active.clone();
                active.achieved.push(component.label);
                ack.subtask = active.id;
                ack.alpha = Some(active.alpha);
                ack.points = active.points();
                Phase::Subtask {
                    results: results.clone(),
                    active,
                }
            }
            (Phase::Subtask { results, active }, Event::SubtaskComplete) => {
                let beta = now_ns.saturating_sub(active.started_ns);
                if beta < MIN_BETA_NS {
                    return Err(self.illegal(event));
                }
                let r = SubtaskResult {
                    s: active.points(),
                    beta_ns: Some(beta),
                    alpha: active.alpha,
                };
                ack.subtask = active.id;
                ack.alpha = Some(active.alpha);
                ack.points = r.s;
                ack.beta_ns = Some(beta);
                ack.score = subtask_score(&r).expect("beta > 0");
                let mut results = results.clone();
                results.push(r);
                Phase::Round { results }
            }
            (Phase::Subtask { results, active }, Event::SubtaskAbort) => {
                let r = SubtaskResult {
                    s: active.points(),
                    beta_ns: None,
                    alpha: active.alpha,
                };
                ack.subtask = active.id;
                ack.alpha = Some(active.alpha);
                ack.points = r.s;
                let mut results = results.clone();
                results.push(r);
                Phase::Round { results }
            }
            (Phase::Round { results }, Event::RoundFinish) if results.len() == 3 => {
                self.rounds.push(RoundRecord {
                    index: round,
                    results: [results[0], results[1], results[2]],
                });
                Phase::Idle
            }
            _ => return Err(self.illegal(event)),
        };
        self.phase = next;
        Ok(ack)
    }

    /// Completed rounds plus the finished subtasks of the round in progress.
    pub fn running_total(&self, policy: BetaPolicy) -> f64 {
        let partial: f64 = match &self.phase {
            Phase::Idle => 0.0,
            Phase::Round { results } | Phase::Subtask { results, .. } => results
                .iter()
                .map(|r| super::rules::subtask_score_with(r, policy).0)
                .fold(0.0, |a, b| a + b),
        };
        super::rules::total_score(&self.rounds, policy) + partial
    }
}

/// One accepted event and when it happened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t_ns: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Ordered record of accepted transitions; replaying it rebuilds the state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_start_ns: u64,
    pub events: Vec<LogEntry>,
}

/// Scoring state machine driven by a clock, recording every accepted event.
pub struct ScoringSession<C: Clock = MonotonicClock> {
    clock: C,
    state: ScoringState,
    log: SessionLog,
}

impl ScoringSession<MonotonicClock> {
    pub fn start_now() -> ScoringSession<MonotonicClock> {
        ScoringSession::new(MonotonicClock)
    }
}

impl<C: Clock> ScoringSession<C> {
    /// The 30-minute window starts now.
    pub fn new(clock: C) -> ScoringSession<C> {
        let start = clock.now_ns();
        ScoringSession {
            clock,
            state: ScoringState::new(start),
            log: SessionLog {
                session_start_ns: start,
                events: Vec::new(),
            },
        }
    }

    pub fn state(&self) -> &ScoringState {
        &self.state
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.state.rounds
    }

    pub fn apply(&mut self, event: Event) -> Result<Ack, ScoringError> {
        let now = self.clock.now_ns();
        let ack = self.state.apply(&event, now)?;
        self.log.events.push(LogEntry { t_ns: now, event });
        Ok(ack)
    }

    pub fn start_round(&mut self) -> Result<Ack, ScoringError> {
        self.apply(Event::RoundStart)
    }

    pub fn start_subtask(&mut self, id: u8, alpha: Alpha) -> Result<Ack, ScoringError> {
        self.apply(Event::SubtaskStart { subtask: id, alpha })
    }

    pub fn achieve(&mut self, label: &str) -> Result<Ack, ScoringError> {
        self.apply(Event::ComponentAchieved {
            label: label.to_string(),
        })
    }

    pub fn complete_subtask(&mut self) -> Result<Ack, ScoringError> {
        self.apply(Event::SubtaskComplete)
    }

    pub fn abort_subtask(&mut self) -> Result<Ack, ScoringError> {
        self.apply(Event::SubtaskAbort)
    }

    pub fn finish_round(&mut self) -> Result<Ack, ScoringError> {
        self.apply(Event::RoundFinish)
    }
}

/// Rebuild a session from its log, re-validating every transition.
pub fn replay(log: &SessionLog) -> Result<ScoringSession<ManualClock>, (usize, ScoringError)> {
    let clock = ManualClock::new(log.session_start_ns);
    let mut session = ScoringSession::new(clock.clone());
    for (i, entry) in log.events.iter().enumerate() {
        clock.set(entry.t_ns);
        session.apply(entry.event.clone()).map_err(|e| (i, e))?;
    }
    Ok(session)
}
