//! The official nine-round competition record, as data and as an event log.

use super::machine::{Event, LogEntry, SessionLog};
use super::rules::{subtask_spec, Alpha, RoundRecord, SubtaskResult};

/// β in seconds per round and subtask; `None` marks the untimed cell.
pub const BETA_S: [[Option<u32>; 3]; 9] = [
    [Some(107), Some(13), Some(116)],
    [Some(84), Some(40), Some(75)],
    [Some(63), Some(56), Some(92)],
    [Some(138), Some(27), Some(30)],
    [Some(130), Some(55), Some(52)],
    [Some(58), Some(22), Some(59)],
    [Some(103), Some(16), Some(84)],
    [Some(84), Some(28), Some(102)],
    [Some(84), Some(10), None],
];

/// Base score s per round and subtask.
pub const S: [[u8; 3]; 9] = [
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 5],
    [5, 5, 1],
];

pub const ALPHA: Alpha = Alpha::Remote;

pub fn rounds() -> Vec<RoundRecord> {
    (0..9)
        .map(|r| RoundRecord {
            index: r as u32 + 1,
            results: std::array::from_fn(|k| SubtaskResult {
                s: S[r][k],
                beta_ns: BETA_S[r][k].map(|b| b as u64 * 1_000_000_000),
                alpha: ALPHA,
            }),
        })
        .collect()
}

/// Components achieving exactly `s` points, in listed order.
fn components_for(subtask: u8, s: u8) -> Vec<&'static str> {
    let spec = subtask_spec(subtask).expect("valid subtask");
    let mut left = s;
    let mut out = Vec::new();
    for c in spec.components {
        if c.points <= left {
            out.push(c.label);
            left -= c.points;
        }
    }
    assert_eq!(
        left, 0,
        "no component subset of subtask {subtask} sums to {s}"
    );
    out
}

/// A session log whose replay reproduces the record: rounds back to back,
/// every timed subtask completed exactly β after it started, the untimed one
/// aborted after its components were marked.
pub fn session_log() -> SessionLog {
    const SEC: u64 = 1_000_000_000;
    let mut t = 0u64;
    let mut events = Vec::new();
    let mut push = |t: u64, event: Event| events.push(LogEntry { t_ns: t, event });
    for r in 0..9 {
        push(t, Event::RoundStart);
        for k in 0..3 {
            let id = k as u8 + 1;
            push(
                t,
                Event::SubtaskStart {
                    subtask: id,
                    alpha: ALPHA,
                },
            );
            let labels = components_for(id, S[r][k]);
            match BETA_S[r][k] {
                Some(beta) => {
                    let end = t + beta as u64 * SEC;
                    for label in labels {
                        push(
                            end,
                            Event::ComponentAchieved {
                                label: label.to_string(),
                            },
                        );
                    }
                    push(end, Event::SubtaskComplete);
                    t = end;
                }
                None => {
                    for label in labels {
                        push(
                            t,
                            Event::ComponentAchieved {
                                label: label.to_string(),
                            },
                        );
                    }
                    push(t, Event::SubtaskAbort);
                }
            }
        }
        push(t, Event::RoundFinish);
    }
    SessionLog {
        session_start_ns: 0,
        events,
    }
}
