use std::fmt::Write as _;

use serde::Serialize;

use super::rules::{round_score, subtask_score_with, Annotation, BetaPolicy, RoundRecord};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRow {
    pub index: u32,
    pub alpha: [f64; 3],
    pub beta_s: [Option<f64>; 3],
    pub s: [u8; 3],
    pub subtask_scores: [f64; 3],
    pub round_score: f64,
    pub duration_s: f64,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scorecard {
    pub policy: BetaPolicy,
    pub rounds: Vec<RoundRow>,
    pub total: f64,
    /// Mean of per-round durations (sum of timed β) over all rounds.
    pub mean_round_duration_s: Option<f64>,
    /// Same, over rounds whose three subtasks were all timed.
    pub mean_complete_round_duration_s: Option<f64>,
    pub annotations: Vec<Annotation>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Scorecard {
    pub fn build(rounds: &[RoundRecord], policy: BetaPolicy) -> Scorecard {
        let mut annotations = Vec::new();
        let rows: Vec<RoundRow> = rounds
            .iter()
            .map(|r| {
                let (score, notes) = round_score(r, policy);
                annotations.extend(notes);
                RoundRow {
                    index: r.index,
                    alpha: r.results.map(|x| x.alpha.value()),
                    beta_s: r.results.map(|x| x.beta_s()),
                    s: r.results.map(|x| x.s),
                    subtask_scores: r.results.map(|x| subtask_score_with(&x, policy).0),
                    round_score: score,
                    duration_s: r.duration_s(),
                    complete: r.is_complete(),
                }
            })
            .collect();
        Scorecard {
            policy,
            total: rows.iter().map(|r| r.round_score).fold(0.0, |a, b| a + b),
            mean_round_duration_s: mean(rows.iter().map(|r| r.duration_s)),
            mean_complete_round_duration_s: mean(
                rows.iter().filter(|r| r.complete).map(|r| r.duration_s),
            ),
            rounds: rows,
            annotations,
        }
    }

    /// Plain-text table with one α/β/s/score block per round.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:<7} {:>10} {:>10} {:>10}",
            "Round", "", "Task 1#", "Task 2#", "Task 3#"
        );
        for r in &self.rounds {
            let label = format!("Round {}#", r.index);
            let cells = |f: &dyn Fn(usize) -> String| (0..3).map(f).collect::<Vec<_>>();
            let row = |out: &mut String, head: &str, name: &str, c: Vec<String>| {
                let _ = writeln!(
                    out,
                    "{:<10} {:<7} {:>10} {:>10} {:>10}",
                    head, name, c[0], c[1], c[2]
                );
            };
            row(&mut out, "", "alpha", cells(&|k| format_alpha(r.alpha[k])));
            row(
                &mut out,
                &label,
                "beta",
                cells(&|k| r.beta_s[k].map_or("untimed".into(), format_beta)),
            );
            row(&mut out, "", "s", cells(&|k| r.s[k].to_string()));
            row(
                &mut out,
                "",
                "score",
                cells(&|k| format!("{:.4}", r.subtask_scores[k])),
            );
            let _ = writeln!(out, "{:<10} {:<7} {:>10.4}", "", "round", r.round_score);
        }
        let _ = writeln!(out, "Total score: {:.4}", self.total);
        match self.mean_round_duration_s {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "Mean round duration: {m:.4} s over {} rounds",
                    self.rounds.len()
                );
            }
            None => out.push_str("Mean round duration: n/a\n"),
        }
        if let Some(m) = self.mean_complete_round_duration_s {
            let n = self.rounds.iter().filter(|r| r.complete).count();
            let _ = writeln!(
                out,
                "Mean complete-round duration: {m:.4} s over {n} rounds"
            );
        }
        for a in &self.annotations {
            let _ = writeln!(
                out,
                "Note: round {} subtask {}: {}",
                a.round, a.subtask, a.note
            );
        }
        out
    }
}

fn format_alpha(a: f64) -> String {
    if a.fract() == 0.0 {
        format!("{}", a as i64)
    } else {
        format!("{a}")
    }
}

/// `m'ss''` with tenths of a second when not whole, e.g. `1'47''`, `0'13.5''`.
pub fn format_beta(seconds: f64) -> String {
    let tenths = (seconds * 10.0).round() as u64;
    let (m, rem) = (tenths / 600, tenths % 600);
    if rem % 10 == 0 {
        format!("{m}'{:02}''", rem / 10)
    } else {
        format!("{m}'{:02}.{}''", rem / 10, rem % 10)
    }
}
