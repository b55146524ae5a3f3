use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;
use wbcd_core::pipeline::{
    emit_trim_plot, export_manifest, make_chunks, read_episode, trim_episode, write_episode,
    ArchiveError, ManifestError, TrainingDefaults, TrimConfig, TrimError, DEFAULT_CHUNK,
};
use wbcd_core::protocol::{Session, SessionConfig};
use wbcd_core::replay::{replay_episode, ReplayError};
use wbcd_core::scoring::{replay, table1, Alpha, BetaPolicy, Scorecard, SessionLog};
use wbcd_core::teleop::{
    drive, run_loopback, DriveConfig, EndReason, Listeners, RecordSpec, ServerConfig, TeleopError,
    TeleopServer, TickMode,
};

use crate::args::{
    DriveArgs, Mode, Pacing, PrepArgs, RecordArgs, ReplayArgs, ScoreCommand, ServeArgs, TrimArgs,
};
use crate::output::Outcome;
use crate::run_config::{require_exists, RunConfig};
use crate::Failure;

/// Sum of s/β over the timed cells of the results table, from `scripts/table1_oracle.py`.
pub const TABLE1_ORACLE_TOTAL: f64 = 3.227676653059087;
pub const TABLE1_MEAN_ROUND_S: f64 = 192.0;
pub const TABLE1_MEAN_COMPLETE_ROUND_S: f64 = 204.25;

fn alpha(mode: Mode) -> Alpha {
    match mode {
        Mode::InPerson => Alpha::InPerson,
        Mode::Remote => Alpha::Remote,
        Mode::Autonomous => Alpha::Autonomous,
    }
}

fn teleop_failure(e: TeleopError) -> Failure {
    let kind = match &e {
        TeleopError::PortInUse(_) => "PortInUse",
        TeleopError::Io(_) => "Io",
        TeleopError::Session(_) => "Session",
        TeleopError::Sim(_) => "Simulator",
        TeleopError::Kinematics(_) => "Kinematics",
        TeleopError::Archive(_) => "Archive",
        TeleopError::Episode(_) => "Episode",
        TeleopError::Timeout(_) => "Timeout",
    };
    Failure::domain(kind, e.to_string())
}

fn archive_failure(path: &Path, e: ArchiveError) -> Failure {
    let kind = match &e {
        ArchiveError::Io(_) => "Io",
        ArchiveError::Invalid(_) => "InvalidEpisode",
        _ => "CorruptArchive",
    };
    Failure::domain(kind, format!("{}: {e}", path.display()))
}

fn session_config(heartbeat_ms: u64, frame_buffer: usize) -> SessionConfig {
    SessionConfig {
        frame_buffer,
        heartbeat: (heartbeat_ms > 0).then(|| Duration::from_millis(heartbeat_ms)),
        ..Default::default()
    }
}

fn check_parent(path: &Path, what: &str) -> Result<(), Failure> {
    if path.as_os_str().is_empty() {
        return Err(Failure::usage("Usage", format!("{what} path is empty")));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            require_exists(dir, &format!("{what} directory"))
        }
        _ => Ok(()),
    }
}

pub fn serve(cfg: &RunConfig, a: &ServeArgs) -> Result<Outcome, Failure> {
    let session_cfg = session_config(
        cfg.heartbeat_ms(a.heartbeat_ms),
        cfg.frame_buffer(a.frame_buffer)?,
    );
    let record = match &a.record {
        Some(path) => {
            check_parent(path, "record")?;
            Some(RecordSpec {
                path: path.clone(),
                task: a.task.clone(),
                operator_mode: alpha(a.mode),
                with_frames: !a.no_frames,
            })
        }
        None => None,
    };
    if let Some(p) = &a.score_log {
        check_parent(p, "score log")?;
    }
    let server_cfg = ServerConfig {
        seed: cfg.seed,
        mode: match cfg.pacing(a.pacing)? {
            Pacing::Lockstep => TickMode::Lockstep,
            Pacing::Realtime => TickMode::Realtime,
        },
        frame_every: cfg.frame_every(a.frame_every),
        record,
        max_ticks: a.max_ticks,
        ..Default::default()
    };
    let listeners =
        Listeners::bind(cfg.listen(a.listen), cfg.ws(a.ws, a.no_ws)).map_err(teleop_failure)?;
    let tcp = listeners
        .tcp_addr()
        .map_err(|e| Failure::domain("Io", e.to_string()))?;
    let ws = listeners.ws_addr();
    eprintln!(
        "listening tcp={tcp} ws={}",
        ws.map_or("off".to_string(), |w| w.to_string())
    );

    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    // Fails only if a handler is already installed, which never happens in this binary.
    let _ = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst));

    let mut server = TeleopServer::new(cfg.robot.clone(), server_cfg).map_err(teleop_failure)?;
    let mut sessions = Vec::new();
    while let Some(session) = listeners
        .accept(session_cfg, &stop)
        .map_err(teleop_failure)?
    {
        eprintln!("operator connected");
        let summary = server.serve(&session, &stop).map_err(teleop_failure)?;
        session.close();
        eprintln!(
            "operator session ended after {} ticks: {:?}",
            summary.ticks, summary.end
        );
        let end = summary.end.clone();
        sessions.push(summary);
        if a.once || matches!(end, EndReason::Stopped | EndReason::MaxTicks) {
            break;
        }
    }
    if let Some(p) = &a.score_log {
        let text = serde_json::to_vec_pretty(server.scoring().log()).expect("log serializes");
        fs::write(p, text).map_err(|e| Failure::domain("Io", format!("{}: {e}", p.display())))?;
    }
    let ticks = server.ticks();
    let final_joints = server.final_joints();
    let recorded = server.finish().map_err(teleop_failure)?;
    let archive = recorded.as_ref().and(a.record.as_ref());
    let mut text = format!("served {} session(s), {ticks} ticks\n", sessions.len());
    if let (Some(path), Some(ep)) = (archive, &recorded) {
        let _ = writeln!(text, "recorded {} steps to {}", ep.len(), path.display());
    }
    Ok(Outcome::new(
        json!({
            "tcp": tcp.to_string(),
            "ws": ws.map(|w| w.to_string()),
            "sessions": sessions,
            "ticks": ticks,
            "final_joints": final_joints,
            "archive": archive.map(|p| p.display().to_string()),
            "recorded_steps": recorded.as_ref().map(|e| e.len()),
        }),
        text,
    ))
}

fn drive_config(
    cfg: &RunConfig,
    steps: Option<usize>,
    side_m: Option<f64>,
    cameras: bool,
) -> Result<DriveConfig, Failure> {
    let d = DriveConfig::default();
    let c = DriveConfig {
        steps: steps.or(cfg.file.drive.steps).unwrap_or(d.steps),
        side_m: side_m.or(cfg.file.drive.side_m).unwrap_or(d.side_m),
        cameras,
        ..d
    };
    if c.steps == 0 {
        return Err(Failure::usage("Usage", "steps must be at least 1"));
    }
    if !(c.side_m.is_finite() && c.side_m >= 0.0) {
        return Err(Failure::usage(
            "Usage",
            "side must be a non-negative length",
        ));
    }
    Ok(c)
}

pub fn drive_cmd(cfg: &RunConfig, a: &DriveArgs) -> Result<Outcome, Failure> {
    let mut drive_cfg = drive_config(cfg, a.steps, a.side_m, !a.no_cameras)?;
    drive_cfg.reply_timeout = Duration::from_millis(a.reply_timeout_ms);
    let session_cfg = session_config(cfg.heartbeat_ms(a.heartbeat_ms), cfg.frame_buffer(None)?);
    let (target, session) = match &a.ws_url {
        Some(url) => (url.clone(), Session::connect_websocket(url, session_cfg)),
        None => {
            let addr = cfg.connect(a.connect.clone());
            let s = Session::connect_tcp(addr.as_str(), session_cfg);
            (addr, s)
        }
    };
    let session =
        session.map_err(|e| Failure::domain("ConnectFailed", format!("{target}: {e}")))?;
    let report = drive(&session, &drive_cfg);
    session.close();
    let report = report.map_err(teleop_failure)?;
    let mut text = format!(
        "{} commands, {} joint-state replies, frames head/left/right {:?}\n",
        report.commands, report.replies, report.frames_received
    );
    if let Some(l) = &report.latency {
        let _ = writeln!(
            text,
            "latency (RTT/2) p50 {:.3} ms, p99 {:.3} ms, max {:.3} ms",
            l.p50 as f64 / 1e6,
            l.p99 as f64 / 1e6,
            l.max as f64 / 1e6
        );
    }
    Ok(Outcome::new(json!(report), text))
}

pub fn record(cfg: &RunConfig, a: &RecordArgs) -> Result<Outcome, Failure> {
    check_parent(&a.out, "output")?;
    let drive_cfg = drive_config(cfg, a.steps, a.side_m, !a.no_frames)?;
    let server_cfg = ServerConfig {
        seed: cfg.seed,
        record: Some(RecordSpec {
            path: a.out.clone(),
            task: a.task.clone(),
            operator_mode: alpha(a.mode),
            with_frames: !a.no_frames,
        }),
        ..Default::default()
    };
    let quiet = SessionConfig {
        heartbeat: None,
        ..Default::default()
    };
    let run =
        run_loopback(cfg.robot.clone(), server_cfg, quiet, &drive_cfg).map_err(teleop_failure)?;
    let steps = run.episode.as_ref().map_or(0, |e| e.len());
    let bytes = fs::metadata(&a.out).map(|m| m.len()).unwrap_or(0);
    Ok(Outcome::new(
        json!({
            "archive": a.out.display().to_string(),
            "steps": steps,
            "bytes": bytes,
            "seed": cfg.seed,
            "robot_config_hash": cfg.robot.hash(),
            "dt_s": cfg.robot.dt_s,
        }),
        format!(
            "recorded {steps} steps ({bytes} bytes) to {}\n",
            a.out.display()
        ),
    ))
}

pub fn replay_cmd(cfg: &RunConfig, a: &ReplayArgs) -> Result<Outcome, Failure> {
    require_exists(&a.archive, "archive")?;
    let ep = read_episode(&a.archive).map_err(|e| archive_failure(&a.archive, e))?;
    let report = replay_episode(cfg.robot.clone(), &ep).map_err(|e| match e {
        ReplayError::ConfigHashMismatch { .. } => {
            Failure::domain("ConfigHashMismatch", e.to_string())
        }
        ReplayError::Episode(_) => Failure::domain("InvalidEpisode", e.to_string()),
        ReplayError::Sim(_) => Failure::domain("Simulator", e.to_string()),
    })?;
    let text = format!(
        "replayed {} steps, final state max deviation {:e} rad (tolerance {:e}), worst step {:e}\n",
        report.steps, report.final_max_abs_error, a.tolerance, report.max_abs_error
    );
    let mut out = Outcome::new(json!(report), text);
    if !(report.final_max_abs_error <= a.tolerance) {
        out.failed_check = Some(format!(
            "final state deviates by {:e}, above {:e}",
            report.final_max_abs_error, a.tolerance
        ));
    }
    Ok(out)
}

fn default_trimmed_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "episode".into());
    input.with_file_name(format!("{stem}.trimmed.wbep"))
}

pub fn trim(cfg: &RunConfig, a: &TrimArgs) -> Result<Outcome, Failure> {
    require_exists(&a.input, "input")?;
    let d = TrimConfig::default();
    let trim_cfg = TrimConfig {
        threshold_m: a.tau.or(cfg.file.trim.tau_m).unwrap_or(d.threshold_m),
        window: a.window.or(cfg.file.trim.window).unwrap_or(d.window),
        keep_prefix_frames: a
            .keep
            .or(cfg.file.trim.keep)
            .unwrap_or(d.keep_prefix_frames),
    };
    trim_cfg
        .validate()
        .map_err(|e| Failure::usage("BadConfig", e.to_string()))?;
    let out_path = a
        .out
        .clone()
        .unwrap_or_else(|| default_trimmed_path(&a.input));
    check_parent(&out_path, "output")?;
    let ep = read_episode(&a.input).map_err(|e| archive_failure(&a.input, e))?;
    let outcome = trim_episode(&ep, &trim_cfg).map_err(|e| match e {
        TrimError::TooShort(_) => Failure::domain("TooShort", e.to_string()),
        TrimError::InvalidConfig(_) => Failure::usage("BadConfig", e.to_string()),
    })?;
    write_episode(&out_path, &outcome.episode).map_err(|e| archive_failure(&out_path, e))?;
    let plot = match &a.plot {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::domain("Io", format!("{}: {e}", dir.display())))?;
            let stem = a
                .input
                .file_stem()
                .map(|s| s.to_os_string())
                .unwrap_or_else(|| "episode".into());
            let files = emit_trim_plot(&ep, &outcome.episode, dir.join(stem))
                .map_err(|e| Failure::domain("Io", e.to_string()))?;
            Some(files)
        }
        None => None,
    };
    let mut text = match outcome.onset {
        Some(t0) => format!(
            "onset at step {t0}, dropped {} of {} steps\n",
            outcome.dropped,
            ep.len()
        ),
        None => format!(
            "no motion reaches {} m; episode left unchanged\n",
            trim_cfg.threshold_m
        ),
    };
    let _ = writeln!(text, "wrote {}", out_path.display());
    if let Some(f) = &plot {
        let _ = writeln!(
            text,
            "plots {}, {}, {}",
            f.csv.display(),
            f.svg_left.display(),
            f.svg_right.display()
        );
    }
    Ok(Outcome::new(
        json!({
            "input": a.input.display().to_string(),
            "output": out_path.display().to_string(),
            "config": trim_cfg,
            "steps_before": ep.len(),
            "steps_after": outcome.episode.len(),
            "onset": outcome.onset,
            "dropped": outcome.dropped,
            "all_static": outcome.all_static,
            "plot": plot.map(|f| json!({
                "csv": f.csv.display().to_string(),
                "svg_left": f.svg_left.display().to_string(),
                "svg_right": f.svg_right.display().to_string(),
            })),
        }),
        text,
    ))
}

fn manifest_failure(e: ManifestError) -> Failure {
    let kind = match &e {
        ManifestError::EmptyDataset(_) => "EmptyDataset",
        ManifestError::ChecksumMismatch { .. } => "ChecksumMismatch",
        ManifestError::Archive { .. } => "CorruptArchive",
        ManifestError::StepMismatch { .. } => "StepMismatch",
        ManifestError::Io(_) => "Io",
        ManifestError::Format(_) | ManifestError::Schema(_) => "ManifestFormat",
    };
    Failure::domain(kind, e.to_string())
}

pub fn prep(cfg: &RunConfig, a: &PrepArgs) -> Result<Outcome, Failure> {
    require_exists(&a.dataset, "dataset")?;
    if !a.dataset.is_dir() {
        return Err(Failure::usage(
            "BadConfig",
            format!("{} is not a directory", a.dataset.display()),
        ));
    }
    let chunk = a.chunk.or(cfg.file.prep.chunk).unwrap_or(DEFAULT_CHUNK);
    if chunk == 0 {
        return Err(Failure::usage("Usage", "chunk must be at least 1"));
    }
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.dataset.join("manifest.json"));
    check_parent(&out, "manifest")?;
    let training = TrainingDefaults {
        chunk,
        ..Default::default()
    };
    let manifest = export_manifest(&a.dataset, training).map_err(manifest_failure)?;
    let mut samples = 0;
    let mut real_actions = 0;
    for entry in &manifest.episodes {
        let path = a.dataset.join(&entry.path);
        let ep = read_episode(&path).map_err(|e| archive_failure(&path, e))?;
        let chunks = make_chunks(&ep, chunk);
        samples += chunks.len();
        real_actions += chunks
            .iter()
            .flat_map(|c| &c.pad_mask)
            .filter(|&&m| m)
            .count();
    }
    manifest.write(&out).map_err(manifest_failure)?;
    manifest.validate(&a.dataset).map_err(manifest_failure)?;
    let text = format!(
        "{} episode(s), {samples} chunk samples of length {chunk} ({real_actions} real actions), expected {} demonstrations\nwrote {}\n",
        manifest.episodes.len(),
        manifest.expected_demonstrations,
        out.display()
    );
    Ok(Outcome::new(
        json!({
            "manifest": out.display().to_string(),
            "episodes": manifest.episodes.len(),
            "expected_demonstrations": manifest.expected_demonstrations,
            "chunk": chunk,
            "chunk_samples": samples,
            "real_actions": real_actions,
            "training": manifest.training,
        }),
        text,
    ))
}

fn seconds(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |s| s.to_string())
}

pub fn score(a: &ScoreCommand) -> Result<Outcome, Failure> {
    match a {
        ScoreCommand::Replay { log, assume_beta } => {
            require_exists(log, "log")?;
            let text = fs::read(log)
                .map_err(|e| Failure::domain("Io", format!("{}: {e}", log.display())))?;
            let parsed: SessionLog = serde_json::from_slice(&text)
                .map_err(|e| Failure::domain("BadLog", format!("{}: {e}", log.display())))?;
            let session = replay(&parsed).map_err(|(i, e)| {
                Failure::domain("IllegalTransition", format!("event {i}: {e}"))
            })?;
            let policy = match assume_beta {
                Some(s) if s.is_finite() && *s > 0.0 => BetaPolicy::AssumeSeconds(*s),
                Some(_) => {
                    return Err(Failure::usage(
                        "Usage",
                        "assumed β must be a positive number of seconds",
                    ))
                }
                None => BetaPolicy::Zero,
            };
            let card = Scorecard::build(session.rounds(), policy);
            Ok(Outcome::new(json!(card), card.render_text()))
        }
        ScoreCommand::Table1 { check, emit_log } => {
            let log = table1::session_log();
            if let Some(p) = emit_log {
                check_parent(p, "log")?;
                let text = serde_json::to_vec_pretty(&log).expect("log serializes");
                fs::write(p, text)
                    .map_err(|e| Failure::domain("Io", format!("{}: {e}", p.display())))?;
            }
            let session = replay(&log).map_err(|(i, e)| {
                Failure::domain("IllegalTransition", format!("event {i}: {e}"))
            })?;
            let card = Scorecard::build(session.rounds(), BetaPolicy::Zero);
            let mut text = card.render_text();
            let mut result = json!({ "scorecard": json!(card) });
            let mut failed = None;
            if *check {
                let rel = (card.total - TABLE1_ORACLE_TOTAL).abs() / TABLE1_ORACLE_TOTAL;
                let durations = card.mean_round_duration_s == Some(TABLE1_MEAN_ROUND_S)
                    && card.mean_complete_round_duration_s == Some(TABLE1_MEAN_COMPLETE_ROUND_S);
                let pass = rel < 1e-9 && durations;
                let _ = writeln!(
                    text,
                    "oracle total {TABLE1_ORACLE_TOTAL}, computed {}, relative error {rel:.2e}",
                    card.total
                );
                let _ = writeln!(
                    text,
                    "mean round duration {} s (oracle {TABLE1_MEAN_ROUND_S}), complete rounds {} s (oracle {TABLE1_MEAN_COMPLETE_ROUND_S})",
                    seconds(card.mean_round_duration_s),
                    seconds(card.mean_complete_round_duration_s)
                );
                let _ = writeln!(text, "{}", if pass { "PASS" } else { "FAIL" });
                result["check"] = json!({
                    "oracle_total": TABLE1_ORACLE_TOTAL,
                    "relative_error": rel,
                    "durations_match": durations,
                    "pass": pass,
                });
                if !pass {
                    failed = Some("scorecard does not match the oracle".into());
                }
            }
            let mut out = Outcome::new(result, text);
            out.failed_check = failed;
            Ok(out)
        }
    }
}
