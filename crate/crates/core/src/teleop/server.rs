use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::TeleopError;
use crate::config::{CameraId, RobotConfig};
use crate::kinematics::{JointState, RetargetParams, Retargeter};
use crate::pipeline::{Episode, EpisodeMeta, Recorder};
use crate::protocol::transport::TransportHalves;
use crate::protocol::{
    transport, CloseReason, CommandRetarget, EventKind, EventStatus, JointStateMsg, Message,
    Session, SessionConfig, SessionError, SessionEvent, Topic,
};
use crate::scoring::{Alpha, Clock, Event, MonotonicClock, ScoringSession};
use crate::simulator::{ObservationBundle, Simulator};

/// How the simulator clock is driven.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TickMode {
    /// One tick per received command. Deterministic for a given command stream.
    Lockstep,
    /// One tick per `dt` of wall time using the latest command.
    Realtime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordSpec {
    pub path: PathBuf,
    pub task: String,
    pub operator_mode: Alpha,
    pub with_frames: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServerConfig {
    pub seed: u64,
    pub mode: TickMode,
    /// `clutch_engaged` is taken from each command.
    pub retarget: RetargetParams,
    /// Publish camera frames every this many ticks; 0 disables video.
    pub frame_every: u64,
    pub record: Option<RecordSpec>,
    pub max_ticks: Option<u64>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            seed: 0,
            mode: TickMode::Lockstep,
            retarget: RetargetParams::default(),
            frame_every: 1,
            record: None,
            max_ticks: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum EndReason {
    Stopped,
    PeerClosed(String),
    MaxTicks,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ServeSummary {
    pub ticks: u64,
    pub commands: u64,
    pub events_accepted: u64,
    pub events_rejected: u64,
    pub end: EndReason,
}

/// Topics the robot side listens on.
pub const SERVER_TOPICS: [Topic; 2] = [Topic::Command, Topic::Session];

/// A robot-side session that is listening before the peer's first message can arrive.
pub fn server_session(halves: TransportHalves, config: SessionConfig) -> Session {
    Session::with_subscriptions(halves, config, &SERVER_TOPICS)
}

/// Robot side of a teleoperation session: simulator, retargeting, optional
/// recorder and the live scoring session.
pub struct TeleopServer<C: Clock = MonotonicClock> {
    sim: Simulator,
    retargeter: Retargeter,
    config: ServerConfig,
    scoring: ScoringSession<C>,
    recorder: Option<Recorder>,
    current: ObservationBundle,
    ticks: u64,
}

impl TeleopServer<MonotonicClock> {
    pub fn new(robot: RobotConfig, config: ServerConfig) -> Result<Self, TeleopError> {
        TeleopServer::with_clock(robot, config, MonotonicClock)
    }
}

impl<C: Clock> TeleopServer<C> {
    pub fn with_clock(
        robot: RobotConfig,
        config: ServerConfig,
        clock: C,
    ) -> Result<Self, TeleopError> {
        config.retarget.validate()?;
        let recorder = config.record.as_ref().map(|spec| {
            let mut meta = EpisodeMeta::new(
                spec.task.clone(),
                spec.operator_mode,
                (robot.dt_s * 1e9).round() as u64,
                robot.hash(),
            );
            meta.seed = config.seed;
            Recorder::new(meta, spec.with_frames)
        });
        let sim = Simulator::new(robot, config.seed);
        let current = sim.snapshot()?;
        Ok(TeleopServer {
            sim,
            retargeter: Retargeter::new(),
            config,
            scoring: ScoringSession::new(clock),
            recorder,
            current,
            ticks: 0,
        })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn scoring(&self) -> &ScoringSession<C> {
        &self.scoring
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn recorded_steps(&self) -> usize {
        self.recorder.as_ref().map_or(0, Recorder::len)
    }

    /// Advances one tick toward the retargeted command, or holds position.
    pub fn tick(
        &mut self,
        command: Option<&CommandRetarget>,
    ) -> Result<&ObservationBundle, TeleopError> {
        let current = self.sim.state().joints;
        let target = match command {
            Some(cmd) => {
                let params = RetargetParams {
                    clutch_engaged: cmd.clutch,
                    ..self.config.retarget
                };
                self.retargeter
                    .update(self.sim.robot(), &current, &cmd.hand_input(), &params)?
                    .target
            }
            None => self.sim.state().targets,
        };
        if let Some(rec) = &mut self.recorder {
            rec.push(&self.current, target.to_action())?;
        }
        self.sim.step(&target);
        self.current = self.sim.snapshot()?;
        self.ticks += 1;
        Ok(&self.current)
    }

    fn joint_state_msg(&self, echo_send_time_ns: u64) -> JointStateMsg {
        let st = self.sim.state();
        JointStateMsg {
            tick: st.tick_index,
            sim_time_ns: st.sim_time_ns,
            echo_send_time_ns,
            joints: st.joints,
        }
    }

    fn publish_state(&self, session: &Session, echo: u64) -> Result<(), SessionError> {
        let every = self.config.frame_every;
        if every > 0 && self.ticks.is_multiple_of(every) {
            for (cam, frame) in CameraId::ALL.iter().zip(&self.current.frames) {
                let topic = Topic::Camera(*cam);
                if session.peer_subscribed(topic) {
                    session.publish(topic, Message::Frame(frame.clone()))?;
                }
            }
        }
        // The joint state closes the tick for the operator.
        if session.peer_subscribed(Topic::JointState) {
            session.publish(
                Topic::JointState,
                Message::JointState(self.joint_state_msg(echo)),
            )?;
        }
        Ok(())
    }

    /// Applies an operator request to the scoring session and builds the reply.
    pub fn handle_event(&mut self, req: &SessionEvent) -> SessionEvent {
        let mut reply = SessionEvent {
            status: EventStatus::Rejected,
            ..req.clone()
        };
        let event = match req.kind {
            EventKind::RoundStart => Ok(Event::RoundStart),
            EventKind::SubtaskStart => match req.alpha_code {
                0 => Ok(Event::SubtaskStart {
                    subtask: req.subtask,
                    alpha: Alpha::Remote,
                }),
                code => Alpha::from_wire_code(code)
                    .map(|alpha| Event::SubtaskStart {
                        subtask: req.subtask,
                        alpha,
                    })
                    .ok_or_else(|| format!("unknown alpha code {code}")),
            },
            EventKind::ComponentAchieved => Ok(Event::ComponentAchieved {
                label: req.label.clone(),
            }),
            EventKind::SubtaskComplete => Ok(Event::SubtaskComplete),
            EventKind::SubtaskAbort => Ok(Event::SubtaskAbort),
            EventKind::RoundFinish => Ok(Event::RoundFinish),
        };
        let result = event.and_then(|ev| self.scoring.apply(ev).map_err(|e| e.to_string()));
        match result {
            Ok(ack) => {
                reply.status = EventStatus::Accepted;
                reply.subtask = ack.subtask;
                reply.alpha_code = ack.alpha.map_or(0, Alpha::wire_code);
                reply.points = ack.points;
                reply.beta_ns = ack.beta_ns.unwrap_or(0);
                reply.score = ack.score;
                reply.time_ns = self.scoring.log().events.last().map_or(0, |e| e.t_ns);
            }
            Err(reason) => reply.label = reason,
        }
        reply
    }

    fn answer_events(
        &mut self,
        session: &Session,
        summary: &mut ServeSummary,
    ) -> Result<(), SessionError> {
        for env in session.poll(Topic::Session)? {
            let Message::Event(req) = env.message else {
                continue;
            };
            if req.status != EventStatus::Request {
                continue;
            }
            let reply = self.handle_event(&req);
            if reply.status == EventStatus::Accepted {
                summary.events_accepted += 1;
            } else {
                summary.events_rejected += 1;
            }
            session.publish(Topic::Session, Message::Event(reply))?;
        }
        Ok(())
    }

    /// Serves one operator session until the peer leaves, `stop` is raised
    /// or `max_ticks` is reached.
    pub fn serve(
        &mut self,
        session: &Session,
        stop: &AtomicBool,
    ) -> Result<ServeSummary, TeleopError> {
        session.subscribe_all(&SERVER_TOPICS)?;
        let mut summary = ServeSummary {
            ticks: 0,
            commands: 0,
            events_accepted: 0,
            events_rejected: 0,
            end: EndReason::Stopped,
        };
        let dt = Duration::from_nanos(self.sim.dt_ns());
        let mut next_tick = Instant::now() + dt;
        let result = loop {
            if stop.load(Ordering::SeqCst) {
                break Ok(EndReason::Stopped);
            }
            if self.config.max_ticks.is_some_and(|m| self.ticks >= m) {
                break Ok(EndReason::MaxTicks);
            }
            if let Err(e) = self.answer_events(session, &mut summary) {
                break Err(e);
            }
            let step = match self.config.mode {
                TickMode::Lockstep => match session.recv(Topic::Command, Duration::from_millis(20))
                {
                    Ok(Some(env)) => match env.message {
                        Message::Command(cmd) => {
                            summary.commands += 1;
                            Ok(Some((Some(cmd), env.send_time_ns)))
                        }
                        _ => Ok(None),
                    },
                    Ok(None) => Ok(None),
                    Err(e) => Err(e),
                },
                TickMode::Realtime => {
                    let now = Instant::now();
                    if now < next_tick {
                        thread::sleep((next_tick - now).min(Duration::from_millis(5)));
                        Ok(None)
                    } else {
                        next_tick += dt;
                        session.poll(Topic::Command).map(|envs| {
                            summary.commands += envs.len() as u64;
                            let latest = envs.into_iter().rev().find_map(|env| match env.message {
                                Message::Command(cmd) => Some((cmd, env.send_time_ns)),
                                _ => None,
                            });
                            Some(match latest {
                                Some((cmd, t)) => (Some(cmd), t),
                                None => (None, 0),
                            })
                        })
                    }
                }
            };
            match step {
                Ok(Some((cmd, echo))) => {
                    self.tick(cmd.as_ref())?;
                    summary.ticks += 1;
                    if let Err(e) = self.publish_state(session, echo) {
                        break Err(e);
                    }
                }
                Ok(None) => {}
                Err(e) => break Err(e),
            }
        };
        summary.end = match result {
            Ok(end) => end,
            Err(SessionError::SessionClosed(reason)) => EndReason::PeerClosed(reason_text(&reason)),
            Err(e) => return Err(e.into()),
        };
        if matches!(summary.end, EndReason::PeerClosed(_)) {
            // Requests that arrived before the peer left still get applied.
            let _ = self.answer_events(session, &mut summary);
        }
        session.close();
        Ok(summary)
    }

    /// Writes the recording, if any. Nothing is written for zero steps.
    pub fn finish(self) -> Result<Option<Episode>, TeleopError> {
        match (self.recorder, self.config.record) {
            (Some(rec), Some(spec)) if !rec.is_empty() => Ok(Some(rec.finish(&spec.path)?)),
            _ => Ok(None),
        }
    }

    pub fn final_joints(&self) -> JointState {
        self.sim.state().joints
    }
}

fn reason_text(r: &CloseReason) -> String {
    r.to_string()
}

/// Listeners for the TCP port and the optional WebSocket bridge.
pub struct Listeners {
    pub tcp: TcpListener,
    pub ws: Option<TcpListener>,
}

fn bind(addr: SocketAddr) -> Result<TcpListener, TeleopError> {
    TcpListener::bind(addr).map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => TeleopError::PortInUse(addr.to_string()),
        _ => TeleopError::Io(e),
    })
}

impl Listeners {
    pub fn bind(tcp: SocketAddr, ws: Option<SocketAddr>) -> Result<Listeners, TeleopError> {
        let tcp = bind(tcp)?;
        let ws = ws.map(bind).transpose()?;
        tcp.set_nonblocking(true)?;
        if let Some(w) = &ws {
            w.set_nonblocking(true)?;
        }
        Ok(Listeners { tcp, ws })
    }

    pub fn tcp_addr(&self) -> std::io::Result<SocketAddr> {
        self.tcp.local_addr()
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.ws.as_ref().and_then(|w| w.local_addr().ok())
    }

    /// Waits for the next operator on either listener. `None` once `stop` is raised.
    pub fn accept(
        &self,
        config: SessionConfig,
        stop: &AtomicBool,
    ) -> Result<Option<Session>, TeleopError> {
        loop {
            if stop.load(Ordering::SeqCst) {
                return Ok(None);
            }
            match self.tcp.accept() {
                Ok((stream, _)) => {
                    stream.set_nonblocking(false)?;
                    return Ok(Some(server_session(transport::tcp(stream)?, config)));
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {}
                Err(e) => return Err(e.into()),
            }
            if let Some(ws) = &self.ws {
                match ws.accept() {
                    Ok((stream, _)) => {
                        stream.set_nonblocking(false)?;
                        match transport::websocket_accept(stream) {
                            Ok(halves) => return Ok(Some(server_session(halves, config))),
                            // A failed handshake only loses that client.
                            Err(_) => continue,
                        }
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {}
                    Err(e) => return Err(e.into()),
                }
            }
            thread::sleep(Duration::from_millis(10));
        }
    }
}
