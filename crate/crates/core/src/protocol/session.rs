//! Topic-addressed session over a [`transport`](super::transport).
//!
//! Each session runs three threads: a writer draining the outbox, a reader
//! decoding inbound frames into per-topic inboxes, and a heartbeat that also
//! declares the peer dead after [`SessionConfig::missed_heartbeats`] silent
//! intervals. Camera topics are bounded drop-oldest on both sides; every
//! other topic is unbounded and ordered.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io;
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::codec::{self, DecodeError, EncodeError};
use super::message::{Envelope, Message, SessionControl, Topic};
use super::stats::{LatencyStats, StatsError};
use super::transport::{self, FrameRx, FrameTx, TransportHalves};
use crate::clock;

pub const DEFAULT_FRAME_BUFFER: usize = 8;
pub const DEFAULT_HEARTBEAT_MS: u64 = 500;
pub const DEFAULT_TCP_PORT: u16 = 7450;
pub const DEFAULT_WS_PORT: u16 = 7451;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    /// Per camera topic capacity, applied to the outbox and the inbox.
    pub frame_buffer: usize,
    /// `None` disables heartbeats and liveness checks.
    pub heartbeat: Option<Duration>,
    pub missed_heartbeats: u32,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            frame_buffer: DEFAULT_FRAME_BUFFER,
            heartbeat: Some(Duration::from_millis(DEFAULT_HEARTBEAT_MS)),
            missed_heartbeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("session closed ({0})")]
    SessionClosed(CloseReason),
    #[error("not subscribed to {0}")]
    NotSubscribed(Topic),
    #[error("message belongs to topic {actual}, not {requested}")]
    TopicMismatch { requested: Topic, actual: Topic },
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    Local,
    PeerClosed,
    HeartbeatTimeout,
    Io(String),
}

impl CloseReason {
    fn from_io(e: &io::Error) -> CloseReason {
        match e.kind() {
            io::ErrorKind::UnexpectedEof
            | io::ErrorKind::BrokenPipe
            | io::ErrorKind::ConnectionReset
            | io::ErrorKind::ConnectionAborted => CloseReason::PeerClosed,
            _ => CloseReason::Io(e.to_string()),
        }
    }
}

impl std::fmt::Display for CloseReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CloseReason::Local => f.write_str("closed locally"),
            CloseReason::PeerClosed => f.write_str("peer closed"),
            CloseReason::HeartbeatTimeout => f.write_str("heartbeat timeout"),
            CloseReason::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// Per-topic counters, snapshot semantics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TopicCounters {
    pub sent: u64,
    /// Frames evicted from the outbox before reaching the wire.
    pub send_dropped: u64,
    pub received: u64,
    /// Sequence gaps plus inbox evictions.
    pub dropped: u64,
    pub out_of_order: u64,
    pub last_seq: Option<u32>,
}

struct State {
    closed: Option<CloseReason>,
    outbox: VecDeque<(Topic, Vec<u8>)>,
    writing: bool,
    next_seq: BTreeMap<Topic, u32>,
    counters: BTreeMap<Topic, TopicCounters>,
    inbox: BTreeMap<Topic, VecDeque<Envelope>>,
    subscribed: BTreeSet<Topic>,
    peer_subscribed: BTreeSet<Topic>,
    latency: BTreeMap<Topic, Vec<u64>>,
    last_rx: Instant,
    decode_errors: u64,
}

struct Shared {
    config: SessionConfig,
    state: Mutex<State>,
    /// Wakes the writer.
    out_cv: Condvar,
    /// Wakes pollers, flushers and the heartbeat.
    in_cv: Condvar,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn close(&self, reason: CloseReason) {
        let mut st = self.lock();
        if st.closed.is_none() {
            st.closed = Some(reason);
        }
        drop(st);
        self.out_cv.notify_all();
        self.in_cv.notify_all();
    }
}

/// Closes the session when the last user handle is dropped.
struct Guard(Arc<Shared>);

impl Drop for Guard {
    fn drop(&mut self) {
        self.0.close(CloseReason::Local);
    }
}

/// One endpoint of a protocol session. Cloning yields another handle to the
/// same endpoint.
#[derive(Clone)]
pub struct Session {
    shared: Arc<Shared>,
    _guard: Arc<Guard>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("closed", &self.close_reason())
            .finish()
    }
}

impl Session {
    pub fn new(halves: TransportHalves, config: SessionConfig) -> Session {
        Session::with_subscriptions(halves, config, &[])
    }

    /// Like [`Session::new`], with `topics` subscribed before any message is read.
    pub fn with_subscriptions(
        (tx, rx): TransportHalves,
        config: SessionConfig,
        topics: &[Topic],
    ) -> Session {
        let shared = Arc::new(Shared {
            config,
            state: Mutex::new(State {
                closed: None,
                outbox: VecDeque::new(),
                writing: false,
                next_seq: BTreeMap::new(),
                counters: BTreeMap::new(),
                inbox: BTreeMap::new(),
                subscribed: topics.iter().copied().collect(),
                peer_subscribed: BTreeSet::new(),
                latency: BTreeMap::new(),
                last_rx: Instant::now(),
                decode_errors: 0,
            }),
            out_cv: Condvar::new(),
            in_cv: Condvar::new(),
        });
        spawn("wbtp-writer", shared.clone(), move |s| writer_loop(s, tx));
        spawn("wbtp-reader", shared.clone(), move |s| reader_loop(s, rx));
        if let Some(period) = config.heartbeat {
            spawn("wbtp-heartbeat", shared.clone(), move |s| {
                heartbeat_loop(s, period)
            });
        }
        let session = Session {
            _guard: Arc::new(Guard(shared.clone())),
            shared,
        };
        for &t in topics {
            let _ = session.send(Message::Control(SessionControl::Subscribe(t)));
        }
        session
    }

    /// Two in-process sessions wired to each other.
    pub fn loopback_pair(config: SessionConfig) -> (Session, Session) {
        let (a, b) = transport::memory_pair();
        (Session::new(a, config), Session::new(b, config))
    }

    pub fn from_tcp(stream: TcpStream, config: SessionConfig) -> io::Result<Session> {
        Ok(Session::new(transport::tcp(stream)?, config))
    }

    pub fn connect_tcp(addr: impl ToSocketAddrs, config: SessionConfig) -> io::Result<Session> {
        Session::from_tcp(TcpStream::connect(addr)?, config)
    }

    pub fn connect_websocket(url: &str, config: SessionConfig) -> io::Result<Session> {
        Ok(Session::new(transport::websocket_connect(url)?, config))
    }

    pub fn config(&self) -> SessionConfig {
        self.shared.config
    }

    /// Queue `message` on `topic`; returns the assigned sequence number.
    pub fn publish(&self, topic: Topic, message: Message) -> Result<u32, SessionError> {
        publish_on(&self.shared, topic, message)
    }

    /// [`publish`](Self::publish) addressed by topic name.
    pub fn publish_named(&self, topic: &str, message: Message) -> Result<u32, SessionError> {
        let t = topic
            .parse()
            .map_err(|_| SessionError::UnknownTopic(topic.to_string()))?;
        self.publish(t, message)
    }

    /// Publish on the message's own topic.
    pub fn send(&self, message: Message) -> Result<u32, SessionError> {
        self.publish(message.topic(), message)
    }

    /// Start accepting `topic` locally and tell the peer.
    pub fn subscribe(&self, topic: Topic) -> Result<(), SessionError> {
        self.shared.lock().subscribed.insert(topic);
        self.send(Message::Control(SessionControl::Subscribe(topic)))
            .map(|_| ())
    }

    pub fn subscribe_all(&self, topics: &[Topic]) -> Result<(), SessionError> {
        topics.iter().try_for_each(|&t| self.subscribe(t))
    }

    pub fn unsubscribe(&self, topic: Topic) -> Result<(), SessionError> {
        {
            let mut st = self.shared.lock();
            st.subscribed.remove(&topic);
            st.inbox.remove(&topic);
        }
        self.send(Message::Control(SessionControl::Unsubscribe(topic)))
            .map(|_| ())
    }

    pub fn is_subscribed(&self, topic: Topic) -> bool {
        self.shared.lock().subscribed.contains(&topic)
    }

    /// Whether the peer has asked for `topic`.
    pub fn peer_subscribed(&self, topic: Topic) -> bool {
        self.shared.lock().peer_subscribed.contains(&topic)
    }

    /// Drain everything queued on `topic`, oldest first. After the session
    /// closes, messages that already arrived are still returned; once they
    /// are gone the call fails with `SessionClosed`.
    pub fn poll(&self, topic: Topic) -> Result<Vec<Envelope>, SessionError> {
        let mut st = self.shared.lock();
        if !st.subscribed.contains(&topic) {
            return Err(SessionError::NotSubscribed(topic));
        }
        let msgs: Vec<Envelope> = st
            .inbox
            .get_mut(&topic)
            .map(|q| q.drain(..).collect())
            .unwrap_or_default();
        match (&st.closed, msgs.is_empty()) {
            (Some(r), true) => Err(SessionError::SessionClosed(r.clone())),
            _ => Ok(msgs),
        }
    }

    /// Block until one message on `topic` is available or `timeout` passes.
    pub fn recv(&self, topic: Topic, timeout: Duration) -> Result<Option<Envelope>, SessionError> {
        let deadline = Instant::now() + timeout;
        let mut st = self.shared.lock();
        loop {
            if !st.subscribed.contains(&topic) {
                return Err(SessionError::NotSubscribed(topic));
            }
            if let Some(env) = st.inbox.get_mut(&topic).and_then(|q| q.pop_front()) {
                return Ok(Some(env));
            }
            if let Some(r) = &st.closed {
                return Err(SessionError::SessionClosed(r.clone()));
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok(None);
            }
            st = self
                .shared
                .in_cv
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// Wait until the outbox has been written to the transport.
    pub fn flush(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut st = self.shared.lock();
        while !st.outbox.is_empty() || st.writing {
            if st.closed.is_some() {
                return false;
            }
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            st = self
                .shared
                .in_cv
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
        true
    }

    /// Block until `pred` holds on the counters of `topic`.
    pub fn wait_counters(
        &self,
        topic: Topic,
        timeout: Duration,
        pred: impl Fn(&TopicCounters) -> bool,
    ) -> bool {
        let deadline = Instant::now() + timeout;
        let mut st = self.shared.lock();
        loop {
            if pred(&st.counters.get(&topic).copied().unwrap_or_default()) {
                return true;
            }
            let now = Instant::now();
            if now >= deadline || st.closed.is_some() {
                return false;
            }
            st = self
                .shared
                .in_cv
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    pub fn counters(&self, topic: Topic) -> TopicCounters {
        self.shared
            .lock()
            .counters
            .get(&topic)
            .copied()
            .unwrap_or_default()
    }

    /// Latency percentiles for `topic`. Samples are half the round trip
    /// measured from the echo a joint-state message carries of this
    /// endpoint's own command timestamp, so both ends of each sample come
    /// from the local monotonic clock.
    pub fn latency_stats(&self, topic: Topic) -> Result<LatencyStats, SessionError> {
        let st = self.shared.lock();
        let c = st.counters.get(&topic).copied().unwrap_or_default();
        let samples = st.latency.get(&topic).map(Vec::as_slice).unwrap_or(&[]);
        Ok(LatencyStats::from_samples(
            samples,
            c.out_of_order,
            c.dropped,
        )?)
    }

    pub fn decode_errors(&self) -> u64 {
        self.shared.lock().decode_errors
    }

    pub fn is_closed(&self) -> bool {
        self.shared.lock().closed.is_some()
    }

    pub fn close_reason(&self) -> Option<CloseReason> {
        self.shared.lock().closed.clone()
    }

    /// Flush pending output (bounded wait) and close.
    pub fn close(&self) {
        self.flush(Duration::from_secs(1));
        self.shared.close(CloseReason::Local);
    }
}

fn spawn(name: &str, shared: Arc<Shared>, f: impl FnOnce(Arc<Shared>) + Send + 'static) {
    thread::Builder::new()
        .name(name.to_string())
        .spawn(move || f(shared))
        .expect("spawn session thread");
}

fn publish_on(shared: &Shared, topic: Topic, message: Message) -> Result<u32, SessionError> {
    let actual = message.topic();
    if actual != topic {
        return Err(SessionError::TopicMismatch {
            requested: topic,
            actual,
        });
    }
    let mut st = shared.lock();
    if let Some(r) = &st.closed {
        return Err(SessionError::SessionClosed(r.clone()));
    }
    let seq = *st.next_seq.get(&topic).unwrap_or(&0);
    let bytes = codec::encode(&Envelope::new(seq, clock::monotonic_ns(), message))?;
    st.next_seq.insert(topic, seq.wrapping_add(1));
    push_outbox(&mut st, topic, bytes, shared.config.frame_buffer);
    drop(st);
    shared.out_cv.notify_one();
    Ok(seq)
}

fn push_outbox(st: &mut State, topic: Topic, bytes: Vec<u8>, cap: usize) {
    if topic.is_lossy() {
        let queued = st.outbox.iter().filter(|(t, _)| *t == topic).count();
        if queued >= cap.max(1) {
            let oldest = st
                .outbox
                .iter()
                .position(|(t, _)| *t == topic)
                .expect("queued > 0");
            st.outbox.remove(oldest);
            st.counters.entry(topic).or_default().send_dropped += 1;
        }
    }
    st.outbox.push_back((topic, bytes));
}

fn writer_loop(shared: Arc<Shared>, mut tx: Box<dyn FrameTx>) {
    loop {
        let mut st = shared.lock();
        let (topic, bytes) = loop {
            if st.closed.is_some() {
                drop(st);
                tx.shutdown();
                return;
            }
            if let Some(item) = st.outbox.pop_front() {
                break item;
            }
            st = shared.out_cv.wait(st).unwrap_or_else(|e| e.into_inner());
        };
        st.writing = true;
        drop(st);
        let res = tx.send_frame(&bytes);
        let mut st = shared.lock();
        st.writing = false;
        if res.is_ok() {
            st.counters.entry(topic).or_default().sent += 1;
        }
        drop(st);
        shared.in_cv.notify_all();
        if let Err(e) = res {
            shared.close(CloseReason::from_io(&e));
        }
    }
}

fn reader_loop(shared: Arc<Shared>, mut rx: Box<dyn FrameRx>) {
    let mut buf: Vec<u8> = Vec::new();
    loop {
        if shared.lock().closed.is_some() {
            return;
        }
        match rx.recv_chunk(Duration::from_millis(20)) {
            Ok(None) => continue,
            Ok(Some(chunk)) => {
                shared.lock().last_rx = Instant::now();
                buf.extend_from_slice(&chunk);
                drain_frames(&shared, &mut buf);
            }
            Err(e) => {
                shared.close(CloseReason::from_io(&e));
                return;
            }
        }
    }
}

/// Decode every complete frame at the front of `buf`, resynchronising past
/// garbage.
fn drain_frames(shared: &Shared, buf: &mut Vec<u8>) {
    let mut pos = 0;
    let mut delivered = false;
    while pos < buf.len() {
        match codec::decode(&buf[pos..]) {
            Ok((env, used)) => {
                pos += used;
                deliver(shared, env);
                delivered = true;
            }
            Err(DecodeError::TruncatedFrame { .. }) => break,
            Err(e) => {
                shared.lock().decode_errors += 1;
                pos += match e {
                    // Header parsed: skip the whole declared frame.
                    DecodeError::LengthMismatch { .. } | DecodeError::Malformed(_) => {
                        codec::frame_len(&buf[pos..]).unwrap_or(1)
                    }
                    _ => 1,
                };
                // Skip to the next plausible magic.
                let rest = &buf[pos..];
                pos += rest
                    .windows(4)
                    .position(|w| w == codec::MAGIC)
                    .unwrap_or(rest.len().saturating_sub(3));
            }
        }
    }
    buf.drain(..pos);
    if delivered {
        shared.in_cv.notify_all();
    }
}

fn deliver(shared: &Shared, env: Envelope) {
    let topic = env.message.topic();
    let now = clock::monotonic_ns();
    let mut st = shared.lock();
    let st = &mut *st;
    let c = st.counters.entry(topic).or_default();
    let expected = c.last_seq.map_or(0, |s| s.wrapping_add(1));
    if c.last_seq.is_some_and(|last| env.seq <= last) {
        c.out_of_order += 1;
        return;
    }
    c.dropped += u64::from(env.seq - expected);
    c.last_seq = Some(env.seq);
    c.received += 1;

    match &env.message {
        Message::Control(SessionControl::Subscribe(t)) => {
            st.peer_subscribed.insert(*t);
        }
        Message::Control(SessionControl::Unsubscribe(t)) => {
            st.peer_subscribed.remove(t);
        }
        Message::JointState(js) if js.echo_send_time_ns != 0 && js.echo_send_time_ns <= now => {
            st.latency
                .entry(topic)
                .or_default()
                .push((now - js.echo_send_time_ns) / 2);
        }
        _ => {}
    }

    if !st.subscribed.contains(&topic) {
        return;
    }
    let q = st.inbox.entry(topic).or_default();
    q.push_back(env);
    if topic.is_lossy() && q.len() > shared.config.frame_buffer.max(1) {
        q.pop_front();
        st.counters.entry(topic).or_default().dropped += 1;
    }
}

fn heartbeat_loop(shared: Arc<Shared>, period: Duration) {
    let dead_after = period * shared.config.missed_heartbeats.max(1);
    loop {
        {
            let st = shared.lock();
            let st = shared
                .in_cv
                .wait_timeout_while(st, period, |s| s.closed.is_none())
                .unwrap_or_else(|e| e.into_inner())
                .0;
            if st.closed.is_some() {
                return;
            }
            if st.last_rx.elapsed() > dead_after {
                drop(st);
                shared.close(CloseReason::HeartbeatTimeout);
                return;
            }
        }
        let _ = publish_on(
            &shared,
            Topic::Control,
            Message::Control(SessionControl::Heartbeat),
        );
    }
}
