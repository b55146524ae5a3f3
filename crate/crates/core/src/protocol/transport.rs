//! Byte transports underneath a [`Session`](super::Session).
//!
//! A transport is split into a sending half and a receiving half so the
//! session can drive them from separate threads. Receive halves return
//! `Ok(None)` on timeout so callers can re-check their own shutdown flag.

use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tungstenite::protocol::WebSocket;
use tungstenite::Message as WsMessage;

pub trait FrameTx: Send {
    /// Write one complete encoded frame.
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()>;
    fn shutdown(&mut self);
}

pub trait FrameRx: Send {
    /// Next chunk of bytes, `Ok(None)` on timeout, `Err` once the peer is gone.
    fn recv_chunk(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>>;
}

pub type TransportHalves = (Box<dyn FrameTx>, Box<dyn FrameRx>);

fn closed() -> io::Error {
    io::Error::new(io::ErrorKind::UnexpectedEof, "peer closed")
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
    )
}

// In-memory loopback.

struct MemTx(Option<mpsc::Sender<Vec<u8>>>);
struct MemRx(mpsc::Receiver<Vec<u8>>);

impl FrameTx for MemTx {
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        match &self.0 {
            Some(tx) => tx.send(frame.to_vec()).map_err(|_| closed()),
            None => Err(closed()),
        }
    }
    fn shutdown(&mut self) {
        self.0 = None;
    }
}

impl FrameRx for MemRx {
    fn recv_chunk(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        match self.0.recv_timeout(timeout) {
            Ok(b) => Ok(Some(b)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(closed()),
        }
    }
}

/// Two connected in-process endpoints.
pub fn memory_pair() -> (TransportHalves, TransportHalves) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (
        (Box::new(MemTx(Some(a_tx))), Box::new(MemRx(a_rx))),
        (Box::new(MemTx(Some(b_tx))), Box::new(MemRx(b_rx))),
    )
}

// TCP.

struct TcpTx(TcpStream);
struct TcpRx {
    stream: TcpStream,
    buf: Vec<u8>,
    timeout: Option<Duration>,
}

impl FrameTx for TcpTx {
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        self.0.write_all(frame)
    }
    fn shutdown(&mut self) {
        let _ = self.0.shutdown(Shutdown::Both);
    }
}

impl FrameRx for TcpRx {
    fn recv_chunk(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        let timeout = timeout.max(Duration::from_millis(1));
        if self.timeout != Some(timeout) {
            self.stream.set_read_timeout(Some(timeout))?;
            self.timeout = Some(timeout);
        }
        match self.stream.read(&mut self.buf) {
            Ok(0) => Err(closed()),
            Ok(n) => Ok(Some(self.buf[..n].to_vec())),
            Err(e) if is_timeout(&e) => Ok(None),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => Ok(None),
            Err(e) => Err(e),
        }
    }
}

pub fn tcp(stream: TcpStream) -> io::Result<TransportHalves> {
    stream.set_nodelay(true)?;
    let rx = stream.try_clone()?;
    Ok((
        Box::new(TcpTx(stream)),
        Box::new(TcpRx {
            stream: rx,
            buf: vec![0; 64 * 1024],
            timeout: None,
        }),
    ))
}

// WebSocket: one binary message per frame.

type SharedWs = Arc<Mutex<WebSocket<TcpStream>>>;

struct WsTx(SharedWs);
struct WsRx(SharedWs);

const WS_POLL: Duration = Duration::from_millis(5);

fn ws_err(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed => closed(),
        other => io::Error::other(other.to_string()),
    }
}

impl FrameTx for WsTx {
    fn send_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        let mut ws = self.0.lock().unwrap();
        ws.write(WsMessage::binary(frame.to_vec()))
            .map_err(ws_err)?;
        // A read timeout on the socket can interrupt a flush; retry until done.
        loop {
            match ws.flush() {
                Ok(()) => return Ok(()),
                Err(tungstenite::Error::Io(e)) if is_timeout(&e) => continue,
                Err(e) => return Err(ws_err(e)),
            }
        }
    }
    fn shutdown(&mut self) {
        if let Ok(mut ws) = self.0.lock() {
            let _ = ws.close(None);
            let _ = ws.flush();
            let _ = ws.get_ref().shutdown(Shutdown::Both);
        }
    }
}

impl FrameRx for WsRx {
    fn recv_chunk(&mut self, timeout: Duration) -> io::Result<Option<Vec<u8>>> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            let res = self.0.lock().unwrap().read();
            match res {
                Ok(WsMessage::Binary(b)) => return Ok(Some(b.to_vec())),
                Ok(WsMessage::Close(_)) => return Err(closed()),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if is_timeout(&e) => {
                    if std::time::Instant::now() >= deadline {
                        return Ok(None);
                    }
                    // Let a waiting writer take the lock.
                    std::thread::yield_now();
                }
                Err(e) => return Err(ws_err(e)),
            }
        }
    }
}

/// Wrap an established WebSocket (client or server side).
pub fn websocket(ws: WebSocket<TcpStream>) -> io::Result<TransportHalves> {
    ws.get_ref().set_read_timeout(Some(WS_POLL))?;
    ws.get_ref().set_nodelay(true)?;
    let shared = Arc::new(Mutex::new(ws));
    Ok((Box::new(WsTx(shared.clone())), Box::new(WsRx(shared))))
}

/// Server side of the WebSocket handshake on an accepted connection.
pub fn websocket_accept(stream: TcpStream) -> io::Result<TransportHalves> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    websocket(ws)
}

/// Client side of the WebSocket handshake, e.g. `ws://127.0.0.1:7451/`.
pub fn websocket_connect(url: &str) -> io::Result<TransportHalves> {
    let uri: tungstenite::http::Uri = url
        .parse()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, format!("{e}")))?;
    let host = uri
        .host()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "url has no host"))?;
    let port = uri.port_u16().unwrap_or(80);
    let stream = TcpStream::connect((host, port))?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let (ws, _) = tungstenite::client(url, stream).map_err(|e| io::Error::other(e.to_string()))?;
    websocket(ws)
}
