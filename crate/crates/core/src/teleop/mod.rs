//! Robot-side teleoperation server and a scripted operator client.

mod client;
mod server;

use std::io;
use std::sync::atomic::AtomicBool;
use std::thread;

use thiserror::Error;

pub use client::{
    drive, event, request_event, scripted_commands, square_offset, DriveConfig, DriveReport,
};
pub use server::{
    server_session, EndReason, Listeners, RecordSpec, ServeSummary, ServerConfig, TeleopServer,
    TickMode, SERVER_TOPICS,
};

use crate::config::RobotConfig;
use crate::kinematics::KinematicsError;
use crate::pipeline::{ArchiveError, Episode, EpisodeError};
use crate::protocol::{transport, Session, SessionConfig, SessionError};
use crate::simulator::SimError;

#[derive(Debug, Error)]
pub enum TeleopError {
    #[error("address {0} is already in use")]
    PortInUse(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("timed out waiting for {0}")]
    Timeout(&'static str),
}

#[derive(Debug)]
pub struct LoopbackRun {
    pub drive: DriveReport,
    pub serve: ServeSummary,
    pub episode: Option<Episode>,
}

/// Runs the scripted client against a server over an in-process session pair,
/// then finalises the server's recording.
pub fn run_loopback(
    robot: RobotConfig,
    server_cfg: ServerConfig,
    session_cfg: SessionConfig,
    drive_cfg: &DriveConfig,
) -> Result<LoopbackRun, TeleopError> {
    let mut server = TeleopServer::new(robot, server_cfg)?;
    let (a, b) = transport::memory_pair();
    let client_end = Session::new(a, session_cfg);
    let server_end = server_session(b, session_cfg);
    let handle = thread::spawn(move || {
        let stop = AtomicBool::new(false);
        let summary = server.serve(&server_end, &stop);
        (server, summary)
    });
    let report = drive(&client_end, drive_cfg);
    client_end.close();
    let (server, summary) = handle.join().expect("server thread panicked");
    let report = report?;
    let summary = summary?;
    let episode = server.finish()?;
    Ok(LoopbackRun {
        drive: report,
        serve: summary,
        episode,
    })
}
