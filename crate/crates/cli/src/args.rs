use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "wbcd",
    version,
    about = "Bimanual teleoperation, demonstration tooling and competition scoring"
)]
pub struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true, env = "WBCD_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Robot description; the built-in default when absent.
    #[arg(long, global = true, env = "WBCD_ROBOT", value_name = "FILE")]
    pub robot: Option<PathBuf>,

    /// Simulator timestep in seconds, 0.001 to 0.1.
    #[arg(long, global = true, env = "WBCD_DT", value_name = "SECONDS")]
    pub dt: Option<f64>,

    /// Seed for every random choice (scene layout).
    #[arg(long, global = true, env = "WBCD_SEED")]
    pub seed: Option<u64>,

    #[arg(long, global = true, env = "WBCD_OUTPUT", value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    /// One JSON document on stdout.
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the robot side: simulator, protocol server and optional recorder.
    Serve(ServeArgs),
    /// Connect as a scripted operator and trace a square with both hands.
    Drive(DriveArgs),
    /// Record a scripted session over an in-process link, no sockets involved.
    Record(RecordArgs),
    /// Drive the simulator open-loop from a recorded archive.
    Replay(ReplayArgs),
    /// Remove the static prefix of a recorded episode.
    Trim(TrimArgs),
    /// Build a dataset manifest with normalization statistics.
    Prep(PrepArgs),
    /// Competition scoring.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    InPerson,
    Remote,
    Autonomous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pacing {
    Lockstep,
    Realtime,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TCP listen address.
    #[arg(long, env = "WBCD_LISTEN")]
    pub listen: Option<SocketAddr>,
    /// WebSocket bridge address.
    #[arg(long, env = "WBCD_WS")]
    pub ws: Option<SocketAddr>,
    /// Disable the WebSocket bridge.
    #[arg(long, conflicts_with = "ws")]
    pub no_ws: bool,
    /// Per-camera frame buffer.
    #[arg(long, env = "WBCD_FRAME_BUFFER")]
    pub frame_buffer: Option<usize>,
    /// Heartbeat period; 0 disables liveness checks.
    #[arg(long, env = "WBCD_HEARTBEAT_MS")]
    pub heartbeat_ms: Option<u64>,
    /// Publish camera frames every N ticks; 0 disables video.
    #[arg(long)]
    pub frame_every: Option<u64>,
    #[arg(long, value_enum)]
    pub pacing: Option<Pacing>,
    /// Record the session to this archive.
    #[arg(long, value_name = "FILE")]
    pub record: Option<PathBuf>,
    #[arg(long, default_value = "teleop")]
    pub task: String,
    #[arg(long, value_enum, default_value_t = Mode::Remote)]
    pub mode: Mode,
    /// Record without camera frames.
    #[arg(long)]
    pub no_frames: bool,
    /// Write the scoring session log here on exit.
    #[arg(long, value_name = "FILE")]
    pub score_log: Option<PathBuf>,
    /// Exit after the first operator disconnects.
    #[arg(long)]
    pub once: bool,
    #[arg(long)]
    pub max_ticks: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DriveArgs {
    /// Robot TCP address.
    #[arg(long, env = "WBCD_CONNECT")]
    pub connect: Option<String>,
    /// Connect through the WebSocket bridge instead (ws://host:port/).
    #[arg(long, conflicts_with = "connect")]
    pub ws_url: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Square edge length in meters.
    #[arg(long)]
    pub side_m: Option<f64>,
    #[arg(long)]
    pub no_cameras: bool,
    #[arg(long, env = "WBCD_HEARTBEAT_MS")]
    pub heartbeat_ms: Option<u64>,
    #[arg(long, default_value_t = 5000)]
    pub reply_timeout_ms: u64,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    pub out: PathBuf,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub side_m: Option<f64>,
    #[arg(long, default_value = "square")]
    pub task: String,
    #[arg(long, value_enum, default_value_t = Mode::Remote)]
    pub mode: Mode,
    #[arg(long)]
    pub no_frames: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub archive: PathBuf,
    /// Allowed per-joint deviation of the final state.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct TrimArgs {
    pub input: PathBuf,
    /// Output archive; defaults to `<input stem>.trimmed.wbep` next to the input.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Motion threshold τ in meters per frame.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Minimum static frames before onset for a prefix to be removed.
    #[arg(long)]
    pub window: Option<usize>,
    /// Static frames kept before onset.
    #[arg(long)]
    pub keep: Option<usize>,
    /// Directory for the displacement CSV and SVG plots.
    #[arg(long, value_name = "DIR")]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    pub dataset: PathBuf,
    /// Action chunk length K.
    #[arg(long)]
    pub chunk: Option<usize>,
    /// Manifest path; defaults to `<dataset>/manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(subcommand)]
    pub command: ScoreCommand,
}

#[derive(Debug, Subcommand)]
pub enum ScoreCommand {
    /// Rebuild the scorecard from a session log.
    Replay {
        #[arg(long, value_name = "FILE")]
        log: PathBuf,
        /// Score untimed subtasks as if they took this many seconds instead of 0.
        #[arg(long, value_name = "SECONDS")]
        assume_beta: Option<f64>,
    },
    /// The reference competition results: nine rounds of three timed tasks.
    Table1 {
        /// Compare against the oracle total and round durations.
        #[arg(long)]
        check: bool,
        /// Also write the transcribed session log.
        #[arg(long, value_name = "FILE")]
        emit_log: Option<PathBuf>,
    },
}
