//! The run configuration: an optional TOML file, then `WBCD_*` variables and
//! flags on top.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use wbcd_core::protocol::{
    DEFAULT_FRAME_BUFFER, DEFAULT_HEARTBEAT_MS, DEFAULT_TCP_PORT, DEFAULT_WS_PORT,
};
use wbcd_core::RobotConfig;

use crate::args::{Cli, Pacing};
use crate::Failure;

pub const DT_RANGE_S: (f64, f64) = (0.001, 0.1);

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub robot: Option<PathBuf>,
    pub dt_s: Option<f64>,
    pub seed: Option<u64>,
    pub serve: ServeSection,
    pub drive: DriveSection,
    pub trim: TrimSection,
    pub prep: PrepSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServeSection {
    pub listen: Option<SocketAddr>,
    pub ws: Option<SocketAddr>,
    pub frame_buffer: Option<usize>,
    pub heartbeat_ms: Option<u64>,
    pub frame_every: Option<u64>,
    pub pacing: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub connect: Option<String>,
    pub steps: Option<usize>,
    pub side_m: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrimSection {
    pub tau_m: Option<f64>,
    pub window: Option<usize>,
    pub keep: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepSection {
    pub chunk: Option<usize>,
}

/// Global settings shared by every subcommand.
#[derive(Debug)]
pub struct RunConfig {
    pub file: FileConfig,
    pub robot: RobotConfig,
    pub seed: u64,
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::usage("BadConfig", msg)
}

pub fn require_exists(path: &Path, what: &str) -> Result<(), Failure> {
    if path.as_os_str().is_empty() {
        return Err(Failure::usage("Usage", format!("{what} path is empty")));
    }
    if !path.exists() {
        return Err(bad(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(cli: &Cli) -> Result<RunConfig, Failure> {
        let file = match &cli.config {
            Some(path) => {
                require_exists(path, "config file")?;
                let text = fs::read_to_string(path)
                    .map_err(|e| bad(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let robot_path = cli.robot.clone().or_else(|| file.robot.clone());
        let mut robot = match &robot_path {
            Some(p) => {
                require_exists(p, "robot config")?;
                RobotConfig::load(p).map_err(|e| bad(format!("{}: {e}", p.display())))?
            }
            None => RobotConfig::default_config(),
        };
        let dt_s = cli.dt.or(file.dt_s).unwrap_or(robot.dt_s);
        if !(DT_RANGE_S.0..=DT_RANGE_S.1).contains(&dt_s) {
            return Err(bad(format!(
                "dt {dt_s} s is outside [{}, {}]",
                DT_RANGE_S.0, DT_RANGE_S.1
            )));
        }
        if dt_s != robot.dt_s {
            let mut raw = robot.raw().clone();
            raw.dt_s = dt_s;
            robot = RobotConfig::from_raw(raw).map_err(|e| bad(e.to_string()))?;
        }
        let seed = cli.seed.or(file.seed).unwrap_or(0);
        Ok(RunConfig { file, robot, seed })
    }

    pub fn listen(&self, flag: Option<SocketAddr>) -> SocketAddr {
        flag.or(self.file.serve.listen)
            .unwrap_or_else(|| SocketAddr::from(([127, 0, 0, 1], DEFAULT_TCP_PORT)))
    }

    pub fn ws(&self, flag: Option<SocketAddr>, disabled: bool) -> Option<SocketAddr> {
        if disabled {
            return None;
        }
        Some(
            flag.or(self.file.serve.ws)
                .unwrap_or_else(|| SocketAddr::from(([127, 0, 0, 1], DEFAULT_WS_PORT))),
        )
    }

    pub fn frame_buffer(&self, flag: Option<usize>) -> Result<usize, Failure> {
        let n = flag
            .or(self.file.serve.frame_buffer)
            .unwrap_or(DEFAULT_FRAME_BUFFER);
        if n == 0 {
            return Err(bad("frame buffer must hold at least one frame"));
        }
        Ok(n)
    }

    pub fn heartbeat_ms(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.serve.heartbeat_ms)
            .unwrap_or(DEFAULT_HEARTBEAT_MS)
    }

    pub fn frame_every(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.serve.frame_every).unwrap_or(1)
    }

    pub fn pacing(&self, flag: Option<Pacing>) -> Result<Pacing, Failure> {
        if let Some(p) = flag {
            return Ok(p);
        }
        match self.file.serve.pacing.as_deref() {
            None | Some("lockstep") => Ok(Pacing::Lockstep),
            Some("realtime") => Ok(Pacing::Realtime),
            Some(other) => Err(bad(format!("unknown pacing {other:?}"))),
        }
    }

    pub fn connect(&self, flag: Option<String>) -> String {
        flag.or_else(|| self.file.drive.connect.clone())
            .unwrap_or_else(|| format!("127.0.0.1:{DEFAULT_TCP_PORT}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_sections_parse() {
        let f: FileConfig = toml::from_str(
            "seed = 4\ndt_s = 0.01\n[serve]\nlisten = \"0.0.0.0:9000\"\nframe_buffer = 3\n[trim]\ntau_m = 0.004\n",
        )
        .unwrap();
        assert_eq!(f.seed, Some(4));
        assert_eq!(f.serve.frame_buffer, Some(3));
        assert_eq!(f.trim.tau_m, Some(0.004));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
