//! Robot, camera and scene description loaded from `config/robot.toml`.
//!
//! The file layout is documented in `docs/arm-config.md`. Everything is parsed
//! into a plain serde mirror first ([`RawConfig`]) and then validated into the
//! typed [`RobotConfig`] used by the rest of the crate.

use std::fmt;
use std::path::Path;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kinematics::{ArmConfig, Pose, ARM_DOF};

const DEFAULT_CONFIG: &str = include_str!("../../../config/robot.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// The three onboard cameras: head-mounted, left wrist, right wrist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraId {
    Head = 0,
    WristLeft = 1,
    WristRight = 2,
}

impl CameraId {
    pub const ALL: [CameraId; 3] = [CameraId::Head, CameraId::WristLeft, CameraId::WristRight];

    pub fn from_u8(v: u8) -> Option<CameraId> {
        match v {
            0 => Some(CameraId::Head),
            1 => Some(CameraId::WristLeft),
            2 => Some(CameraId::WristRight),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CameraId::Head => "head",
            CameraId::WristLeft => "wrist_left",
            CameraId::WristRight => "wrist_right",
        }
    }

    pub fn from_name(name: &str) -> Option<CameraId> {
        CameraId::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for CameraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Serde mirror of the config file. Field names carry their units.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    pub dt_s: f64,
    pub gripper_slew_per_s: f64,
    pub left_arm: RawArm,
    pub right_arm: RawArm,
    pub head: RawHead,
    pub cameras: RawCameras,
    pub scene: RawScene,
    #[serde(default)]
    pub reference: Option<RawReference>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawArm {
    pub joint_axes: Vec<[f64; 3]>,
    pub joint_origins_xyz_m: Vec<[f64; 3]>,
    pub joint_origins_rpy_rad: Vec<[f64; 3]>,
    pub ee_offset_xyz_m: [f64; 3],
    pub ee_offset_rpy_rad: [f64; 3],
    pub joint_limits_rad: Vec<[f64; 2]>,
    pub max_joint_speed_rad_s: Vec<f64>,
    pub ready_rad: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHead {
    pub joint_limits_rad: [[f64; 2]; 2],
    pub max_joint_speed_rad_s: [f64; 2],
    pub ready_rad: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCameras {
    pub width_px: u16,
    pub height_px: u16,
    pub jpeg_quality: u8,
    pub frame_rate_hz: f64,
    pub focal_px: f64,
    pub head: RawCameraMount,
    pub wrist: RawCameraMount,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCameraMount {
    pub position_m: [f64; 3],
    pub look_at_m: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScene {
    pub background_rgb: [[u8; 3]; 3],
    pub table_z_m: f64,
    pub prop_region_x_m: [f64; 2],
    pub prop_region_y_m: [f64; 2],
    pub marker_radius_m: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawReference {
    pub home_left_position_m: [f64; 3],
    pub home_left_quat_wxyz: [f64; 4],
    pub home_right_position_m: [f64; 3],
    pub home_right_quat_wxyz: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadConfig {
    pub joint_limits: [(f64, f64); 2],
    pub max_joint_speed: [f64; 2],
    pub ready: [f64; 2],
}

/// Camera placement given as an eye point and a look-at point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraMount {
    pub position: Vector3<f64>,
    pub look_at: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraConfig {
    pub width: u16,
    pub height: u16,
    pub jpeg_quality: u8,
    pub frame_rate_hz: f64,
    pub focal_px: f64,
    pub head: CameraMount,
    pub wrist: CameraMount,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub background_rgb: [[u8; 3]; 3],
    pub table_z: f64,
    pub prop_region_x: (f64, f64),
    pub prop_region_y: (f64, f64),
    pub marker_radius: f64,
}

/// Reference end-effector poses at the all-zero joint vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferencePoses {
    pub home_left: Pose,
    pub home_right: Pose,
}

#[derive(Clone, Debug)]
pub struct RobotConfig {
    pub dt_s: f64,
    pub gripper_slew_per_s: f64,
    pub left_arm: ArmConfig,
    pub right_arm: ArmConfig,
    pub head: HeadConfig,
    pub cameras: CameraConfig,
    pub scene: SceneConfig,
    pub reference: Option<ReferencePoses>,
    raw: RawConfig,
}

fn isometry(xyz: [f64; 3], rpy: [f64; 3]) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(xyz[0], xyz[1], xyz[2]),
        UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    )
}

fn exactly<const N: usize, T: Copy>(v: &[T], what: &str) -> Result<[T; N], ConfigError> {
    v.try_into().map_err(|_| {
        ConfigError::Invalid(format!("{what}: expected {N} entries, found {}", v.len()))
    })
}

impl RawArm {
    fn build(&self, name: &str) -> Result<ArmConfig, ConfigError> {
        let axes: [[f64; 3]; ARM_DOF] = exactly(&self.joint_axes, &format!("{name}.joint_axes"))?;
        let xyz: [[f64; 3]; ARM_DOF] = exactly(
            &self.joint_origins_xyz_m,
            &format!("{name}.joint_origins_xyz_m"),
        )?;
        let rpy: [[f64; 3]; ARM_DOF] = exactly(
            &self.joint_origins_rpy_rad,
            &format!("{name}.joint_origins_rpy_rad"),
        )?;
        let limits: [[f64; 2]; ARM_DOF] =
            exactly(&self.joint_limits_rad, &format!("{name}.joint_limits_rad"))?;
        let speed: [f64; ARM_DOF] = exactly(
            &self.max_joint_speed_rad_s,
            &format!("{name}.max_joint_speed_rad_s"),
        )?;
        let ready: [f64; ARM_DOF] = exactly(&self.ready_rad, &format!("{name}.ready_rad"))?;

        let arm = ArmConfig {
            joint_axes: axes.map(|a| Vector3::new(a[0], a[1], a[2])),
            joint_origins: std::array::from_fn(|i| isometry(xyz[i], rpy[i])),
            ee_offset: isometry(self.ee_offset_xyz_m, self.ee_offset_rpy_rad),
            joint_limits: limits.map(|l| (l[0], l[1])),
            max_joint_speed: speed,
            ready,
        };
        arm.validate()
            .map_err(|e| ConfigError::Invalid(format!("{name}: {e}")))?;
        Ok(arm)
    }
}

impl RobotConfig {
    /// The configuration shipped in `config/robot.toml`.
    pub fn default_config() -> RobotConfig {
        RobotConfig::from_toml_str(DEFAULT_CONFIG).expect("bundled robot.toml is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RobotConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        RobotConfig::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<RobotConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        RobotConfig::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<RobotConfig, ConfigError> {
        if raw.schema_version != 1 {
            return Err(ConfigError::Invalid(format!(
                "unsupported schema_version {}",
                raw.schema_version
            )));
        }
        if !(raw.dt_s > 0.0 && raw.dt_s.is_finite()) {
            return Err(ConfigError::Invalid("dt_s must be > 0".into()));
        }
        if !(raw.gripper_slew_per_s > 0.0) {
            return Err(ConfigError::Invalid(
                "gripper_slew_per_s must be > 0".into(),
            ));
        }
        let left_arm = raw.left_arm.build("left_arm")?;
        let right_arm = raw.right_arm.build("right_arm")?;

        let h = &raw.head;
        for i in 0..2 {
            let [lo, hi] = h.joint_limits_rad[i];
            if !(lo < hi) || !(h.max_joint_speed_rad_s[i] > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "head joint {i}: bad limits or speed"
                )));
            }
            if h.ready_rad[i] < lo || h.ready_rad[i] > hi {
                return Err(ConfigError::Invalid(format!(
                    "head joint {i}: ready outside limits"
                )));
            }
        }
        let head = HeadConfig {
            joint_limits: h.joint_limits_rad.map(|l| (l[0], l[1])),
            max_joint_speed: h.max_joint_speed_rad_s,
            ready: h.ready_rad,
        };

        let c = &raw.cameras;
        if c.width_px == 0 || c.height_px == 0 {
            return Err(ConfigError::Invalid(
                "camera resolution must be non-zero".into(),
            ));
        }
        if c.jpeg_quality == 0 || c.jpeg_quality > 100 {
            return Err(ConfigError::Invalid(
                "jpeg_quality must be in 1..=100".into(),
            ));
        }
        if !(c.focal_px > 0.0) || !(c.frame_rate_hz > 0.0) {
            return Err(ConfigError::Invalid(
                "focal_px and frame_rate_hz must be > 0".into(),
            ));
        }
        let mount = |m: &RawCameraMount| CameraMount {
            position: Vector3::from(m.position_m),
            look_at: Vector3::from(m.look_at_m),
        };
        let cameras = CameraConfig {
            width: c.width_px,
            height: c.height_px,
            jpeg_quality: c.jpeg_quality,
            frame_rate_hz: c.frame_rate_hz,
            focal_px: c.focal_px,
            head: mount(&c.head),
            wrist: mount(&c.wrist),
        };

        let s = &raw.scene;
        let scene = SceneConfig {
            background_rgb: s.background_rgb,
            table_z: s.table_z_m,
            prop_region_x: (s.prop_region_x_m[0], s.prop_region_x_m[1]),
            prop_region_y: (s.prop_region_y_m[0], s.prop_region_y_m[1]),
            marker_radius: s.marker_radius_m,
        };

        let reference = raw.reference.as_ref().map(|r| ReferencePoses {
            home_left: Pose::new(r.home_left_position_m, r.home_left_quat_wxyz),
            home_right: Pose::new(r.home_right_position_m, r.home_right_quat_wxyz),
        });

        Ok(RobotConfig {
            dt_s: raw.dt_s,
            gripper_slew_per_s: raw.gripper_slew_per_s,
            left_arm,
            right_arm,
            head,
            cameras,
            scene,
            reference,
            raw,
        })
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    /// Stable content hash (hex, 16 chars) of the parsed configuration.
    ///
    /// Comments and whitespace in the source file do not affect it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.raw).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..8])
    }

    pub fn arm(&self, side: crate::kinematics::Side) -> &ArmConfig {
        match side {
            crate::kinematics::Side::Left => &self.left_arm,
            crate::kinematics::Side::Right => &self.right_arm,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses() {
        let cfg = RobotConfig::default_config();
        assert_eq!(cfg.cameras.width, 320);
        assert_eq!(cfg.cameras.height, 240);
        assert_eq!(cfg.cameras.jpeg_quality, 80);
        assert_eq!(cfg.dt_s, 0.02);
        assert!(cfg.reference.is_some());
    }

    #[test]
    fn hash_ignores_comments() {
        let a = RobotConfig::default_config();
        let b = RobotConfig::from_toml_str(&format!("# extra comment\n{DEFAULT_CONFIG}\n# tail"))
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn hash_changes_with_geometry() {
        let a = RobotConfig::default_config();
        let text = DEFAULT_CONFIG.replacen("[0.0, 0.0, 0.20],", "[0.0, 0.0, 0.21],", 1);
        let b = RobotConfig::from_toml_str(&text).unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_wrong_joint_count() {
        let text = DEFAULT_CONFIG.replacen(
            "max_joint_speed_rad_s = [1.5, 1.5, 2.0, 2.0, 2.5, 2.5, 3.0]",
            "max_joint_speed_rad_s = [1.5, 1.5]",
            1,
        );
        assert!(matches!(
            RobotConfig::from_toml_str(&text),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn rejects_inverted_limits() {
        let text = DEFAULT_CONFIG.replacen("[-3.2, 3.2]", "[3.2, -3.2]", 1);
        assert!(RobotConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn camera_names_round_trip() {
        for cam in CameraId::ALL {
            assert_eq!(CameraId::from_name(cam.name()), Some(cam));
            assert_eq!(CameraId::from_u8(cam as u8), Some(cam));
        }
        assert_eq!(CameraId::from_u8(3), None);
    }
}
