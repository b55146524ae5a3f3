//! Synthetic camera imagery: flat background plus projected disc markers at
//! both end-effectors and at the table props, encoded as baseline JPEG.

use image::codecs::jpeg::JpegEncoder;
use image::ExtendedColorType;
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ee_poses, SimError, SimState};
use crate::config::{CameraId, CameraMount, RobotConfig};
use crate::protocol::{Codec, FramePacket};

pub const LEFT_EE_RGB: [u8; 3] = [220, 30, 30];
pub const RIGHT_EE_RGB: [u8; 3] = [30, 200, 60];

/// Output resolution and JPEG quality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameSpec {
    pub width: u16,
    pub height: u16,
    pub quality: u8,
}

impl FrameSpec {
    pub fn from_config(robot: &RobotConfig) -> FrameSpec {
        FrameSpec {
            width: robot.cameras.width,
            height: robot.cameras.height,
            quality: robot.cameras.jpeg_quality,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop {
    pub name: &'static str,
    pub position: [f64; 3],
    pub radius_m: f64,
    pub rgb: [u8; 3],
}

/// Table props placed from the simulation seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub props: Vec<Prop>,
}

impl Scene {
    pub fn generate(robot: &RobotConfig, seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &robot.scene;
        let mut place = |name, radius_m, rgb| {
            let x = rng.random_range(s.prop_region_x.0..=s.prop_region_x.1);
            let y = rng.random_range(s.prop_region_y.0..=s.prop_region_y.1);
            Prop {
                name,
                position: [x, y, s.table_z],
                radius_m,
                rgb,
            }
        };
        let props = vec![
            place("plate", 0.07, [235, 235, 225]),
            place("container", 0.08, [40, 90, 220]),
            place("pizza", 0.05, [240, 160, 40]),
        ];
        Scene { props }
    }
}

pub fn parse_camera(name: &str) -> Result<CameraId, SimError> {
    CameraId::from_name(name)
        .or_else(|| name.parse::<u8>().ok().and_then(CameraId::from_u8))
        .ok_or_else(|| SimError::UnknownCamera(name.to_string()))
}

/// Pinhole camera: world→camera rotation (rows are camera x-right, y-down,
/// z-forward axes) plus centre.
struct PinholeView {
    rotation: Matrix3<f64>,
    center: Vector3<f64>,
    focal: f64,
    cx: f64,
    cy: f64,
}

impl PinholeView {
    fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up_hint: Vector3<f64>) -> Matrix3<f64> {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(&up_hint);
        if right.norm() < 1e-9 {
            right = forward.cross(&Vector3::x());
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()])
    }

    /// Image coordinates and depth, or `None` behind the camera.
    fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.rotation * (p - self.center);
        if c.z <= 0.02 {
            return None;
        }
        Some((
            self.cx + self.focal * c.x / c.z,
            self.cy + self.focal * c.y / c.z,
            c.z,
        ))
    }
}

fn camera_view(
    robot: &RobotConfig,
    state: &SimState,
    camera: CameraId,
    spec: &FrameSpec,
) -> PinholeView {
    let focal = robot.cameras.focal_px * spec.width as f64 / robot.cameras.width as f64;
    let (cx, cy) = (spec.width as f64 / 2.0, spec.height as f64 / 2.0);
    let (eye, target, up) = match camera {
        CameraId::Head => {
            let CameraMount { position, look_at } = robot.cameras.head;
            // Neck yaw about world z, then pitch about the camera's horizontal
            // axis; positive pitch looks up.
            let dir = look_at - position;
            let yawed = Rotation3::from_axis_angle(&Vector3::z_axis(), state.joints.head[0]) * dir;
            let right = yawed.cross(&Vector3::z());
            let pitched = if right.norm() > 1e-9 {
                Rotation3::from_axis_angle(&Unit::new_normalize(right), -state.joints.head[1])
                    * yawed
            } else {
                yawed
            };
            (position, position + pitched, Vector3::z())
        }
        CameraId::WristLeft | CameraId::WristRight => {
            let ee = ee_poses(robot, &state.joints)[camera.index() - 1].to_isometry();
            let mount = robot.cameras.wrist;
            let eye = ee * nalgebra::Point3::from(mount.position);
            let target = ee * nalgebra::Point3::from(mount.look_at);
            (eye.coords, target.coords, ee.rotation * -Vector3::x())
        }
    };
    PinholeView {
        rotation: PinholeView::look_at(eye, target, up),
        center: eye,
        focal,
        cx,
        cy,
    }
}

/// Marker centre in pixel coordinates for a world point, if visible.
pub fn project_point(
    robot: &RobotConfig,
    state: &SimState,
    camera: CameraId,
    spec: &FrameSpec,
    point: [f64; 3],
) -> Option<(f64, f64)> {
    let view = camera_view(robot, state, camera, spec);
    view.project(&Vector3::from(point)).map(|(u, v, _)| (u, v))
}

fn fill_disc(buf: &mut [u8], w: usize, h: usize, u: f64, v: f64, r: f64, rgb: [u8; 3]) {
    let x0 = ((u - r).floor().max(0.0)) as usize;
    let y0 = ((v - r).floor().max(0.0)) as usize;
    let x1 = ((u + r).ceil().min(w as f64 - 1.0)).max(-1.0);
    let y1 = ((v + r).ceil().min(h as f64 - 1.0)).max(-1.0);
    if x1 < 0.0 || y1 < 0.0 {
        return;
    }
    let r2 = r * r;
    for y in y0..=(y1 as usize) {
        for x in x0..=(x1 as usize) {
            let dx = x as f64 + 0.5 - u;
            let dy = y as f64 + 0.5 - v;
            if dx * dx + dy * dy <= r2 {
                let o = (y * w + x) * 3;
                buf[o..o + 3].copy_from_slice(&rgb);
            }
        }
    }
}

/// Raw RGB8 image of the synthetic scene (row-major, no padding).
pub fn render_rgb(
    robot: &RobotConfig,
    scene: &Scene,
    state: &SimState,
    camera: CameraId,
    spec: &FrameSpec,
) -> Vec<u8> {
    let (w, h) = (spec.width as usize, spec.height as usize);
    let bg = robot.scene.background_rgb[camera.index()];
    let mut buf: Vec<u8> = bg.iter().copied().cycle().take(w * h * 3).collect();

    let view = camera_view(robot, state, camera, spec);
    let [ee_l, ee_r] = ee_poses(robot, &state.joints);
    let mut markers: Vec<([f64; 3], f64, [u8; 3])> = scene
        .props
        .iter()
        .map(|p| (p.position, p.radius_m, p.rgb))
        .collect();
    // A wrist camera does not draw its own gripper.
    if camera != CameraId::WristLeft {
        markers.push((ee_l.position, robot.scene.marker_radius, LEFT_EE_RGB));
    }
    if camera != CameraId::WristRight {
        markers.push((ee_r.position, robot.scene.marker_radius, RIGHT_EE_RGB));
    }

    let mut visible: Vec<(f64, f64, f64, f64, [u8; 3])> = markers
        .into_iter()
        .filter_map(|(p, radius, rgb)| {
            view.project(&Vector3::from(p))
                .map(|(u, v, z)| (z, u, v, (view.focal * radius / z).clamp(1.5, 80.0), rgb))
        })
        .collect();
    // Painter's order: far to near; ties broken by colour for determinism.
    visible.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.4.cmp(&b.4)));
    for (_, u, v, r, rgb) in visible {
        fill_disc(&mut buf, w, h, u, v, r, rgb);
    }
    buf
}

/// Render one camera to a baseline JFIF frame.
pub fn render_frame(
    robot: &RobotConfig,
    scene: &Scene,
    state: &SimState,
    camera: CameraId,
    spec: &FrameSpec,
) -> Result<FramePacket, SimError> {
    let rgb = render_rgb(robot, scene, state, camera, spec);
    let mut payload = Vec::with_capacity(16 * 1024);
    JpegEncoder::new_with_quality(&mut payload, spec.quality)
        .encode(
            &rgb,
            spec.width as u32,
            spec.height as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| SimError::Encode(e.to_string()))?;
    Ok(FramePacket {
        camera,
        seq: state.tick_index as u32,
        capture_time_ns: state.sim_time_ns,
        codec: Codec::Jfif,
        width: spec.width,
        height: spec.height,
        payload,
    })
}
