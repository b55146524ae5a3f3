mod common;

use image::RgbImage;
use proptest::prelude::*;
use rand::Rng;
use wbcd_core::config::CameraId;
use wbcd_core::kinematics::{
    forward_kinematics, ik_step, ArmJoints, JointState, Pose, RetargetParams,
};
use wbcd_core::simulator::{ee_poses, parse_camera, tick, SimError, SimState, Simulator};
use wbcd_core::RobotConfig;

const DT_NS: u64 = 20_000_000;

fn decode(payload: &[u8]) -> RgbImage {
    image::load_from_memory_with_format(payload, image::ImageFormat::Jpeg)
        .unwrap()
        .to_rgb8()
}

/// Centroid of strongly red pixels, the left end-effector marker colour.
fn red_centroid(img: &RgbImage) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (x, y, p) in img.enumerate_pixels() {
        let [r, g, b] = p.0;
        if r > 160 && g < 90 && b < 90 {
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            n += 1;
        }
    }
    (n >= 4).then(|| (sx / n as f64, sy / n as f64))
}

fn solve(robot: &RobotConfig, q0: ArmJoints, target: &Pose) -> ArmJoints {
    let params = RetargetParams::default();
    let mut q = q0;
    for _ in 0..300 {
        let dq = ik_step(&robot.left_arm, &q, target, &params).unwrap();
        for i in 0..7 {
            q[i] += dq[i];
        }
    }
    q
}

#[test]
fn marker_follows_end_effector_in_decoded_image() {
    let robot = RobotConfig::default_config();
    let mut sim = Simulator::new(robot.clone(), 0);
    let start = sim.state().joints;
    let before = forward_kinematics(&robot.left_arm, &start.left).unwrap();

    // 10 cm toward the robot's right (world −y), which the head camera sees
    // as image +u.
    let mut target = before;
    target.position[1] -= 0.10;
    let q = solve(&robot, start.left, &target);
    let after = forward_kinematics(&robot.left_arm, &q).unwrap();
    assert!(after.distance(&target) < 1e-4);

    let img0 = decode(&sim.render(CameraId::Head).unwrap().payload);
    sim.reset_joints(JointState { left: q, ..start });
    let img1 = decode(&sim.render(CameraId::Head).unwrap().payload);
    assert_eq!(img0.dimensions(), (320, 240));

    let (u0, v0) = red_centroid(&img0).expect("marker visible before");
    let (u1, v1) = red_centroid(&img1).expect("marker visible after");
    let du = u1 - u0;
    assert!(du > 5.0, "marker moved {du:.2} px horizontally");
    assert!(
        (v1 - v0).abs() < du,
        "motion is mostly horizontal: dv = {:.2}",
        v1 - v0
    );
}

#[test]
fn wrist_camera_omits_its_own_marker() {
    let sim = Simulator::new(RobotConfig::default_config(), 0);
    assert!(red_centroid(&decode(&sim.render(CameraId::WristLeft).unwrap().payload)).is_none());
    assert!(red_centroid(&decode(&sim.render(CameraId::Head).unwrap().payload)).is_some());
}

#[test]
fn rendered_frames_are_valid_jfif_for_every_camera() {
    let sim = Simulator::new(RobotConfig::default_config(), 3);
    let obs = sim.snapshot().unwrap();
    let ids: Vec<CameraId> = obs.frames.iter().map(|f| f.camera).collect();
    assert_eq!(
        ids,
        vec![CameraId::Head, CameraId::WristLeft, CameraId::WristRight]
    );
    for f in &obs.frames {
        assert!(f.is_well_formed());
        let img = decode(&f.payload);
        assert_eq!(img.dimensions(), (f.width as u32, f.height as u32));
        assert_eq!(f.capture_time_ns, obs.timestamp_ns);
    }
}

#[test]
fn unknown_camera_rejected() {
    assert!(matches!(
        parse_camera("belly"),
        Err(SimError::UnknownCamera(_))
    ));
}

#[test]
fn scripted_run_is_bit_identical() {
    let robot = RobotConfig::default_config();
    let run = || {
        let mut sim = Simulator::new(robot.clone(), 42);
        let mut rng = common::rng(9);
        let mut trace = Vec::new();
        for _ in 0..200 {
            let mut t = sim.state().joints;
            for j in 0..7 {
                t.left[j] += rng.random_range(-0.3..0.3);
                t.right[j] += rng.random_range(-0.3..0.3);
            }
            t.grippers = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            trace.push(*sim.step(&t));
        }
        (trace, sim.render(CameraId::Head).unwrap().payload)
    };
    let (a, fa) = run();
    let (b, fb) = run();
    assert_eq!(a, b);
    assert_eq!(fa, fb);
}

#[test]
fn clock_advances_by_constant_dt() {
    let mut sim = Simulator::new(RobotConfig::default_config(), 0);
    let mut prev = sim.state().sim_time_ns;
    for i in 1..=500u64 {
        let t = sim.state().joints;
        let s = sim.step(&t);
        assert_eq!(s.tick_index, i);
        assert_eq!(s.sim_time_ns, i * DT_NS);
        assert_eq!(s.sim_time_ns - prev, DT_NS);
        prev = s.sim_time_ns;
    }
}

#[test]
fn gripper_open_takes_thirteen_ticks() {
    let robot = RobotConfig::default_config();
    let mut s = SimState::initial(&robot, 0);
    s.joints.grippers = [0.0, 0.0];
    let mut target = s.joints;
    target.grippers = [1.0, 1.0];
    let mut n = 0;
    while s.joints.grippers[0] < 1.0 {
        s = tick(&robot, &s, &target, DT_NS);
        n += 1;
    }
    assert_eq!(n, 13);
    assert_eq!(s.joints.grippers, [1.0, 1.0]);
}

#[test]
fn snapshot_poses_equal_forward_kinematics() {
    let robot = RobotConfig::default_config();
    let mut sim = Simulator::new(robot.clone(), 0);
    let mut rng = common::rng(5);
    for _ in 0..20 {
        let t = JointState {
            left: common::random_joints(&robot.left_arm, &mut rng, 0.0),
            right: common::random_joints(&robot.right_arm, &mut rng, 0.0),
            ..sim.state().joints
        };
        sim.step(&t);
        let obs = sim.snapshot().unwrap();
        assert_eq!(
            obs.ee_left,
            forward_kinematics(&robot.left_arm, &obs.joints.left).unwrap()
        );
        assert_eq!(
            obs.ee_right,
            forward_kinematics(&robot.right_arm, &obs.joints.right).unwrap()
        );
        assert_eq!([obs.ee_left, obs.ee_right], ee_poses(&robot, &obs.joints));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joints_are_rate_limited(seed in any::<u64>()) {
        let robot = RobotConfig::default_config();
        let mut rng = common::rng(seed);
        let mut s = SimState::initial(&robot, seed);
        let dt = DT_NS as f64 / 1e9;
        for _ in 0..50 {
            let mut t = s.joints;
            for j in 0..7 {
                t.left[j] = rng.random_range(-5.0..5.0);
                t.right[j] = rng.random_range(-5.0..5.0);
            }
            t.grippers = [rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0)];
            t.head = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let next = tick(&robot, &s, &t, DT_NS);
            for j in 0..7 {
                prop_assert!((next.joints.left[j] - s.joints.left[j]).abs() <= robot.left_arm.max_joint_speed[j] * dt + 1e-12);
                prop_assert!((next.joints.right[j] - s.joints.right[j]).abs() <= robot.right_arm.max_joint_speed[j] * dt + 1e-12);
                let (lo, hi) = robot.left_arm.joint_limits[j];
                prop_assert!(next.joints.left[j] >= lo && next.joints.left[j] <= hi);
            }
            for g in 0..2 {
                prop_assert!((next.joints.grippers[g] - s.joints.grippers[g]).abs() <= robot.gripper_slew_per_s * dt + 1e-12);
                prop_assert!((0.0..=1.0).contains(&next.joints.grippers[g]));
                prop_assert!((next.joints.head[g] - s.joints.head[g]).abs() <= robot.head.max_joint_speed[g] * dt + 1e-12);
            }
            prop_assert_eq!(next.tick_index, s.tick_index + 1);
            s = next;
        }
    }

    #[test]
    fn non_finite_targets_hold_position(j in 0usize..7) {
        let robot = RobotConfig::default_config();
        let s = SimState::initial(&robot, 0);
        let mut t = s.joints;
        t.left[j] = f64::NAN;
        t.right[j] = f64::INFINITY;
        let next = tick(&robot, &s, &t, DT_NS);
        prop_assert_eq!(next.joints, s.joints);
    }
}
