//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbcd_core::config::CameraId;
use wbcd_core::kinematics::{forward_kinematics, ArmConfig, ArmJoints, Jacobian, JointState, Pose};
use wbcd_core::pipeline::{Action, Episode, EpisodeMeta};
use wbcd_core::protocol::{
    Codec, CommandRetarget, Envelope, EventKind, EventStatus, FramePacket, JointStateMsg, Message,
    SessionControl, SessionEvent, Topic,
};
use wbcd_core::scoring::Alpha;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform joint vector at least `margin` inside every limit.
pub fn random_joints(arm: &ArmConfig, rng: &mut impl Rng, margin: f64) -> ArmJoints {
    std::array::from_fn(|i| {
        let (lo, hi) = arm.joint_limits[i];
        rng.random_range(lo + margin..hi - margin)
    })
}

/// Central-difference Jacobian of forward kinematics.
///
/// Linear rows differentiate the position; angular rows use the rotation
/// vector of `R(q+h) R(q-h)⁻¹ / 2h`.
pub fn finite_difference_jacobian(arm: &ArmConfig, q: &ArmJoints, h: f64) -> Jacobian {
    let mut jac = Jacobian::zeros();
    for i in 0..7 {
        let mut plus = *q;
        let mut minus = *q;
        plus[i] += h;
        minus[i] -= h;
        let a = forward_kinematics(arm, &plus).unwrap();
        let b = forward_kinematics(arm, &minus).unwrap();
        let dp = (a.translation() - b.translation()) / (2.0 * h);
        let dr = (a.rotation() * b.rotation().inverse()).scaled_axis() / (2.0 * h);
        for r in 0..3 {
            jac[(r, i)] = dp[r];
            jac[(r + 3, i)] = dr[r];
        }
    }
    jac
}

/// Max over columns of ‖analytic − numeric‖ / ‖numeric‖.
pub fn max_column_relative_error(analytic: &Jacobian, numeric: &Jacobian) -> f64 {
    (0..7)
        .map(|c| {
            let diff = (analytic.column(c) - numeric.column(c)).norm();
            diff / numeric.column(c).norm().max(1e-12)
        })
        .fold(0.0, f64::max)
}

/// A reachable target within 5 cm and 10° of the pose at `q0`: the forward
/// kinematics of a nearby joint vector.
pub fn near_target(arm: &ArmConfig, q0: &ArmJoints, rng: &mut impl Rng) -> Pose {
    let start = forward_kinematics(arm, q0).unwrap();
    loop {
        let q: ArmJoints = std::array::from_fn(|i| {
            let (lo, hi) = arm.joint_limits[i];
            (q0[i] + rng.random_range(-0.1..0.1)).clamp(lo, hi)
        });
        let target = forward_kinematics(arm, &q).unwrap();
        if target.distance(&start) <= 0.05 && target.angle_to(&start) <= 10f64.to_radians() {
            return target;
        }
    }
}

pub fn random_unit_quaternion(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    UnitQuaternion::from_scaled_axis(axis.normalize() * angle)
}

pub fn random_pose(rng: &mut impl Rng) -> Pose {
    let q = random_unit_quaternion(rng);
    Pose::new(
        [
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ],
        [q.w, q.i, q.j, q.k],
    )
}

fn random_topic(rng: &mut impl Rng) -> Topic {
    Topic::ALL[rng.random_range(0..Topic::ALL.len())]
}

/// A random valid message of any type. Frames carry 4..=`max_frame` bytes.
pub fn random_message(rng: &mut impl Rng, max_frame: usize) -> Message {
    match rng.random_range(0..5) {
        0 => Message::Command(CommandRetarget {
            left: random_pose(rng),
            right: random_pose(rng),
            gripper_pressed: [rng.random(), rng.random()],
            clutch: rng.random(),
        }),
        1 => {
            let v: [f64; JointState::LEN] = std::array::from_fn(|_| rng.random_range(-4.0..4.0));
            Message::JointState(JointStateMsg {
                tick: rng.random(),
                sim_time_ns: rng.random(),
                echo_send_time_ns: rng.random(),
                joints: JointState::from_array(&v),
            })
        }
        2 => {
            let n = rng.random_range(4..=max_frame.max(4));
            let mut payload: Vec<u8> = (0..n).map(|_| rng.random()).collect();
            payload[..2].copy_from_slice(&[0xFF, 0xD8]);
            payload[n - 2..].copy_from_slice(&[0xFF, 0xD9]);
            Message::Frame(FramePacket {
                camera: CameraId::ALL[rng.random_range(0..3)],
                seq: rng.random(),
                capture_time_ns: rng.random(),
                codec: Codec::Jfif,
                width: rng.random_range(1..=u16::MAX),
                height: rng.random_range(1..=u16::MAX),
                payload,
            })
        }
        3 => Message::Control(match rng.random_range(0..3) {
            0 => SessionControl::Subscribe(random_topic(rng)),
            1 => SessionControl::Unsubscribe(random_topic(rng)),
            _ => SessionControl::Heartbeat,
        }),
        _ => {
            let label_len = rng.random_range(0..40);
            Message::Event(SessionEvent {
                kind: EventKind::from_u8(rng.random_range(1..=6)).unwrap(),
                status: EventStatus::from_u8(rng.random_range(0..=2)).unwrap(),
                subtask: rng.random_range(0..=3),
                alpha_code: rng.random_range(0..=3),
                points: rng.random_range(0..=5),
                time_ns: rng.random(),
                beta_ns: rng.random(),
                score: rng.random_range(0.0..10.0),
                label: (0..label_len)
                    .map(|_| rng.random_range('a'..='z'))
                    .collect(),
            })
        }
    }
}

pub fn random_envelope(rng: &mut impl Rng, max_frame: usize) -> Envelope {
    Envelope {
        flags: rng.random(),
        seq: rng.random(),
        send_time_ns: rng.random(),
        message: random_message(rng, max_frame),
    }
}

/// Random payload framed as JFIF (`FF D8 … FF D9`).
pub fn random_jfif(rng: &mut impl Rng, max_len: usize) -> Vec<u8> {
    let n = rng.random_range(4..=max_len.max(4));
    let mut p: Vec<u8> = (0..n).map(|_| rng.random()).collect();
    p[..2].copy_from_slice(&[0xFF, 0xD8]);
    p[n - 2..].copy_from_slice(&[0xFF, 0xD9]);
    p
}

/// Any 64-bit pattern, NaNs and infinities included.
fn any_f64(rng: &mut impl Rng) -> f64 {
    f64::from_bits(rng.random())
}

/// Episode whose numeric series are arbitrary bit patterns.
pub fn fuzzed_episode(rng: &mut impl Rng, max_steps: usize) -> Episode {
    let t = rng.random_range(1..=max_steps);
    let mut meta = EpisodeMeta::new(
        (0..rng.random_range(0..12))
            .map(|_| rng.random_range('a'..='z'))
            .collect::<String>(),
        Alpha::ALL[rng.random_range(0..3)],
        rng.random_range(1..100_000_000),
        format!("{:016x}", rng.random::<u64>()),
    );
    meta.seed = rng.random();
    let mut ep = Episode::empty(meta);
    let mut ts: u64 = rng.random_range(0..1 << 40);
    let cams: [bool; 3] = std::array::from_fn(|_| rng.random_bool(0.7));
    for _ in 0..t {
        let v: [f64; JointState::LEN] = std::array::from_fn(|_| any_f64(rng));
        ep.joints.push(JointState::from_array(&v));
        ep.ee_left.push(Pose::new(
            std::array::from_fn(|_| any_f64(rng)),
            std::array::from_fn(|_| any_f64(rng)),
        ));
        ep.ee_right.push(Pose::new(
            std::array::from_fn(|_| any_f64(rng)),
            std::array::from_fn(|_| any_f64(rng)),
        ));
        ep.actions.push(std::array::from_fn(|_| any_f64(rng)));
        ep.timestamps_ns.push(ts);
        ts += rng.random_range(1..1_000_000_000);
        for (c, slot) in ep.frames.iter_mut().enumerate() {
            if cams[c] {
                slot.push(random_jfif(rng, 300));
            }
        }
    }
    ep.meta.frame_counts = ep.stored_frame_counts();
    ep
}

/// Bit-level equality of every series plus byte equality of frames and meta.
pub fn assert_bit_identical(a: &Episode, b: &Episode) {
    let bits = |e: &Episode| -> Vec<u64> {
        let mut v = Vec::new();
        for i in 0..e.len() {
            v.extend(e.joints[i].to_array().map(f64::to_bits));
            for p in [&e.ee_left[i], &e.ee_right[i]] {
                v.extend(p.position.map(f64::to_bits));
                v.extend(p.orientation.map(f64::to_bits));
            }
            v.extend(e.actions[i].map(f64::to_bits));
            v.push(e.timestamps_ns[i]);
        }
        v
    };
    assert_eq!(a.meta, b.meta);
    assert_eq!(a.len(), b.len());
    assert!(bits(a) == bits(b), "numeric series differ");
    assert!(a.frames == b.frames, "frame payloads differ");
}

/// Unit vector, uniform on the sphere.
fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Episode with `k` sub-threshold displacements followed by `moving` steps
/// whose larger arm displacement is at least 1.2 τ, so onset is `k + 1`.
pub fn static_prefix_episode(rng: &mut impl Rng, k: usize, moving: usize, tau: f64) -> Episode {
    let mut ep = Episode::empty(EpisodeMeta::new(
        "synthetic",
        Alpha::InPerson,
        20_000_000,
        "synthetic",
    ));
    let base = [[0.3, 0.25, 0.9], [0.3, -0.25, 0.9]];
    // Per-axis jitter bound keeps any static displacement below 0.7 τ.
    let jitter = tau / 5.0;
    let mut pos = base;
    for i in 0..=k + moving {
        if i <= k {
            pos = base.map(|p| p.map(|x| x + rng.random_range(-jitter..jitter)));
        } else {
            let mover = rng.random_range(0..2);
            for (arm, p) in pos.iter_mut().enumerate() {
                let step = if arm == mover {
                    rng.random_range(1.2 * tau..6.0 * tau)
                } else {
                    rng.random_range(0.0..3.0 * tau)
                };
                let d = random_direction(rng);
                for a in 0..3 {
                    p[a] += step * d[a];
                }
            }
        }
        let mut j = JointState::default();
        j.left[0] = i as f64;
        ep.joints.push(j);
        ep.ee_left.push(Pose::from_position(pos[0]));
        ep.ee_right.push(Pose::from_position(pos[1]));
        ep.actions.push([i as f64 * 1e-3; 16]);
        ep.timestamps_ns.push(i as u64 * 20_000_000);
        ep.frames[0].push(vec![
            0xFF,
            0xD8,
            (i % 251) as u8,
            (i / 251) as u8,
            0xFF,
            0xD9,
        ]);
    }
    ep.meta.frame_counts = ep.stored_frame_counts();
    ep
}

/// Episode of `t` random actions with joints derived from them.
pub fn random_action_episode(rng: &mut impl Rng, t: usize, offset: f64) -> Episode {
    let mut ep = Episode::empty(EpisodeMeta::new("n", Alpha::Remote, 1, "h"));
    for i in 0..t {
        let a: Action =
            std::array::from_fn(|k| offset + k as f64 * 0.1 + rng.random_range(-1.0..1.0));
        ep.actions.push(a);
        ep.joints
            .push(JointState::from_action(&a.map(|x| x * 0.5 - 0.2), [0.0; 2]));
        ep.ee_left.push(Pose::identity());
        ep.ee_right.push(Pose::identity());
        ep.timestamps_ns.push(i as u64);
    }
    ep
}
