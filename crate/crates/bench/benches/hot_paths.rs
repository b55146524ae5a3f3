use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use wbcd_core::kinematics::{forward_kinematics, ik_step, jacobian, ArmJoints, Side};
use wbcd_core::pipeline::{
    decode_episode, encode_episode, make_chunks, trim_episode, Episode, DEFAULT_CHUNK,
};
use wbcd_core::protocol::{
    decode, encode, CommandRetarget, Envelope, JointStateMsg, Message, SessionConfig,
};
use wbcd_core::teleop::{run_loopback, DriveConfig, RecordSpec, ServerConfig};
use wbcd_core::{
    Alpha, CameraId, JointState, Pose, RetargetParams, RobotConfig, Simulator, TrimConfig,
};

const BENT: ArmJoints = [0.3, 0.5, -0.2, 1.1, 0.1, 0.6, -0.3];

fn kinematics(c: &mut Criterion) {
    let robot = RobotConfig::default_config();
    let arm = robot.arm(Side::Left).clone();
    let params = RetargetParams::default();
    let target = forward_kinematics(&arm, &[0.35, 0.45, -0.15, 1.2, 0.05, 0.55, -0.25]).unwrap();

    c.bench_function("forward_kinematics", |b| {
        b.iter(|| forward_kinematics(&arm, black_box(&BENT)).unwrap())
    });
    c.bench_function("jacobian", |b| {
        b.iter(|| jacobian(&arm, black_box(&BENT)).unwrap())
    });
    c.bench_function("ik_step", |b| {
        b.iter(|| ik_step(&arm, black_box(&BENT), &target, &params).unwrap())
    });
}

fn simulator(c: &mut Criterion) {
    let robot = RobotConfig::default_config();
    let mut sim = Simulator::new(robot, 0);
    let target = JointState {
        left: BENT,
        ..Default::default()
    };
    c.bench_function("sim_step", |b| {
        b.iter(|| sim.step(black_box(&target)).tick_index)
    });
    c.bench_function("render_head_frame", |b| {
        b.iter(|| sim.render(CameraId::Head).unwrap())
    });
}

fn codec(c: &mut Criterion) {
    let command = Envelope::new(
        7,
        1_000,
        Message::Command(CommandRetarget {
            left: Pose::identity(),
            right: Pose::identity(),
            gripper_pressed: [true, false],
            clutch: true,
        }),
    );
    let state = Envelope::new(
        7,
        1_000,
        Message::JointState(JointStateMsg {
            tick: 7,
            sim_time_ns: 140_000_000,
            echo_send_time_ns: 999,
            joints: JointState::default(),
        }),
    );
    let sim = Simulator::new(RobotConfig::default_config(), 0);
    let frame = Envelope::new(
        7,
        1_000,
        Message::Frame(sim.render(CameraId::Head).unwrap()),
    );

    for (name, env) in [
        ("command", &command),
        ("joint_state", &state),
        ("frame", &frame),
    ] {
        let bytes = encode(env).unwrap();
        c.bench_function(&format!("encode_{name}"), |b| {
            b.iter(|| encode(black_box(env)).unwrap())
        });
        c.bench_function(&format!("decode_{name}"), |b| {
            b.iter(|| decode(black_box(&bytes)).unwrap())
        });
    }
}

fn recorded_episode(steps: usize) -> Episode {
    let path = std::env::temp_dir().join(format!("wbcd-bench-{}.wbep", std::process::id()));
    let server = ServerConfig {
        record: Some(RecordSpec {
            path: path.clone(),
            task: "bench".into(),
            operator_mode: Alpha::Remote,
            with_frames: false,
        }),
        ..Default::default()
    };
    let session = SessionConfig {
        heartbeat: None,
        ..Default::default()
    };
    let drive = DriveConfig {
        steps,
        cameras: false,
        ..Default::default()
    };
    let run = run_loopback(RobotConfig::default_config(), server, session, &drive).unwrap();
    let _ = std::fs::remove_file(&path);
    run.episode.unwrap()
}

fn pipeline(c: &mut Criterion) {
    let ep = recorded_episode(400);
    let cfg = TrimConfig::default();
    let bytes = encode_episode(&ep).unwrap();

    c.bench_function("trim_400_steps", |b| {
        b.iter(|| trim_episode(black_box(&ep), &cfg).unwrap())
    });
    c.bench_function("chunk_400_steps", |b| {
        b.iter(|| make_chunks(black_box(&ep), DEFAULT_CHUNK))
    });
    c.bench_function("encode_episode_400_steps", |b| {
        b.iter(|| encode_episode(black_box(&ep)).unwrap())
    });
    c.bench_function("decode_episode_400_steps", |b| {
        b.iter_batched(
            || bytes.clone(),
            |v| decode_episode(&v).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, kinematics, simulator, codec, pipeline);
criterion_main!(benches);
