use std::fs;
use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

fn wbcd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wbcd"));
    for (k, _) in std::env::vars() {
        if k.starts_with("WBCD_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    wbcd().args(args).output().expect("wbcd runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn structured(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("not one JSON document ({e}): {}", stdout(o)))
}

fn record(path: &Path, steps: usize, extra: &[&str]) {
    let steps = steps.to_string();
    let mut args = vec!["record", path.to_str().unwrap(), "--steps", &steps];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn table1_check_prints_oracle_total_and_pass() {
    let o = run(&["score", "table1", "--check"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("oracle total 3.227676653059087"), "{text}");
    assert!(text.lines().any(|l| l == "PASS"), "{text}");
}

#[test]
fn table1_structured_result() {
    let o = run(&["--output", "structured", "score", "table1", "--check"]);
    assert_eq!(code(&o), 0);
    let v = structured(&o);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "score table1");
    assert_eq!(v["ok"], true);
    assert_eq!(v["exit_code"], 0);
    assert!(v["error"].is_null());
    assert_eq!(v["result"]["check"]["pass"], true);
    let total = v["result"]["scorecard"]["total"].as_f64().unwrap();
    assert!((total - 3.227676653059087).abs() / 3.227676653059087 < 1e-9);
}

#[test]
fn emitted_table1_log_scores_the_same() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("t1.json");
    assert_eq!(
        code(&run(&[
            "score",
            "table1",
            "--emit-log",
            log.to_str().unwrap()
        ])),
        0
    );
    let o = run(&[
        "--output",
        "structured",
        "score",
        "replay",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let total = structured(&o)["result"]["total"].as_f64().unwrap();
    assert!((total - 3.227676653059087).abs() < 1e-12);

    let beta = run(&[
        "--output",
        "structured",
        "score",
        "replay",
        "--log",
        log.to_str().unwrap(),
        "--assume-beta",
        "60",
    ]);
    let with_beta = structured(&beta)["result"]["total"].as_f64().unwrap();
    assert!((with_beta - (total + 1.0 / 60.0)).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["bogus"])), 2);
    assert_eq!(code(&run(&["replay", ""])), 2);
    assert_eq!(code(&run(&["--dt", "0.5", "score", "table1"])), 2);
    assert_eq!(code(&run(&["--dt", "0.0005", "score", "table1"])), 2);
    assert_eq!(
        code(&run(&[
            "--config",
            "/nonexistent/wbcd.toml",
            "score",
            "table1"
        ])),
        2
    );
    assert_eq!(code(&run(&["replay", "/nonexistent/a.wbep"])), 2);
    assert_eq!(code(&run(&["prep", "/nonexistent/data"])), 2);
}

#[test]
fn usage_errors_are_structured_when_requested() {
    let o = run(&["--output", "structured", "replay", ""]);
    assert_eq!(code(&o), 2);
    let v = structured(&o);
    assert_eq!(v["ok"], false);
    assert_eq!(v["exit_code"], 2);
    assert_eq!(v["error"]["kind"], "Usage");

    let o = wbcd()
        .env("WBCD_OUTPUT", "structured")
        .args(["--dt", "1", "score", "table1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let v = structured(&o);
    assert_eq!(v["command"], "score table1");
    assert_eq!(v["error"]["kind"], "BadConfig");
}

#[test]
fn dt_env_and_config_file_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "dt_s = 0.5\n").unwrap();
    assert_eq!(
        code(&run(&[
            "--config",
            cfg.to_str().unwrap(),
            "score",
            "table1"
        ])),
        2
    );
    // A flag outranks the file.
    assert_eq!(
        code(&run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--dt",
            "0.01",
            "score",
            "table1"
        ])),
        0
    );
    let o = wbcd()
        .env("WBCD_DT", "7")
        .args(["score", "table1"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);

    fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(
        code(&run(&[
            "--config",
            cfg.to_str().unwrap(),
            "score",
            "table1"
        ])),
        2
    );
}

#[test]
fn record_twice_with_seed_0_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.wbep");
    let b = dir.path().join("b.wbep");
    record(&a, 60, &[]);
    record(&b, 60, &["--seed", "0"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = dir.path().join("c.wbep");
    record(&c, 60, &["--seed", "1"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn replay_matches_and_refuses_other_robots() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.wbep");
    record(&a, 80, &["--no-frames"]);
    let o = run(&["--output", "structured", "replay", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v = structured(&o);
    assert_eq!(v["result"]["steps"], 80);
    assert!(v["result"]["final_max_abs_error"].as_f64().unwrap() <= 1e-9);

    let o = run(&[
        "--output",
        "structured",
        "--dt",
        "0.01",
        "replay",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(structured(&o)["error"]["kind"], "ConfigHashMismatch");
}

#[test]
fn corrupt_archive_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("junk.wbep");
    fs::write(&a, b"not an archive").unwrap();
    assert_eq!(code(&run(&["replay", a.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["trim", a.to_str().unwrap()])), 1);
}

#[test]
fn trim_writes_archive_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("in.wbep");
    record(&a, 60, &["--no-frames"]);
    let plots = dir.path().join("out");
    let o = run(&[
        "--output",
        "structured",
        "trim",
        a.to_str().unwrap(),
        "--plot",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = structured(&o);
    let out = dir.path().join("in.trimmed.wbep");
    assert_eq!(v["result"]["output"], out.to_str().unwrap());
    assert!(out.exists());
    for key in ["csv", "svg_left", "svg_right"] {
        let p = v["result"]["plot"][key].as_str().unwrap();
        let body = fs::read_to_string(p).unwrap();
        assert!(!body.is_empty());
        if key != "csv" {
            assert!(body.contains("<svg"));
        }
    }
    let csv = fs::read_to_string(v["result"]["plot"]["csv"].as_str().unwrap()).unwrap();
    // Header, then one displacement per consecutive pair of steps.
    assert_eq!(csv.lines().count(), 1 + 59);

    // Trimming is idempotent through the binary as well.
    let again = dir.path().join("again.wbep");
    let o = run(&[
        "--output",
        "structured",
        "trim",
        out.to_str().unwrap(),
        "-o",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(structured(&o)["result"]["dropped"], 0);
}

#[test]
fn trim_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("in.wbep");
    record(&a, 10, &["--no-frames"]);
    assert_eq!(code(&run(&["trim", a.to_str().unwrap(), "--tau", "-1"])), 2);
    assert_eq!(
        code(&run(&["trim", a.to_str().unwrap(), "--window", "0"])),
        2
    );
}

#[test]
fn prep_writes_manifest_with_training_block() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    record(&data.join("e0.wbep"), 40, &["--no-frames"]);
    record(&data.join("e1.wbep"), 25, &["--no-frames", "--seed", "5"]);
    let manifest = dir.path().join("manifest.json");
    let o = run(&[
        "--output",
        "structured",
        "prep",
        data.to_str().unwrap(),
        "--chunk",
        "30",
        "--out",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = structured(&o);
    assert_eq!(v["result"]["episodes"], 2);
    assert_eq!(v["result"]["chunk_samples"], 40 + 25);
    assert_eq!(
        v["result"]["real_actions"],
        40 * 41 / 2 - 10 * 11 / 2 + 25 * 26 / 2
    );

    let m: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    let t = &m["training"];
    assert_eq!(t["chunk"], 30);
    assert_eq!(t["lr"], 1e-5);
    assert_eq!(t["hidden"], 512);
    assert_eq!(t["ffw"], 3200);
    assert_eq!(t["batch"], 4);
    assert_eq!(t["epochs"], 8000);
    assert_eq!(t["kl_weight"], 10.0);
    assert_eq!(m["episodes"].as_array().unwrap().len(), 2);

    assert_eq!(
        code(&run(&["prep", data.to_str().unwrap(), "--chunk", "0"])),
        2
    );
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&run(&["prep", empty.to_str().unwrap()])), 1);
}

struct Server {
    child: Child,
    tcp: String,
    ws: Option<String>,
}

fn spawn_serve(extra: &[&str]) -> Server {
    let mut child = wbcd()
        .args(["serve", "--listen", "127.0.0.1:0"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.as_mut().unwrap())
        .read_line(&mut line)
        .unwrap();
    let field = |name: &str| {
        line.split_whitespace()
            .find_map(|w| w.strip_prefix(name))
            .unwrap_or_else(|| panic!("no {name} in {line:?}"))
            .to_string()
    };
    let tcp = field("tcp=");
    let ws = Some(field("ws=")).filter(|w| w != "off");
    Server { child, tcp, ws }
}

#[test]
fn serve_once_records_a_driven_session() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("s.wbep");
    let log = dir.path().join("log.json");
    let server = spawn_serve(&[
        "--no-ws",
        "--once",
        "--record",
        archive.to_str().unwrap(),
        "--score-log",
        log.to_str().unwrap(),
        "--output",
        "structured",
    ]);
    let o = run(&[
        "--output",
        "structured",
        "drive",
        "--connect",
        &server.tcp,
        "--steps",
        "30",
        "--no-cameras",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = structured(&o);
    assert_eq!(d["result"]["commands"], 30);
    assert_eq!(d["result"]["replies"], 30);

    let out = server.child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0);
    let s = structured(&out);
    assert_eq!(s["result"]["ticks"], 30);
    assert_eq!(s["result"]["recorded_steps"], 30);
    assert_eq!(s["result"]["final_joints"], d["result"]["final_joints"]);

    let r = run(&["replay", archive.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(
        code(&run(&["score", "replay", "--log", log.to_str().unwrap()])),
        0
    );
}

#[test]
fn websocket_bridge_serves_the_same_protocol() {
    let server = spawn_serve(&["--ws", "127.0.0.1:0", "--once"]);
    let url = format!("ws://{}/", server.ws.clone().expect("bridge enabled"));
    let o = run(&[
        "--output",
        "structured",
        "drive",
        "--ws-url",
        &url,
        "--steps",
        "12",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = structured(&o);
    assert_eq!(d["result"]["replies"], 12);
    assert_eq!(
        d["result"]["frames_received"],
        serde_json::json!([12, 12, 12])
    );
    let out = server.child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn occupied_port_fails_at_startup() {
    let held = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap().to_string();
    let o = run(&[
        "--output",
        "structured",
        "serve",
        "--listen",
        &addr,
        "--no-ws",
    ]);
    assert_ne!(code(&o), 0);
    assert_eq!(structured(&o)["error"]["kind"], "PortInUse");

    let o = run(&["serve", "--listen", "127.0.0.1:0", "--ws", &addr]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PortInUse"));
}

#[cfg(unix)]
#[test]
fn sigterm_finalizes_the_archive() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("t.wbep");
    let server = spawn_serve(&[
        "--no-ws",
        "--record",
        archive.to_str().unwrap(),
        "--frame-every",
        "0",
    ]);
    let mut driver = wbcd()
        .args([
            "drive",
            "--connect",
            &server.tcp,
            "--steps",
            "1000000",
            "--no-cameras",
        ])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    std::thread::sleep(std::time::Duration::from_millis(800));
    let status = Command::new("kill")
        .args(["-TERM", &server.child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    let out = server.child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let _ = driver.kill();
    let _ = driver.wait();

    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "t.wbep")
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
    if archive.exists() {
        let r = run(&["replay", archive.to_str().unwrap()]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    for sub in [
        "serve", "drive", "record", "replay", "trim", "prep", "score",
    ] {
        assert_eq!(code(&run(&[sub, "--help"])), 0, "{sub}");
    }
}
