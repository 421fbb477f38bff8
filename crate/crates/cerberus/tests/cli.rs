//! Binary-level checks of the command-line interface: flags, artifacts on
//! disk, and the documented exit codes (0 success, 1 protocol failure,
//! 2 configuration error).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cerberus")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn fresh_dir(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "cerberus-cli-{label}-{}",
        std::process::id()
    ));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn keygen(dir: &Path, k: &str, n: &str) -> Output {
    run(&["keygen", "--k", k, "--n", n, "--out", dir.to_str().unwrap()])
}

#[test]
fn keygen_writes_shares_and_roster_and_respects_force() {
    let dir = fresh_dir("keygen");
    let first = keygen(&dir, "2", "3");
    assert_eq!(first.status.code(), Some(0), "{first:?}");
    for i in 1..=3 {
        assert!(dir.join(format!("moderator-{i}.key")).exists());
    }
    let roster = std::fs::read_to_string(dir.join("roster.txt")).unwrap();
    assert!(roster.starts_with("cerberus-roster v1"));
    assert_eq!(roster.matches("\nmoderator ").count(), 3);

    // Existing material is protected.
    let again = keygen(&dir, "2", "3");
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    let forced = run(&[
        "keygen", "--k", "2", "--n", "3", "--out", dir.to_str().unwrap(), "--force",
    ]);
    assert_eq!(forced.status.code(), Some(0));

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn keygen_rejects_impossible_thresholds() {
    let dir = fresh_dir("badparams");
    let output = keygen(&dir, "4", "3");
    assert_eq!(output.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn demo_outcomes_and_exit_codes() {
    let dir = fresh_dir("demo");
    assert_eq!(keygen(&dir, "2", "3").status.code(), Some(0));
    let roster = dir.join("roster.txt");
    let roster = roster.to_str().unwrap();

    // In-process approve: full walkthrough, identity recovered.
    let approve = run(&[
        "demo", "--roster", roster, "--message", "hello", "--policy", "always-approve",
    ]);
    assert_eq!(approve.status.code(), Some(0), "{approve:?}");
    let stdout = String::from_utf8_lossy(&approve.stdout);
    assert!(stdout.contains("recovered identity = "));
    assert!(stdout.contains("matches the sender identity above"));

    // Deny policy: the protocol correctly refuses to reveal anyone.
    let deny = run(&[
        "demo", "--roster", roster, "--message", "hello", "--policy", "always-deny",
    ]);
    assert_eq!(deny.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&deny.stderr).contains("insufficient-votes(0)"));

    // Tampering is caught before any moderator votes.
    let tampered = run(&[
        "demo", "--roster", roster, "--message", "hello", "--policy", "always-approve",
        "--tamper",
    ]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tampered.stdout).contains("verify_envelope  reject"));

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn moderator_requires_key_material() {
    let output = run(&["moderator"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("--share-file"));
}

#[test]
fn moderator_honors_the_listen_env_override() {
    let dir = fresh_dir("env-listen");
    assert_eq!(keygen(&dir, "1", "1").status.code(), Some(0));
    let port = {
        let probe = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        probe.local_addr().unwrap().port()
    };
    let listen = format!("127.0.0.1:{port}");
    let mut daemon = Command::new(bin())
        .args(["moderator", "--share-file"])
        .arg(dir.join("moderator-1.key"))
        .env("CERBERUS_LISTEN", &listen)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();

    let agent = ureq::AgentBuilder::new()
        .timeout(std::time::Duration::from_millis(300))
        .build();
    let url = format!("http://{listen}/v1/health");
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(5);
    let mut healthy = false;
    while std::time::Instant::now() < deadline {
        if agent.get(&url).call().is_ok() {
            healthy = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(25));
    }
    let _ = daemon.kill();
    let _ = daemon.wait();
    assert!(healthy, "daemon never answered on the env-configured port");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bench_validates_flags_before_spawning_anything() {
    let output = run(&["bench", "--n-list", "3", "--batch-list", "0", "--out", "/tmp/x.csv"]);
    assert_eq!(output.status.code(), Some(2));
}
