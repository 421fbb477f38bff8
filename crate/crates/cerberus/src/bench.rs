//! Latency harness: spawn one daemon process per moderator on localhost,
//! drive batched token creation and report handling end to end over HTTP,
//! and emit per-item means as CSV.
//!
//! Timing starts after every daemon reports healthy — startup is excluded,
//! every protocol round trip is included. The CSV schema is
//! `scenario,n,k,batch,mean_ms,std_ms,reps`, one file per invocation, which
//! is exactly the axes a batch-size/moderator-count plot needs.

use crate::client::{Client, ClientError, HttpTransport, ModeratorRoster, TokenBatchRequest};
use crate::group::Ristretto255;
use crate::keyfile::{ceremony, KeyfileError};
use crate::protocol::{seal_message, ConsumedTokens, MessageEnvelope, SystemClock};
use crate::shamir::ThresholdParams;
use rand::rngs::OsRng;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bench configuration: {0}")]
    Config(String),

    #[error("failed to spawn daemon: {0}")]
    Spawn(std::io::Error),

    #[error("daemon at {addr} not healthy after {waited:?}")]
    Unhealthy { addr: String, waited: Duration },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Client(#[from] ClientError),

    #[error(transparent)]
    Keyfile(#[from] KeyfileError),

    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
}

/// How k is chosen for each swept n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KRule {
    /// ⌊n/2⌋ + 1.
    Majority,
    Fixed(u16),
}

impl KRule {
    pub fn k_for(&self, n: u16) -> u16 {
        match self {
            KRule::Majority => n / 2 + 1,
            KRule::Fixed(k) => *k,
        }
    }
}

/// The sweep: n values × batch sizes × two scenarios.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_values: Vec<u16>,
    pub k_rule: KRule,
    pub batch_sizes: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    pub output: PathBuf,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n_values.is_empty() {
            return Err(BenchError::Config("need at least one n value".into()));
        }
        if self.batch_sizes.is_empty() || self.batch_sizes.iter().any(|&b| b < 1) {
            return Err(BenchError::Config("batch sizes must be ≥ 1".into()));
        }
        if self.repetitions < 1 {
            return Err(BenchError::Config("repetitions must be ≥ 1".into()));
        }
        for &n in &self.n_values {
            let k = self.k_rule.k_for(n);
            if k < 1 || k > n {
                return Err(BenchError::Config(format!("k={k} invalid for n={n}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    TokenCreation,
    ReportHandling,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::TokenCreation => "token-creation",
            Scenario::ReportHandling => "report-handling",
        }
    }
}

/// One CSV row: mean per-item latency for a (scenario, n, batch) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario: Scenario,
    pub n: u16,
    pub k: u16,
    pub batch: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub reps: usize,
}

pub const CSV_HEADER: &str = "scenario,n,k,batch,mean_ms,std_ms,reps";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.4},{:.4},{}",
            self.scenario.as_str(),
            self.n,
            self.k,
            self.batch,
            self.mean_ms,
            self.std_ms,
            self.reps
        )
    }
}

/// Spawns moderator daemons as OS processes.
#[derive(Debug, Clone)]
pub struct DaemonLauncher {
    pub binary: PathBuf,
}

impl DaemonLauncher {
    pub fn new(binary: impl Into<PathBuf>) -> Self {
        DaemonLauncher { binary: binary.into() }
    }

    fn spawn(&self, share_file: &Path, listen: &str) -> Result<Child, BenchError> {
        Command::new(&self.binary)
            .arg("moderator")
            .arg("--share-file")
            .arg(share_file)
            .arg("--listen")
            .arg(listen)
            .arg("--policy")
            .arg("always-approve")
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(BenchError::Spawn)
    }
}

/// A set of spawned daemons; killed on drop.
pub struct Cluster {
    children: Vec<(u16, Option<Child>)>,
    pub addrs: Vec<String>,
}

impl Cluster {
    /// Stop one daemon by roster index (1-based), for partial-failure runs.
    pub fn stop(&mut self, index: u16) {
        for (i, child) in &mut self.children {
            if *i == index {
                if let Some(mut c) = child.take() {
                    let _ = c.kill();
                    let _ = c.wait();
                }
            }
        }
    }
}

impl Drop for Cluster {
    fn drop(&mut self) {
        for (_, child) in &mut self.children {
            if let Some(mut c) = child.take() {
                let _ = c.kill();
                let _ = c.wait();
            }
        }
    }
}

/// Pick n distinct free localhost ports. The listeners are held until all
/// ports are chosen, then released together.
pub fn free_local_ports(count: usize) -> Result<Vec<u16>, BenchError> {
    let listeners: Vec<TcpListener> = (0..count)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<Result<_, _>>()
        .map_err(|source| BenchError::Io { path: "127.0.0.1:0".into(), source })?;
    listeners
        .iter()
        .map(|l| {
            l.local_addr()
                .map(|a| a.port())
                .map_err(|source| BenchError::Io { path: "local_addr".into(), source })
        })
        .collect()
}

fn wait_healthy(addr: &str, deadline: Duration) -> Result<(), BenchError> {
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_millis(250))
        .build();
    let started = Instant::now();
    while started.elapsed() < deadline {
        if agent.get(&format!("http://{addr}/v1/health")).call().is_ok() {
            return Ok(());
        }
        std::thread::sleep(Duration::from_millis(25));
    }
    Err(BenchError::Unhealthy { addr: addr.to_string(), waited: deadline })
}

/// Run a key ceremony into `dir` and spawn one daemon per share, waiting
/// until all are healthy. Returns the cluster and the matching roster.
pub fn spawn_cluster(
    launcher: &DaemonLauncher,
    params: ThresholdParams,
    dir: &Path,
) -> Result<(Cluster, ModeratorRoster<Ristretto255>), BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let shares = ceremony::<Ristretto255, _>(params, &mut OsRng)?;
    let ports = free_local_ports(params.n as usize)?;
    let addrs: Vec<String> = ports.iter().map(|p| format!("127.0.0.1:{p}")).collect();

    let mut share_paths = Vec::new();
    for share in &shares {
        let path = dir.join(format!("moderator-{}.key", share.index));
        share.write_to(&path)?;
        share_paths.push(path);
    }

    let mut children = Vec::new();
    for (share, (path, addr)) in shares.iter().zip(share_paths.iter().zip(&addrs)) {
        children.push((share.index, Some(launcher.spawn(path, addr)?)));
    }
    let cluster = Cluster { children, addrs: addrs.clone() };
    for addr in &addrs {
        wait_healthy(addr, Duration::from_secs(10))?;
    }

    let roster = ModeratorRoster::from_share_files(&shares, &addrs)
        .map_err(BenchError::Client)?;
    Ok((cluster, roster))
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn seal_batch(
    client: &Client<Ristretto255>,
    batch: usize,
) -> Result<Vec<MessageEnvelope<Ristretto255>>, BenchError> {
    let id = crate::elgamal::Identity::digest(b"bench-sender");
    let tokens = client.obtain_tokens(
        &TokenBatchRequest { id_src: id, batch_size: batch },
        &SystemClock,
        &mut OsRng,
    )?;
    let mut ledger = ConsumedTokens::new();
    let mut envelopes = Vec::with_capacity(batch);
    for (j, (token, sk_eph)) in tokens.iter().enumerate() {
        let message = format!("bench message {j}");
        envelopes.push(seal_message::<Ristretto255, _>(
            message.as_bytes(),
            token,
            sk_eph,
            &mut ledger,
            &mut OsRng,
        )?);
    }
    Ok(envelopes)
}

/// Run the whole sweep and write the CSV. Returns the records in emission
/// order: for each n, for each batch, token-creation then report-handling.
pub fn run_bench(
    config: &BenchConfig,
    launcher: &DaemonLauncher,
) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    let mut records = Vec::new();

    for &n in &config.n_values {
        let k = config.k_rule.k_for(n);
        let params = ThresholdParams::new(k, n)
            .map_err(|e| BenchError::Config(e.to_string()))?;
        let dir = std::env::temp_dir().join(format!(
            "cerberus-bench-{}-n{}",
            std::process::id(),
            n
        ));
        let (cluster, roster) = spawn_cluster(launcher, params, &dir)?;
        let client = Client::new(roster, Arc::new(HttpTransport::default()));
        let id = crate::elgamal::Identity::digest(b"bench-sender");

        for &batch in &config.batch_sizes {
            // Token creation, timed around whole batches.
            let mut samples = Vec::with_capacity(config.repetitions);
            for rep in 0..config.warmup + config.repetitions {
                let request = TokenBatchRequest { id_src: id, batch_size: batch };
                let started = Instant::now();
                let tokens = client.obtain_tokens(&request, &SystemClock, &mut OsRng)?;
                let elapsed = started.elapsed();
                assert_eq!(tokens.len(), batch);
                if rep >= config.warmup {
                    samples.push(elapsed.as_secs_f64() * 1e3 / batch as f64);
                }
            }
            let (mean_ms, std_ms) = mean_std(&samples);
            records.push(BenchRecord {
                scenario: Scenario::TokenCreation,
                n,
                k,
                batch,
                mean_ms,
                std_ms,
                reps: config.repetitions,
            });

            // Report handling over pre-sealed envelopes; handling is
            // stateless on the daemons, so reps reuse them.
            let envelopes = seal_batch(&client, batch)?;
            let mut samples = Vec::with_capacity(config.repetitions);
            for rep in 0..config.warmup + config.repetitions {
                let started = Instant::now();
                for envelope in &envelopes {
                    client.report_and_recover(envelope)?;
                }
                let elapsed = started.elapsed();
                if rep >= config.warmup {
                    samples.push(elapsed.as_secs_f64() * 1e3 / batch as f64);
                }
            }
            let (mean_ms, std_ms) = mean_std(&samples);
            records.push(BenchRecord {
                scenario: Scenario::ReportHandling,
                n,
                k,
                batch,
                mean_ms,
                std_ms,
                reps: config.repetitions,
            });
        }

        drop(cluster);
        let _ = std::fs::remove_dir_all(&dir);
    }

    write_csv(&config.output, &records)?;
    Ok(records)
}

pub fn write_csv(path: &Path, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.csv_row());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Emit a container-compose file describing an n-moderator topology, for
/// running each party in its own container instead of a local process.
pub fn write_compose_file(path: &Path, n: u16, base_port: u16) -> Result<(), BenchError> {
    let mut out = String::new();
    out.push_str("# One container per moderator; mount the key ceremony\n");
    out.push_str("# output at ./keys. Build the image with the cerberus\n");
    out.push_str("# binary on PATH.\n");
    out.push_str("services:\n");
    for i in 1..=n {
        let port = base_port + i - 1;
        out.push_str(&format!("  moderator-{i}:\n"));
        out.push_str("    image: cerberus:latest\n");
        out.push_str(&format!(
            "    command: [\"cerberus\", \"moderator\", \"--share-file\", \"/keys/moderator-{i}.key\", \"--listen\", \"0.0.0.0:{port}\", \"--policy\", \"always-approve\"]\n"
        ));
        out.push_str("    volumes:\n      - ./keys:/keys:ro\n");
        out.push_str(&format!("    ports:\n      - \"{port}:{port}\"\n"));
    }
    let mut file = std::fs::File::create(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(out.as_bytes()).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_rule() {
        assert_eq!(KRule::Majority.k_for(3), 2);
        assert_eq!(KRule::Majority.k_for(5), 3);
        assert_eq!(KRule::Majority.k_for(7), 4);
        assert_eq!(KRule::Fixed(2).k_for(7), 2);
    }

    #[test]
    fn csv_rows_have_the_fixed_schema() {
        let record = BenchRecord {
            scenario: Scenario::TokenCreation,
            n: 3,
            k: 2,
            batch: 16,
            mean_ms: 1.25,
            std_ms: 0.5,
            reps: 10,
        };
        assert_eq!(CSV_HEADER.split(',').count(), 7);
        assert_eq!(record.csv_row(), "token-creation,3,2,16,1.2500,0.5000,10");
    }

    #[test]
    fn config_validation() {
        let ok = BenchConfig {
            n_values: vec![3],
            k_rule: KRule::Majority,
            batch_sizes: vec![1],
            repetitions: 1,
            warmup: 0,
            output: "out.csv".into(),
        };
        assert!(ok.validate().is_ok());

        let mut bad = ok.clone();
        bad.batch_sizes = vec![0];
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.repetitions = 0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.k_rule = KRule::Fixed(9);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn free_ports_are_distinct() {
        let ports = free_local_ports(7).unwrap();
        let set: std::collections::HashSet<u16> = ports.iter().copied().collect();
        assert_eq!(set.len(), 7);
    }

    #[test]
    fn mean_and_std() {
        let (mean, std) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((mean - 2.0).abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
        let (mean, std) = mean_std(&[5.0]);
        assert_eq!((mean, std), (5.0, 0.0));
    }

    #[test]
    fn compose_file_lists_every_moderator() {
        let dir = std::env::temp_dir().join(format!("cerberus-compose-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("compose.yaml");
        write_compose_file(&path, 3, 9101).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for i in 1..=3 {
            assert!(text.contains(&format!("moderator-{i}:")));
        }
        assert!(text.contains("9103:9103"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
