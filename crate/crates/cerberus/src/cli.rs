//! Command-line front end: key ceremony, daemon, demo walkthrough,
//! reporting, and the latency benchmark.
//!
//! Exit codes: 0 success, 1 protocol failure, 2 configuration error.

use crate::bench::{run_bench, write_compose_file, BenchConfig, DaemonLauncher, KRule};
use crate::client::{
    peek_roster_suite, Client, HttpTransport, LoopbackTransport, ModeratorRoster,
    TokenBatchRequest, Transport,
};
use crate::elgamal::Identity;
use crate::group::{Element, Ristretto255, Suite, SuiteId, Toy11};
use crate::keyfile::{ceremony, ShareFile};
use crate::modnode::{run_from_config, ModeratorCore, ModeratorConfig};
use crate::protocol::{
    seal_message, verify_envelope, ConsumedTokens, MessageEnvelope, SystemClock, VotePolicy,
};
use crate::shamir::ThresholdParams;
use crate::wire::ReportRequestWire;
use clap::{Parser, Subcommand};
use rand::rngs::OsRng;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROTOCOL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
enum CliError {
    /// Bad flags, unreadable files, invalid parameters.
    Config(String),
    /// The protocol itself failed: unreachable quorum, rejections, bad
    /// envelopes.
    Protocol(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Protocol(_) => EXIT_PROTOCOL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Protocol(m) => m,
        }
    }
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn protocol_err(e: impl ToString) -> CliError {
    CliError::Protocol(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "cerberus",
    about = "Threshold moderation for franked messaging: k of n moderators jointly issue sender tokens and jointly reveal reported senders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deal key shares and write one share file per moderator plus a roster.
    Keygen {
        /// Approval threshold k.
        #[arg(long)]
        k: u16,
        /// Moderator count n.
        #[arg(long)]
        n: u16,
        /// Output directory for share files and roster.txt.
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing key material.
        #[arg(long)]
        force: bool,
        /// Group suite: ristretto255 (default) or toy11 (testing only).
        #[arg(long, default_value = "ristretto255")]
        suite: String,
        /// First listen port recorded in the roster placeholders.
        #[arg(long, default_value_t = 9101)]
        base_port: u16,
    },
    /// Run one moderator daemon.
    Moderator {
        /// JSON config file; flags override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        share_file: Option<PathBuf>,
        /// always-approve | always-deny | keywords:a,b,c
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        skew_secs: Option<u64>,
    },
    /// Sweep n and batch size over live local daemons and write a CSV.
    Bench {
        /// Moderator counts to sweep, comma separated (e.g. 3,5,7).
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        n_list: Vec<u16>,
        /// Batch sizes to sweep, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,16,64")]
        batch_list: Vec<usize>,
        /// Timed repetitions per cell.
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Untimed warmup iterations per cell.
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Write a container-compose file for the largest n and exit.
        #[arg(long)]
        emit_compose: Option<PathBuf>,
    },
    /// Walk the whole protocol once, printing every intermediate value.
    Demo {
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        message: String,
        /// Run against in-process moderators with this policy instead of
        /// the daemons in the roster (requires share files next to it).
        #[arg(long)]
        policy: Option<String>,
        /// Corrupt the sealed message before reporting.
        #[arg(long)]
        tamper: bool,
        /// Account string to derive the sender identity from.
        #[arg(long, default_value = "demo@cerberus.example")]
        identity: String,
        /// Also write the sealed envelope for later `report` runs.
        #[arg(long)]
        envelope_out: Option<PathBuf>,
    },
    /// Report a previously sealed envelope and recover the sender.
    Report {
        #[arg(long)]
        roster: PathBuf,
        /// Binary envelope as written by `demo --envelope-out`.
        #[arg(long)]
        envelope_file: PathBuf,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Keygen { k, n, out, force, suite, base_port } => {
            let suite: SuiteId = suite.parse().map_err(config_err)?;
            match suite {
                SuiteId::Ristretto255 => cmd_keygen::<Ristretto255>(k, n, &out, force, base_port),
                SuiteId::Toy11 => cmd_keygen::<Toy11>(k, n, &out, force, base_port),
            }
        }
        Command::Moderator { config, listen, share_file, policy, skew_secs } => {
            cmd_moderator(config, listen, share_file, policy, skew_secs)
        }
        Command::Bench { n_list, batch_list, reps, warmup, out, emit_compose } => {
            cmd_bench(n_list, batch_list, reps, warmup, out, emit_compose)
        }
        Command::Demo { roster, message, policy, tamper, identity, envelope_out } => {
            let text = std::fs::read_to_string(&roster).map_err(config_err)?;
            match peek_roster_suite(&text).map_err(config_err)? {
                SuiteId::Ristretto255 => cmd_demo::<Ristretto255>(
                    &roster, &text, &message, policy, tamper, &identity, envelope_out,
                ),
                SuiteId::Toy11 => cmd_demo::<Toy11>(
                    &roster, &text, &message, policy, tamper, &identity, envelope_out,
                ),
            }
        }
        Command::Report { roster, envelope_file } => {
            let text = std::fs::read_to_string(&roster).map_err(config_err)?;
            match peek_roster_suite(&text).map_err(config_err)? {
                SuiteId::Ristretto255 => cmd_report::<Ristretto255>(&text, &envelope_file),
                SuiteId::Toy11 => cmd_report::<Toy11>(&text, &envelope_file),
            }
        }
    }
}

fn cmd_keygen<S: Suite>(
    k: u16,
    n: u16,
    out: &Path,
    force: bool,
    base_port: u16,
) -> Result<(), CliError> {
    let params = ThresholdParams::new(k, n).map_err(config_err)?;
    std::fs::create_dir_all(out).map_err(config_err)?;

    let roster_path = out.join("roster.txt");
    let share_path = |i: u16| out.join(format!("moderator-{i}.key"));
    if !force {
        let mut existing: Vec<String> = Vec::new();
        for i in 1..=n {
            if share_path(i).exists() {
                existing.push(share_path(i).display().to_string());
            }
        }
        if roster_path.exists() {
            existing.push(roster_path.display().to_string());
        }
        if !existing.is_empty() {
            return Err(CliError::Config(format!(
                "refusing to overwrite existing key material ({}); pass --force to regenerate",
                existing.join(", ")
            )));
        }
    }

    let shares = ceremony::<S, _>(params, &mut OsRng).map_err(config_err)?;

    #[cfg(debug_assertions)]
    self_check_ceremony(&shares);

    let addrs: Vec<String> = (0..n)
        .map(|i| format!("127.0.0.1:{}", base_port + i))
        .collect();
    for share in &shares {
        share
            .write_to(&share_path(share.index))
            .map_err(config_err)?;
    }
    let roster = ModeratorRoster::from_share_files(&shares, &addrs).map_err(config_err)?;
    std::fs::write(&roster_path, roster.to_text()).map_err(config_err)?;

    println!("suite            {}", S::ID);
    println!("threshold        {k} of {n}");
    println!("signing pk       {}", hex::encode(roster.sig_pk.encode()));
    println!("encryption pk    {}", hex::encode(roster.enc_pk.encode()));
    for share in &shares {
        println!("share file       {}", share_path(share.index).display());
    }
    println!("roster           {}", roster_path.display());
    Ok(())
}

/// Dealt shares must reconstruct the secrets behind the recorded public
/// keys; debug builds verify before anything is written.
#[cfg(debug_assertions)]
fn self_check_ceremony<S: Suite>(shares: &[ShareFile<S>]) {
    use crate::shamir::{reconstruct, SecretShare};

    let enc: Vec<SecretShare<S>> = shares.iter().map(|s| s.enc_share.clone()).collect();
    let enc_secret = reconstruct::<S>(&enc).expect("ceremony shares reconstruct");
    assert_eq!(
        S::Element::base_pow(&enc_secret),
        shares[0].enc_group_pk,
        "encryption shares disagree with the recorded public key"
    );

    let sig: Vec<SecretShare<S>> = shares
        .iter()
        .map(|s| SecretShare { index: s.index, value: s.sig_share.value.clone() })
        .collect();
    let sig_secret = reconstruct::<S>(&sig).expect("ceremony shares reconstruct");
    assert_eq!(
        S::Element::base_pow(&sig_secret),
        shares[0].sig_group_pk,
        "signing shares disagree with the recorded public key"
    );
}

fn cmd_moderator(
    config_path: Option<PathBuf>,
    listen: Option<String>,
    share_file: Option<PathBuf>,
    policy: Option<String>,
    skew_secs: Option<u64>,
) -> Result<(), CliError> {
    let mut config = match (&config_path, &share_file) {
        (Some(path), _) => ModeratorConfig::load(path).map_err(config_err)?,
        (None, Some(share)) => ModeratorConfig::new(share, "127.0.0.1:9100"),
        (None, None) => {
            return Err(CliError::Config(
                "need --config or --share-file".into(),
            ))
        }
    };
    if let Some(share) = share_file {
        config.share_file = share;
    }
    // Listen precedence: flag, then CERBERUS_LISTEN, then config file.
    if let Ok(env_listen) = std::env::var("CERBERUS_LISTEN") {
        config.listen = env_listen;
    }
    if let Some(listen) = listen {
        config.listen = listen;
    }
    if let Some(policy) = policy {
        config.policy = policy.parse().map_err(CliError::Config)?;
    }
    if let Some(skew) = skew_secs {
        config.skew_secs = skew;
    }

    let handle = run_from_config(&config).map_err(config_err)?;
    println!(
        "moderator listening on {} (policy {}, share file {})",
        handle.addr(),
        config.policy,
        config.share_file.display()
    );
    handle.wait();
    Ok(())
}

fn cmd_bench(
    n_list: Vec<u16>,
    batch_list: Vec<usize>,
    reps: usize,
    warmup: usize,
    out: PathBuf,
    emit_compose: Option<PathBuf>,
) -> Result<(), CliError> {
    if let Some(compose_path) = emit_compose {
        let n = n_list.iter().copied().max().ok_or_else(|| {
            CliError::Config("need at least one n value".into())
        })?;
        write_compose_file(&compose_path, n, 9101).map_err(config_err)?;
        println!("wrote {} for n={n}; benchmarks not run", compose_path.display());
        return Ok(());
    }

    let config = BenchConfig {
        n_values: n_list,
        k_rule: KRule::Majority,
        batch_sizes: batch_list,
        repetitions: reps,
        warmup,
        output: out.clone(),
    };
    config.validate().map_err(config_err)?;
    let binary = std::env::current_exe().map_err(config_err)?;
    let records = run_bench(&config, &DaemonLauncher::new(binary)).map_err(protocol_err)?;
    println!("{}", crate::bench::CSV_HEADER);
    for record in &records {
        println!("{}", record.csv_row());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn load_local_cores<S: Suite>(
    roster_path: &Path,
    roster: &ModeratorRoster<S>,
    policy: &VotePolicy,
) -> Result<Vec<Arc<ModeratorCore<S>>>, CliError> {
    let dir = roster_path.parent().unwrap_or_else(|| Path::new("."));
    let mut cores = Vec::new();
    for entry in &roster.entries {
        let path = dir.join(format!("moderator-{}.key", entry.index));
        let share = ShareFile::<S>::read_from(&path).map_err(|e| {
            CliError::Config(format!(
                "--policy runs in-process moderators and needs the share files next to the roster: {e}"
            ))
        })?;
        cores.push(Arc::new(ModeratorCore::new(
            share,
            policy.clone(),
            crate::protocol::DEFAULT_SKEW_SECS,
        )));
    }
    Ok(cores)
}

#[allow(clippy::too_many_arguments)]
fn cmd_demo<S: Suite>(
    roster_path: &Path,
    roster_text: &str,
    message: &str,
    policy: Option<String>,
    tamper: bool,
    identity_account: &str,
    envelope_out: Option<PathBuf>,
) -> Result<(), CliError> {
    let roster = ModeratorRoster::<S>::from_text(roster_text).map_err(config_err)?;
    let transport: Arc<dyn Transport> = match &policy {
        Some(spec) => {
            let policy: VotePolicy = spec.parse().map_err(CliError::Config)?;
            println!("mode             in-process moderators, policy {policy}");
            Arc::new(LoopbackTransport::new(load_local_cores(
                roster_path,
                &roster,
                &policy,
            )?))
        }
        None => {
            println!("mode             live daemons from roster");
            Arc::new(HttpTransport::default())
        }
    };
    let client = Client::new(roster.clone(), Arc::clone(&transport));

    let id = Identity::digest(identity_account.as_bytes());
    println!("suite            {}", S::ID);
    println!("sender account   {identity_account}");
    println!("sender identity  {}", hex::encode(id.as_bytes()));

    let batch = TokenBatchRequest { id_src: id, batch_size: 1 };
    let mut tokens = client
        .obtain_tokens(&batch, &SystemClock, &mut OsRng)
        .map_err(protocol_err)?;
    let (token, sk_eph) = tokens.remove(0);
    println!("-- token issued by quorum --");
    println!("x1.c1            {}", hex::encode(token.x1.c1.encode()));
    println!("x1.c2            {}", hex::encode(token.x1.c2));
    println!("pk_eph           {}", hex::encode(token.pk_eph.encode()));
    println!("issued_at        {}", token.issued_at);
    println!("sig_mod          {}", hex::encode(token.sig_mod.to_bytes()));

    let mut ledger = ConsumedTokens::new();
    let mut envelope =
        seal_message::<S, _>(message.as_bytes(), &token, &sk_eph, &mut ledger, &mut OsRng)
            .map_err(protocol_err)?;
    println!("-- message sealed --");
    println!("message          {message:?}");
    println!("x2               {}", hex::encode(&envelope.x2));
    println!("sig_src          {}", hex::encode(envelope.sig_src.to_bytes()));

    if tamper {
        envelope.message[0] ^= 0x01;
        println!("-- tamper mode: first message byte flipped --");
    }

    match verify_envelope::<S>(&envelope, &roster.sig_pk) {
        Ok(()) => println!("verify_envelope  accept"),
        Err(reason) => println!("verify_envelope  reject ({reason})"),
    }

    if let Some(path) = &envelope_out {
        std::fs::write(path, envelope.to_bytes()).map_err(config_err)?;
        println!("envelope written {}", path.display());
    }

    println!("-- reporting to all {} moderators --", roster.params.n);
    let report = ReportRequestWire::from_typed(&crate::protocol::ReportRequest {
        envelope: envelope.clone(),
    });
    let mut approvals = Vec::new();
    for entry in &roster.entries {
        match transport.report(&entry.addr, entry.index, &report) {
            Ok(response) if response.vote == "approve" => {
                let share = response
                    .share
                    .as_ref()
                    .ok_or_else(|| protocol_err("approve vote without a share"))?
                    .to_typed::<S>()
                    .map_err(protocol_err)?;
                println!(
                    "moderator {}      approve (d = {})",
                    entry.index,
                    hex::encode(share.d.encode())
                );
                approvals.push(share);
            }
            Ok(_) => println!("moderator {}      deny", entry.index),
            Err(e) => println!("moderator {}      {e}", entry.index),
        }
    }

    if approvals.len() < roster.params.k as usize {
        return Err(CliError::Protocol(format!(
            "insufficient-votes({})",
            approvals.len()
        )));
    }
    let recovered = crate::protocol::recover_identity::<S>(
        &crate::protocol::ReportRequest { envelope },
        &approvals,
        roster.params,
    )
    .map_err(protocol_err)?;
    println!("recovered identity = {}", hex::encode(recovered.as_bytes()));
    if recovered == id {
        println!("matches the sender identity above");
    }
    Ok(())
}

fn cmd_report<S: Suite>(roster_text: &str, envelope_file: &Path) -> Result<(), CliError> {
    let roster = ModeratorRoster::<S>::from_text(roster_text).map_err(config_err)?;
    let bytes = std::fs::read(envelope_file).map_err(config_err)?;
    let envelope = MessageEnvelope::<S>::from_bytes(&bytes).map_err(config_err)?;
    let client = Client::new(roster, Arc::new(HttpTransport::default()));
    let identity = client.report_and_recover(&envelope).map_err(protocol_err)?;
    println!("recovered identity = {}", hex::encode(identity.as_bytes()));
    Ok(())
}
