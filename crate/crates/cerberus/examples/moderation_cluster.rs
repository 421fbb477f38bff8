//! A live 3-moderator cluster over real HTTP, in one process: start three
//! daemons on loopback ports, mint a batch of tokens through the client
//! fan-out, seal and report a message, and recover the sender — then stop
//! one daemon and do it again to show k-of-n liveness.
//!
//! ```bash
//! cargo run --example moderation_cluster
//! ```

use cerberus::client::{Client, HttpTransport, ModeratorRoster, TokenBatchRequest};
use cerberus::elgamal::Identity;
use cerberus::group::Ristretto255;
use cerberus::keyfile::ceremony;
use cerberus::modnode::{serve, ModeratorCore};
use cerberus::protocol::{seal_message, ConsumedTokens, SystemClock, VotePolicy};
use cerberus::shamir::ThresholdParams;
use rand::rngs::OsRng;
use std::sync::Arc;

fn main() {
    let params = ThresholdParams::new(2, 3).expect("2-of-3 is valid");
    let shares = ceremony::<Ristretto255, _>(params, &mut OsRng).expect("ceremony");

    let mut daemons = Vec::new();
    let mut addrs = Vec::new();
    for share in &shares {
        let core = Arc::new(ModeratorCore::new(
            share.clone(),
            VotePolicy::AlwaysApprove,
            300,
        ));
        let daemon = serve(core, "127.0.0.1:0").expect("bind a loopback port");
        println!("moderator {} listening on {}", share.index, daemon.addr());
        addrs.push(daemon.addr().to_string());
        daemons.push(daemon);
    }

    let roster = ModeratorRoster::from_share_files(&shares, &addrs).expect("roster");
    let client = Client::new(roster.clone(), Arc::new(HttpTransport::default()));

    let id = Identity::digest(b"cluster-demo-sender");
    let tokens = client
        .obtain_tokens(
            &TokenBatchRequest { id_src: id, batch_size: 8 },
            &SystemClock,
            &mut OsRng,
        )
        .expect("token batch");
    println!("minted {} tokens over HTTP", tokens.len());

    let mut ledger = ConsumedTokens::new();
    let (token, sk_eph) = &tokens[0];
    let envelope = seal_message::<Ristretto255, _>(
        b"coordinated harassment, please review",
        token,
        sk_eph,
        &mut ledger,
        &mut OsRng,
    )
    .expect("seal");
    let recovered = client.report_and_recover(&envelope).expect("quorum of approvals");
    println!("reported and recovered: {}", hex::encode(recovered.as_bytes()));
    assert_eq!(recovered, id);

    // k-of-n means one dead moderator changes nothing.
    let dropped = daemons.remove(2);
    dropped.shutdown();
    println!("stopped moderator 3; retrying with the remaining quorum");

    let tokens = client
        .obtain_tokens(
            &TokenBatchRequest { id_src: id, batch_size: 2 },
            &SystemClock,
            &mut OsRng,
        )
        .expect("two moderators still meet the threshold");
    let (token, sk_eph) = &tokens[0];
    let envelope = seal_message::<Ristretto255, _>(
        b"second report, degraded cluster",
        token,
        sk_eph,
        &mut ledger,
        &mut OsRng,
    )
    .expect("seal");
    let recovered = client.report_and_recover(&envelope).expect("still recoverable");
    println!("degraded cluster still recovers: {}", hex::encode(recovered.as_bytes()));
    assert_eq!(recovered, id);
}
