//! Voting policies in action: the same reported envelope under
//! always-approve, always-deny, and keyword moderators. Approvals carry
//! decryption shares; anything less keeps the sender hidden.
//!
//! ```bash
//! cargo run --example report_voting
//! ```

use cerberus::client::{Client, LoopbackTransport, ModeratorRoster, TokenBatchRequest, Transport};
use cerberus::elgamal::Identity;
use cerberus::group::Ristretto255;
use cerberus::keyfile::{ceremony, ShareFile};
use cerberus::modnode::ModeratorCore;
use cerberus::protocol::{seal_message, ConsumedTokens, SystemClock, VotePolicy};
use cerberus::shamir::ThresholdParams;
use rand::rngs::OsRng;
use std::sync::Arc;

fn deploy(
    shares: &[ShareFile<Ristretto255>],
    policy: VotePolicy,
) -> Client<Ristretto255> {
    let cores: Vec<Arc<ModeratorCore<Ristretto255>>> = shares
        .iter()
        .map(|s| Arc::new(ModeratorCore::new(s.clone(), policy.clone(), 300)))
        .collect();
    let addrs: Vec<String> = (1..=shares.len()).map(|i| format!("loopback:{i}")).collect();
    let roster = ModeratorRoster::from_share_files(shares, &addrs).expect("roster");
    Client::new(roster, Arc::new(LoopbackTransport::new(cores)) as Arc<dyn Transport>)
}

fn main() {
    let params = ThresholdParams::new(2, 3).expect("2-of-3 is valid");
    let shares = ceremony::<Ristretto255, _>(params, &mut OsRng).expect("ceremony");

    // Seal one envelope with an always-approve deployment so the token is
    // valid everywhere (all deployments share the same keys).
    let issuing = deploy(&shares, VotePolicy::AlwaysApprove);
    let id = Identity::digest(b"whistleblower-7");
    let mut tokens = issuing
        .obtain_tokens(
            &TokenBatchRequest { id_src: id, batch_size: 1 },
            &SystemClock,
            &mut OsRng,
        )
        .expect("token");
    let (token, sk_eph) = tokens.remove(0);
    let mut ledger = ConsumedTokens::new();
    let envelope = seal_message::<Ristretto255, _>(
        b"this message mentions spam and nothing else",
        &token,
        &sk_eph,
        &mut ledger,
        &mut OsRng,
    )
    .expect("seal");

    println!("sender identity {}", hex::encode(id.as_bytes()));

    for policy in [
        VotePolicy::AlwaysApprove,
        VotePolicy::AlwaysDeny,
        "keywords:spam,scam".parse().expect("keyword policy"),
        "keywords:phishing".parse().expect("keyword policy"),
    ] {
        let client = deploy(&shares, policy.clone());
        match client.report_and_recover(&envelope) {
            Ok(recovered) => {
                println!("policy {:<22} -> revealed {}", policy.to_string(), hex::encode(recovered.as_bytes()));
                assert_eq!(recovered, id);
            }
            Err(e) => println!("policy {:<22} -> {e}", policy.to_string()),
        }
    }
}
