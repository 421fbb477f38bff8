//! The whole protocol, in memory and in order: a client asks 3 moderators
//! for a token (2 suffice), seals a message with it, anyone verifies the
//! envelope, the message gets reported, two moderators vote to act, and
//! the sender identity falls out.
//!
//! ```bash
//! cargo run --example token_lifecycle
//! ```

use cerberus::elgamal::{deal_decryption_key, Identity};
use cerberus::protocol::{
    begin_token, finalize_token, moderator_check_token_request, moderator_vote, recover_identity,
    seal_message, token_transcript, verify_envelope, Clock, ConsumedTokens, ReportRequest,
    SystemClock, VoteOutcome, VotePolicy,
};
use cerberus::schnorr::{deal_signing_key, round1_commit, round2_sign};
use cerberus::shamir::ThresholdParams;
use cerberus::group::{Element, Ristretto255};
use rand::rngs::OsRng;

fn main() {
    let params = ThresholdParams::new(2, 3).expect("2-of-3 is valid");
    let (enc_pk, enc_shares) =
        deal_decryption_key::<Ristretto255, _>(params, &mut OsRng).expect("ceremony");
    let (sig_pk, sig_shares) =
        deal_signing_key::<Ristretto255, _>(params, &mut OsRng).expect("ceremony");

    // -- client: start a token request ------------------------------------
    let id = Identity::digest(b"sender#4921");
    let (request, sk_eph) =
        begin_token::<Ristretto255, _>(&id, &enc_pk, &SystemClock, &mut OsRng).expect("begin");
    println!("token request");
    println!("  x1.c1         {}", hex::encode(request.x1.c1.encode()));
    println!("  pk_eph        {}", hex::encode(request.pk_eph.encode()));

    // -- moderators 1 and 2: check the request, run both signing rounds ---
    let now = SystemClock.now_unix();
    moderator_check_token_request::<Ristretto255>(&request, &enc_pk, now, 300)
        .expect("honest request");
    let transcript =
        token_transcript::<Ristretto255>(&request.x1, &request.pk_eph, request.issued_at);
    let mut nonces: Vec<_> = (0..2)
        .map(|p| round1_commit::<Ristretto255, _>(sig_shares[p].index, &mut OsRng).unwrap())
        .collect();
    let roster: Vec<_> = nonces.iter().map(|n| n.commitment().clone()).collect();
    let shares: Vec<_> = (0..2)
        .zip(nonces.iter_mut())
        .map(|(p, n)| round2_sign::<Ristretto255>(&sig_shares[p], n, &transcript, &roster).unwrap())
        .collect();

    // -- client: verify the shares and finalize ---------------------------
    let verification_shares: Vec<_> = sig_shares
        .iter()
        .map(|s| (s.index, s.verification_share))
        .collect();
    let token =
        finalize_token::<Ristretto255>(&request, &roster, &shares, &verification_shares, &sig_pk, params.k)
            .expect("finalize");
    println!("token finalized");
    println!("  sig_mod       {}", hex::encode(token.sig_mod.to_bytes()));

    // -- client: seal exactly one message with it -------------------------
    let mut ledger = ConsumedTokens::new();
    let envelope = seal_message::<Ristretto255, _>(
        b"the quarterly numbers are fabricated",
        &token,
        &sk_eph,
        &mut ledger,
        &mut OsRng,
    )
    .expect("seal");
    println!("message sealed");
    println!("  x2            {}", hex::encode(&envelope.x2));

    // Reuse is a client-side error.
    let reuse = seal_message::<Ristretto255, _>(b"again", &token, &sk_eph, &mut ledger, &mut OsRng);
    println!("  sealing twice -> {:?}", reuse.expect_err("token is single-use"));

    // -- any hop: verify the envelope -------------------------------------
    verify_envelope::<Ristretto255>(&envelope, &sig_pk).expect("well-formed envelope");
    println!("envelope verifies along the forwarding chain");

    // -- report: moderators vote, approvals carry decryption shares -------
    let report = ReportRequest { envelope };
    let mut approvals = Vec::new();
    for (position, enc_share) in enc_shares.iter().enumerate().take(2) {
        match moderator_vote::<Ristretto255>(&report, enc_share, &VotePolicy::AlwaysApprove, &sig_pk)
        {
            VoteOutcome::Approve(share) => {
                println!("moderator {} approves", position + 1);
                approvals.push(share);
            }
            other => println!("moderator {} -> {other:?}", position + 1),
        }
    }

    let recovered = recover_identity::<Ristretto255>(&report, &approvals, params).expect("quorum");
    println!("recovered       {}", hex::encode(recovered.as_bytes()));
    assert_eq!(recovered, id);
    println!("matches the sender identity");
}
