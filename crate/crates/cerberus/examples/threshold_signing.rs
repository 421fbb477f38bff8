//! Two-round threshold Schnorr signing: three of five signers commit to
//! nonces, exchange the roster, and produce shares that aggregate into a
//! signature indistinguishable from a single-signer one. A corrupted share
//! is caught and attributed before aggregation.
//!
//! ```bash
//! cargo run --example threshold_signing
//! ```

use cerberus::group::{Element, Ristretto255, Scalar};
use cerberus::schnorr::{
    aggregate, deal_signing_key, round1_commit, round2_sign, sign_single, verify, verify_share,
};
use cerberus::shamir::ThresholdParams;
use rand::rngs::OsRng;

fn main() {
    let params = ThresholdParams::new(3, 5).expect("3-of-5 is valid");
    let (group_pk, key_shares) =
        deal_signing_key::<Ristretto255, _>(params, &mut OsRng).expect("ceremony");
    println!("group pk        {}", hex::encode(group_pk.encode()));

    let message = b"approve this token";
    let quorum = [0usize, 2, 4]; // signers 1, 3, 5

    // Round 1: every participating signer publishes (D, E) = (g^d, g^e).
    let mut nonces: Vec<_> = quorum
        .iter()
        .map(|&p| round1_commit::<Ristretto255, _>(key_shares[p].index, &mut OsRng).unwrap())
        .collect();
    let roster: Vec<_> = nonces.iter().map(|n| n.commitment().clone()).collect();
    for c in &roster {
        println!(
            "signer {}        D={} E={}",
            c.index,
            hex::encode(c.d.encode()),
            hex::encode(c.e.encode())
        );
    }

    // Round 2: each signer binds itself to the roster and responds with a
    // share. Nonces are destroyed on use.
    let mut shares: Vec<_> = quorum
        .iter()
        .zip(nonces.iter_mut())
        .map(|(&p, n)| round2_sign::<Ristretto255>(&key_shares[p], n, message, &roster).unwrap())
        .collect();

    for (position, share) in shares.iter().enumerate() {
        let ok = verify_share::<Ristretto255>(
            &roster,
            share,
            message,
            &key_shares[quorum[position]].verification_share,
            &group_pk,
        );
        println!("share {}         z={} ({})", share.index, hex::encode(share.z.encode()), if ok { "valid" } else { "INVALID" });
    }

    let signature = aggregate::<Ristretto255>(&roster, &shares, message).expect("aggregate");
    println!(
        "aggregate       R={} z={}",
        hex::encode(signature.r.encode()),
        hex::encode(signature.z.encode())
    );
    assert!(verify::<Ristretto255>(&group_pk, message, &signature));
    println!("verifies under the plain Schnorr check: yes");

    // The same verifier accepts single-signer signatures; recipients cannot
    // tell a quorum signed.
    let solo_sk = cerberus::group::random_nonzero_scalar::<Ristretto255, _>(&mut OsRng).unwrap();
    let solo_pk = <Ristretto255 as cerberus::group::Suite>::Element::base_pow(&solo_sk);
    let solo = sign_single::<Ristretto255, _>(&solo_sk, message, &mut OsRng).unwrap();
    assert!(verify::<Ristretto255>(&solo_pk, message, &solo));
    println!("single-signer signature passes the same verifier: yes");

    // A corrupted share is pinned to its signer before aggregation.
    shares[1].z = shares[1].z.add(&Scalar::one());
    let caught = !verify_share::<Ristretto255>(
        &roster,
        &shares[1],
        message,
        &key_shares[quorum[1]].verification_share,
        &group_pk,
    );
    println!(
        "corrupting signer {}'s share is detected before aggregation: {}",
        shares[1].index,
        if caught { "yes" } else { "no" }
    );
    assert!(caught);
}
