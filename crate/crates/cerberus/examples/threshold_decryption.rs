//! Threshold ElGamal over a sender identity: encrypt to the moderators'
//! joint key, have individual moderators produce decryption shares, and
//! recombine any k of them in the exponent.
//!
//! ```bash
//! cargo run --example threshold_decryption
//! ```

use cerberus::elgamal::{
    combine_shares, deal_decryption_key, decryption_share, encrypt_identity, Identity,
};
use cerberus::group::{random_nonzero_scalar, Element, Ristretto255};
use cerberus::shamir::ThresholdParams;
use rand::rngs::OsRng;

fn main() {
    let params = ThresholdParams::new(2, 3).expect("2-of-3 is valid");
    let (pk, key_shares) =
        deal_decryption_key::<Ristretto255, _>(params, &mut OsRng).expect("ceremony");
    println!("suite           ristretto255");
    println!("joint pk        {}", hex::encode(pk.encode()));

    let id = Identity::digest(b"alice@example.org");
    println!("identity        {} (digest of alice@example.org)", hex::encode(id.as_bytes()));

    let r = random_nonzero_scalar::<Ristretto255, _>(&mut OsRng).expect("entropy");
    let ciphertext = encrypt_identity::<Ristretto255>(&pk, &id, &r).expect("encryption");
    println!("x1.c1           {}", hex::encode(ciphertext.c1.encode()));
    println!("x1.c2           {}", hex::encode(ciphertext.c2));

    let shares: Vec<_> = key_shares
        .iter()
        .map(|s| decryption_share::<Ristretto255>(s, &ciphertext.c1).expect("share"))
        .collect();
    for share in &shares {
        println!("d_{}             {}", share.index, hex::encode(share.d.encode()));
    }

    println!("\ncombining every 2-subset:");
    for pair in [[0usize, 1], [0, 2], [1, 2]] {
        let picked = vec![shares[pair[0]].clone(), shares[pair[1]].clone()];
        let recovered = combine_shares::<Ristretto255>(&picked, &ciphertext.c2, params.k)
            .expect("enough shares");
        println!(
            "  moderators {:?} -> {}",
            pair.map(|p| shares[p].index),
            hex::encode(recovered.as_bytes())
        );
        assert_eq!(recovered, id);
    }

    let starved = combine_shares::<Ristretto255>(&shares[..1], &ciphertext.c2, params.k);
    println!("\none share only  -> {starved:?}");
}
