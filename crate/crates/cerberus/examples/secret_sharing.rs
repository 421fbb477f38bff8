//! Shamir secret sharing in the tiny test field, small enough to follow by
//! hand: deal a secret into 3 shares, recombine any 2 of them with Lagrange
//! coefficients, and watch a single share tell you nothing.
//!
//! ```bash
//! cargo run --example secret_sharing
//! ```

use cerberus::group::toy::ToyScalar;
use cerberus::group::Toy11;
use cerberus::shamir::{deal, lagrange_at_zero, reconstruct, SecretShare, ThresholdParams};
use rand::rngs::OsRng;

fn main() {
    let params = ThresholdParams::new(2, 3).expect("2-of-3 is valid");
    let secret = ToyScalar::new(5);
    println!("field           Z_11 (toy suite)");
    println!("secret          {}", secret.residue());
    println!("threshold       {} of {}", params.k, params.n);

    let shares = deal::<Toy11, _>(&secret, params, &mut OsRng).expect("dealing");
    for share in &shares {
        println!("share {}         f({}) = {}", share.index, share.index, share.value.residue());
    }

    println!("\nlagrange coefficients at zero:");
    for indices in [vec![1u16, 2], vec![1, 3], vec![2, 3]] {
        let lambdas = lagrange_at_zero::<Toy11>(&indices).expect("distinct nonzero indices");
        let printable: Vec<u16> = lambdas.iter().map(|l| l.residue()).collect();
        println!("  subset {indices:?} -> λ = {printable:?}");
    }

    println!("\nevery 2-subset reconstructs the secret:");
    for pair in [[0usize, 1], [0, 2], [1, 2]] {
        let subset: Vec<SecretShare<Toy11>> =
            pair.iter().map(|&p| shares[p].clone()).collect();
        let recovered = reconstruct::<Toy11>(&subset).expect("reconstruction");
        println!(
            "  shares {:?} -> {}",
            pair.map(|p| shares[p].index),
            recovered.residue()
        );
        assert_eq!(recovered, secret);
    }

    // One share alone interpolates a constant polynomial through that
    // point, which is almost never the secret.
    let lone = reconstruct::<Toy11>(&shares[..1]).expect("single share");
    println!(
        "\na single share \"reconstructs\" {} — unrelated to the secret",
        lone.residue()
    );
}
