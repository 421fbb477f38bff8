//! Shamir secret sharing over the suite's scalar field, plus the Lagrange
//! coefficients used to recombine shares at x = 0.
//!
//! Shares are dealt by a trusted dealer (the `keygen` ceremony); there is no
//! distributed key generation. The same field serves both the plain secret
//! reconstruction here and exponent-side recombination in threshold
//! decryption, which is why the coefficients live in Z_q.

use crate::group::{ScalarOf, Scalar, Suite};
use rand::{CryptoRng, RngCore};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ShamirError {
    #[error("invalid threshold parameters: k={k}, n={n} (need 1 ≤ k ≤ n)")]
    InvalidParams { k: u16, n: u16 },

    #[error("share index 0 is the secret itself and must never be dealt")]
    ZeroIndex,

    #[error("duplicate share index {0}")]
    DuplicateIndex(u16),

    #[error("at least one share is required")]
    Empty,

    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
}

/// k-of-n threshold parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdParams {
    pub k: u16,
    pub n: u16,
}

impl ThresholdParams {
    pub fn new(k: u16, n: u16) -> Result<Self, ShamirError> {
        if k < 1 || k > n {
            return Err(ShamirError::InvalidParams { k, n });
        }
        Ok(ThresholdParams { k, n })
    }
}

/// One party's share: the polynomial evaluated at its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretShare<S: Suite> {
    pub index: u16,
    pub value: ScalarOf<S>,
}

/// Evaluate f at x by Horner's rule; coefficients low-to-high.
fn eval_poly<S: Suite>(coefficients: &[ScalarOf<S>], x: &ScalarOf<S>) -> ScalarOf<S> {
    let mut acc = S::Scalar::zero();
    for c in coefficients.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

fn deal_from_coefficients<S: Suite>(
    coefficients: &[ScalarOf<S>],
    n: u16,
) -> Vec<SecretShare<S>> {
    (1..=n)
        .map(|i| SecretShare {
            index: i,
            value: eval_poly::<S>(coefficients, &S::Scalar::from_u64(i as u64)),
        })
        .collect()
}

/// Split `secret` into n shares of which any k reconstruct it: share i is
/// f(i) for a degree-(k−1) polynomial with f(0) = secret and uniform higher
/// coefficients.
pub fn deal<S: Suite, R: RngCore + CryptoRng>(
    secret: &ScalarOf<S>,
    params: ThresholdParams,
    rng: &mut R,
) -> Result<Vec<SecretShare<S>>, ShamirError> {
    let ThresholdParams { k, n } = params;
    if k < 1 || k > n {
        return Err(ShamirError::InvalidParams { k, n });
    }
    let mut coefficients = Vec::with_capacity(k as usize);
    coefficients.push(secret.clone());
    for _ in 1..k {
        coefficients.push(crate::group::random_scalar::<S, R>(rng)?);
    }
    Ok(deal_from_coefficients::<S>(&coefficients, n))
}

/// Lagrange coefficients at zero for the given index set:
/// λ_i = Π_{j≠i} j / (j − i), returned aligned with the input order.
/// Σ λ_i · f(i) = f(0) for every polynomial of degree < |indices|.
pub fn lagrange_at_zero<S: Suite>(indices: &[u16]) -> Result<Vec<ScalarOf<S>>, ShamirError> {
    if indices.is_empty() {
        return Err(ShamirError::Empty);
    }
    for (pos, &i) in indices.iter().enumerate() {
        if i == 0 {
            return Err(ShamirError::ZeroIndex);
        }
        if indices[..pos].contains(&i) {
            return Err(ShamirError::DuplicateIndex(i));
        }
    }
    let scalars: Vec<ScalarOf<S>> = indices
        .iter()
        .map(|&i| S::Scalar::from_u64(i as u64))
        .collect();
    let mut out = Vec::with_capacity(indices.len());
    for (a, i) in scalars.iter().enumerate() {
        let mut num = S::Scalar::one();
        let mut den = S::Scalar::one();
        for (b, j) in scalars.iter().enumerate() {
            if a == b {
                continue;
            }
            num = num.mul(j);
            den = den.mul(&j.sub(i));
        }
        // Distinct nonzero indices below the field order make every factor
        // of the denominator nonzero.
        let inv = den.invert().expect("denominator is a product of nonzero factors");
        out.push(num.mul(&inv));
    }
    Ok(out)
}

/// Interpolate the shares at zero: Σ λ_i · s_i over the given index set.
/// Equals the dealt secret whenever the shares are consistent and at least
/// k of them are present; with fewer it is a well-defined wrong value.
pub fn reconstruct<S: Suite>(shares: &[SecretShare<S>]) -> Result<ScalarOf<S>, ShamirError> {
    let indices: Vec<u16> = shares.iter().map(|s| s.index).collect();
    let lambdas = lagrange_at_zero::<S>(&indices)?;
    let mut acc = S::Scalar::zero();
    for (share, lambda) in shares.iter().zip(&lambdas) {
        acc = acc.add(&lambda.mul(&share.value));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{random_scalar, Ristretto255, Toy11};
    use crate::group::toy::ToyScalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy(v: u16) -> ToyScalar {
        ToyScalar::new(v)
    }

    /// Subsets of size k, by index positions.
    fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        if k == 0 || k > n {
            return out;
        }
        loop {
            out.push(idx.clone());
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + n - k {
                    break;
                }
                if i == 0 {
                    return out;
                }
            }
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    #[test]
    fn degree_zero_polynomial_single_share() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let secret = toy(7);
        let shares =
            deal::<Toy11, _>(&secret, ThresholdParams::new(1, 1).unwrap(), &mut rng).unwrap();
        assert_eq!(shares.len(), 1);
        assert_eq!(shares[0].index, 1);
        assert_eq!(shares[0].value, secret);
    }

    #[test]
    fn hand_evaluated_polynomial_over_gf11() {
        // f(x) = 5 + 3x: f(1)=8, f(2)=11≡0, f(3)=14≡3.
        let shares = deal_from_coefficients::<Toy11>(&[toy(5), toy(3)], 3);
        let got: Vec<(u16, u16)> = shares.iter().map(|s| (s.index, s.value.residue())).collect();
        assert_eq!(got, vec![(1, 8), (2, 0), (3, 3)]);
    }

    #[test]
    fn lagrange_known_coefficients() {
        assert_eq!(
            lagrange_at_zero::<Toy11>(&[1]).unwrap(),
            vec![toy(1)],
            "single-point interpolation is the identity"
        );
        // {1,2}: λ1 = 2/(2−1) = 2, λ2 = 1/(1−2) = −1 ≡ 10.
        assert_eq!(lagrange_at_zero::<Toy11>(&[1, 2]).unwrap(), vec![toy(2), toy(10)]);
        // {1,2,3}: λ = (3, −3, 1).
        assert_eq!(
            lagrange_at_zero::<Toy11>(&[1, 2, 3]).unwrap(),
            vec![toy(3), toy(8), toy(1)]
        );
    }

    #[test]
    fn lagrange_rejects_zero_and_duplicates() {
        assert_eq!(lagrange_at_zero::<Toy11>(&[]), Err(ShamirError::Empty));
        assert_eq!(lagrange_at_zero::<Toy11>(&[0, 1]), Err(ShamirError::ZeroIndex));
        assert_eq!(
            lagrange_at_zero::<Toy11>(&[2, 3, 2]),
            Err(ShamirError::DuplicateIndex(2))
        );
    }

    #[test]
    fn reconstruct_hand_worked_subsets() {
        // Shares of f(x) = 5 + 3x: 2·8 + (−1)·0 = 16 ≡ 5.
        let s = |i, v| SecretShare::<Toy11> { index: i, value: toy(v) };
        assert_eq!(reconstruct::<Toy11>(&[s(1, 8), s(2, 0)]).unwrap(), toy(5));
        // λ over {2,3} = (3, −2): 3·0 + 9·3 = 27 ≡ 5.
        assert_eq!(reconstruct::<Toy11>(&[s(2, 0), s(3, 3)]).unwrap(), toy(5));
    }

    #[test]
    fn every_k_subset_reconstructs_in_both_suites() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for (k, n) in [(1u16, 1u16), (2, 3), (3, 5), (4, 7)] {
            let params = ThresholdParams::new(k, n).unwrap();

            let secret = random_scalar::<Toy11, _>(&mut rng).unwrap();
            let shares = deal::<Toy11, _>(&secret, params, &mut rng).unwrap();
            for subset in k_subsets(n as usize, k as usize) {
                let picked: Vec<_> = subset.iter().map(|&p| shares[p].clone()).collect();
                assert_eq!(reconstruct::<Toy11>(&picked).unwrap(), secret);
            }

            let secret = random_scalar::<Ristretto255, _>(&mut rng).unwrap();
            let shares = deal::<Ristretto255, _>(&secret, params, &mut rng).unwrap();
            for subset in k_subsets(n as usize, k as usize) {
                let picked: Vec<_> = subset.iter().map(|&p| shares[p].clone()).collect();
                assert_eq!(reconstruct::<Ristretto255>(&picked).unwrap(), secret);
            }
        }
    }

    #[test]
    fn too_few_shares_miss_the_secret() {
        // A (k−1)-subset interpolates a lower-degree polynomial unrelated to
        // f(0); over ristretto a hit would mean a broken field.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let params = ThresholdParams::new(3, 5).unwrap();
        let mut misses = 0;
        for _ in 0..1000 {
            let secret = random_scalar::<Ristretto255, _>(&mut rng).unwrap();
            let shares = deal::<Ristretto255, _>(&secret, params, &mut rng).unwrap();
            if reconstruct::<Ristretto255>(&shares[..2]).unwrap() != secret {
                misses += 1;
            }
        }
        assert!(misses >= 999, "only {misses}/1000 (k−1)-subsets missed");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ThresholdParams::new(0, 3).is_err());
        assert!(ThresholdParams::new(4, 3).is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        assert!(deal::<Toy11, _>(
            &toy(1),
            ThresholdParams { k: 4, n: 3 },
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn reconstruct_is_order_independent() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let secret = random_scalar::<Toy11, _>(&mut rng).unwrap();
        let shares =
            deal::<Toy11, _>(&secret, ThresholdParams::new(3, 5).unwrap(), &mut rng).unwrap();
        let forward = reconstruct::<Toy11>(&shares).unwrap();
        let mut reversed = shares.clone();
        reversed.reverse();
        assert_eq!(reconstruct::<Toy11>(&reversed).unwrap(), forward);
        assert_eq!(forward, secret);
    }
}
