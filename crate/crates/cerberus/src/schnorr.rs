//! Two-round k-of-n threshold Schnorr signing in the FROST style, plus the
//! single-signer scheme used for ephemeral keys.
//!
//! Aggregated threshold signatures are plain Schnorr signatures: one
//! [`verify`] serves both paths, and recipients cannot tell from a signature
//! whether one party or a quorum produced it.
//!
//! Round 1 publishes per-signer nonce commitments (D, E) = (g^d, g^e).
//! Round 2 binds each signer to the whole roster through a per-signer
//! binding factor ρ_i, yielding the share
//! z_i = d + e·ρ_i + λ_i·s_i·c over the joint commitment
//! R = Π_j D_j·E_j^{ρ_j}. Nonces are destroyed on first use, success or not.

use crate::group::{hash_to_scalar, Element, ElementOf, GroupError, Scalar, ScalarOf, Suite};
use crate::shamir::{self, lagrange_at_zero, ShamirError, ThresholdParams};
use rand::{CryptoRng, RngCore};

const RHO_TAG: &[u8] = b"frost-rho";
const CHALLENGE_TAG: &[u8] = b"schnorr-challenge";

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SchnorrError {
    #[error("nonces were already consumed by an earlier signing attempt")]
    NonceReused,

    #[error("signer {0} is not in the roster")]
    SignerNotInRoster(u16),

    #[error("roster entry for signer {0} does not match its own commitment")]
    CommitmentMismatch(u16),

    #[error("duplicate roster index {0}")]
    DuplicateIndex(u16),

    #[error("roster commitment {0} contains the identity element")]
    IdentityCommitment(u16),

    #[error("expected {expected} signature shares aligned with the roster, got {got}")]
    ShareCountMismatch { expected: usize, got: usize },

    #[error("share at position {position} has index {got}, roster says {expected}")]
    ShareIndexMismatch { position: usize, expected: u16, got: u16 },

    #[error("signature share from signer {0} failed verification")]
    InvalidShare(u16),

    #[error(transparent)]
    Group(#[from] GroupError),

    #[error(transparent)]
    Shamir(#[from] ShamirError),
}

/// One signer's long-lived key material, dealt by the key ceremony.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigningKeyShare<S: Suite> {
    pub index: u16,
    pub value: ScalarOf<S>,
    pub group_pk: ElementOf<S>,
    /// g^value; lets anyone check this signer's shares.
    pub verification_share: ElementOf<S>,
}

/// Public half of a signer's round-1 output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonceCommitment<S: Suite> {
    pub index: u16,
    pub d: ElementOf<S>,
    pub e: ElementOf<S>,
}

/// Round-1 state a signer keeps until round 2. The secret pair is consumed
/// by the first [`round2_sign`] call, succeed or fail.
#[derive(Debug)]
pub struct SigningNonces<S: Suite> {
    secret: Option<(ScalarOf<S>, ScalarOf<S>)>,
    commitment: NonceCommitment<S>,
}

impl<S: Suite> SigningNonces<S> {
    pub fn commitment(&self) -> &NonceCommitment<S> {
        &self.commitment
    }

    pub fn is_spent(&self) -> bool {
        self.secret.is_none()
    }
}

/// One signer's round-2 output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureShare<S: Suite> {
    pub index: u16,
    pub z: ScalarOf<S>,
}

/// A plain Schnorr signature (R, z); g^z = R·pk^c.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature<S: Suite> {
    pub r: ElementOf<S>,
    pub z: ScalarOf<S>,
}

impl<S: Suite> Signature<S> {
    /// Wire form encode(R) ∥ encode(z).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.r.encode();
        out.extend_from_slice(&self.z.encode());
        out
    }

    pub const fn wire_len() -> usize {
        S::ELEMENT_LEN + S::SCALAR_LEN
    }

    /// Strict decode: non-canonical R or z encodings are rejected.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        if bytes.len() != Self::wire_len() {
            return Err(GroupError::Length {
                expected: Self::wire_len(),
                got: bytes.len(),
            });
        }
        Ok(Signature {
            r: S::Element::decode(&bytes[..S::ELEMENT_LEN])?,
            z: S::Scalar::decode(&bytes[S::ELEMENT_LEN..])?,
        })
    }
}

/// Deal a fresh signing key: returns the group public key and one
/// [`SigningKeyShare`] per party.
pub fn deal_signing_key<S: Suite, R: RngCore + CryptoRng>(
    params: ThresholdParams,
    rng: &mut R,
) -> Result<(ElementOf<S>, Vec<SigningKeyShare<S>>), SchnorrError> {
    let sk = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let group_pk = S::Element::base_pow(&sk);
    let shares = shamir::deal::<S, R>(&sk, params, rng)?;
    let key_shares = shares
        .into_iter()
        .map(|s| SigningKeyShare {
            index: s.index,
            verification_share: S::Element::base_pow(&s.value),
            value: s.value,
            group_pk: group_pk.clone(),
        })
        .collect();
    Ok((group_pk, key_shares))
}

/// Round 1: draw fresh nonces and commit to them.
pub fn round1_commit<S: Suite, R: RngCore + CryptoRng>(
    index: u16,
    rng: &mut R,
) -> Result<SigningNonces<S>, SchnorrError> {
    let d = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let e = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let commitment = NonceCommitment {
        index,
        d: S::Element::base_pow(&d),
        e: S::Element::base_pow(&e),
    };
    Ok(SigningNonces { secret: Some((d, e)), commitment })
}

/// Canonical byte form of a roster, folded into every binding factor so a
/// signer's share commits to exactly the set it co-signs with.
fn roster_bytes<S: Suite>(roster: &[NonceCommitment<S>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(roster.len() * (2 + 2 * S::ELEMENT_LEN));
    for c in roster {
        out.extend_from_slice(&c.index.to_be_bytes());
        out.extend_from_slice(&c.d.encode());
        out.extend_from_slice(&c.e.encode());
    }
    out
}

fn binding_factor<S: Suite>(index: u16, msg: &[u8], roster_enc: &[u8]) -> ScalarOf<S> {
    let mut input = Vec::with_capacity(2 + 8 + msg.len() + roster_enc.len());
    input.extend_from_slice(&index.to_be_bytes());
    input.extend_from_slice(&(msg.len() as u64).to_be_bytes());
    input.extend_from_slice(msg);
    input.extend_from_slice(roster_enc);
    hash_to_scalar::<S>(RHO_TAG, &input)
}

fn challenge<S: Suite>(r: &ElementOf<S>, pk: &ElementOf<S>, msg: &[u8]) -> ScalarOf<S> {
    let mut input = Vec::with_capacity(2 * S::ELEMENT_LEN + msg.len());
    input.extend_from_slice(&r.encode());
    input.extend_from_slice(&pk.encode());
    input.extend_from_slice(msg);
    hash_to_scalar::<S>(CHALLENGE_TAG, &input)
}

fn check_roster<S: Suite>(roster: &[NonceCommitment<S>]) -> Result<(), SchnorrError> {
    for (pos, c) in roster.iter().enumerate() {
        if c.d.is_identity() || c.e.is_identity() {
            return Err(SchnorrError::IdentityCommitment(c.index));
        }
        if roster[..pos].iter().any(|p| p.index == c.index) {
            return Err(SchnorrError::DuplicateIndex(c.index));
        }
    }
    Ok(())
}

/// Per-signer (ρ_i, λ_i) pairs, aligned with the roster.
type SignerFactors<S> = Vec<(ScalarOf<S>, ScalarOf<S>)>;

/// Joint commitment R = Π_j D_j·E_j^{ρ_j} plus each signer's ρ, λ pair,
/// aligned with the roster.
fn joint_commitment<S: Suite>(
    roster: &[NonceCommitment<S>],
    msg: &[u8],
) -> Result<(ElementOf<S>, SignerFactors<S>), SchnorrError> {
    check_roster::<S>(roster)?;
    let roster_enc = roster_bytes::<S>(roster);
    let indices: Vec<u16> = roster.iter().map(|c| c.index).collect();
    let lambdas = lagrange_at_zero::<S>(&indices)?;
    let mut r = S::Element::identity();
    let mut factors = Vec::with_capacity(roster.len());
    for (c, lambda) in roster.iter().zip(lambdas) {
        let rho = binding_factor::<S>(c.index, msg, &roster_enc);
        r = r.mul(&c.d.mul(&c.e.pow(&rho)));
        factors.push((rho, lambda));
    }
    Ok((r, factors))
}

/// Round 2: produce this signer's signature share over `msg` for the given
/// roster. The roster must contain the signer's own round-1 commitment,
/// unchanged. Nonces are consumed even when this returns an error.
pub fn round2_sign<S: Suite>(
    key_share: &SigningKeyShare<S>,
    nonces: &mut SigningNonces<S>,
    msg: &[u8],
    roster: &[NonceCommitment<S>],
) -> Result<SignatureShare<S>, SchnorrError> {
    let (d, e) = nonces.secret.take().ok_or(SchnorrError::NonceReused)?;

    let own = roster
        .iter()
        .find(|c| c.index == key_share.index)
        .ok_or(SchnorrError::SignerNotInRoster(key_share.index))?;
    if own.d != nonces.commitment.d || own.e != nonces.commitment.e {
        return Err(SchnorrError::CommitmentMismatch(key_share.index));
    }

    let (r, factors) = joint_commitment::<S>(roster, msg)?;
    let c = challenge::<S>(&r, &key_share.group_pk, msg);
    let position = roster
        .iter()
        .position(|c| c.index == key_share.index)
        .expect("own commitment located above");
    let (rho, lambda) = &factors[position];

    let z = d
        .add(&e.mul(rho))
        .add(&lambda.mul(&key_share.value).mul(&c));
    Ok(SignatureShare { index: key_share.index, z })
}

/// Check one signer's share against its verification share:
/// g^z = D_i · E_i^{ρ_i} · vs^{λ_i·c}.
pub fn verify_share<S: Suite>(
    roster: &[NonceCommitment<S>],
    share: &SignatureShare<S>,
    msg: &[u8],
    verification_share: &ElementOf<S>,
    group_pk: &ElementOf<S>,
) -> bool {
    let Ok((r, factors)) = joint_commitment::<S>(roster, msg) else {
        return false;
    };
    let Some(position) = roster.iter().position(|c| c.index == share.index) else {
        return false;
    };
    let (rho, lambda) = &factors[position];
    let c = challenge::<S>(&r, group_pk, msg);
    let own = &roster[position];
    let lhs = S::Element::base_pow(&share.z);
    let rhs = own
        .d
        .mul(&own.e.pow(rho))
        .mul(&verification_share.pow(&lambda.mul(&c)));
    lhs == rhs
}

/// Sum the shares into the final signature (R, Σ z_i). Shares must align
/// one-to-one with the roster; validity of individual shares is the
/// caller's concern (see [`verify_share`]).
pub fn aggregate<S: Suite>(
    roster: &[NonceCommitment<S>],
    shares: &[SignatureShare<S>],
    msg: &[u8],
) -> Result<Signature<S>, SchnorrError> {
    if shares.len() != roster.len() {
        return Err(SchnorrError::ShareCountMismatch {
            expected: roster.len(),
            got: shares.len(),
        });
    }
    for (position, (c, s)) in roster.iter().zip(shares).enumerate() {
        if c.index != s.index {
            return Err(SchnorrError::ShareIndexMismatch {
                position,
                expected: c.index,
                got: s.index,
            });
        }
    }
    let (r, _) = joint_commitment::<S>(roster, msg)?;
    let mut z = S::Scalar::zero();
    for s in shares {
        z = z.add(&s.z);
    }
    Ok(Signature { r, z })
}

/// Plain Schnorr verification: accept iff g^z = R·pk^c. Serves both
/// single-signer and aggregated threshold signatures.
pub fn verify<S: Suite>(pk: &ElementOf<S>, msg: &[u8], sig: &Signature<S>) -> bool {
    if pk.is_identity() {
        return false;
    }
    let c = challenge::<S>(&sig.r, pk, msg);
    S::Element::base_pow(&sig.z) == sig.r.mul(&pk.pow(&c))
}

/// Single-signer Schnorr, used for the ephemeral sender key. Verifies under
/// the same [`verify`] as aggregated signatures.
pub fn sign_single<S: Suite, R: RngCore + CryptoRng>(
    sk: &ScalarOf<S>,
    msg: &[u8],
    rng: &mut R,
) -> Result<Signature<S>, SchnorrError> {
    let nonce = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let r = S::Element::base_pow(&nonce);
    let pk = S::Element::base_pow(sk);
    let c = challenge::<S>(&r, &pk, msg);
    Ok(Signature { r, z: nonce.add(&sk.mul(&c)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{random_nonzero_scalar, Ristretto255, Toy11};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sign_with_quorum<S: Suite>(
        key_shares: &[SigningKeyShare<S>],
        quorum: &[usize],
        msg: &[u8],
        rng: &mut ChaCha20Rng,
    ) -> (Vec<NonceCommitment<S>>, Vec<SignatureShare<S>>, Signature<S>) {
        let mut nonces: Vec<SigningNonces<S>> = quorum
            .iter()
            .map(|&p| round1_commit::<S, _>(key_shares[p].index, rng).unwrap())
            .collect();
        let roster: Vec<NonceCommitment<S>> =
            nonces.iter().map(|n| n.commitment().clone()).collect();
        let shares: Vec<SignatureShare<S>> = quorum
            .iter()
            .zip(nonces.iter_mut())
            .map(|(&p, n)| round2_sign::<S>(&key_shares[p], n, msg, &roster).unwrap())
            .collect();
        let sig = aggregate::<S>(&roster, &shares, msg).unwrap();
        (roster, shares, sig)
    }

    #[test]
    fn one_of_one_degenerates_to_single_signer() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (pk, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(1, 1).unwrap(), &mut rng)
                .unwrap();
        let (_, _, sig) = sign_with_quorum(&key_shares, &[0], b"solo", &mut rng);
        assert!(verify::<Ristretto255>(&pk, b"solo", &sig));
    }

    #[test]
    fn two_of_three_every_quorum_verifies_with_distinct_r() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let (pk, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let msg = b"same message";
        let (_, _, sig_a) = sign_with_quorum(&key_shares, &[0, 1], msg, &mut rng);
        let (_, _, sig_b) = sign_with_quorum(&key_shares, &[0, 2], msg, &mut rng);
        assert!(verify::<Ristretto255>(&pk, msg, &sig_a));
        assert!(verify::<Ristretto255>(&pk, msg, &sig_b));
        assert_ne!(sig_a.r, sig_b.r, "fresh nonces give distinct commitments");
    }

    #[test]
    fn all_k_subsets_verify_for_small_n() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        for (k, n) in [(2u16, 3u16), (3, 5)] {
            let (pk, key_shares) =
                deal_signing_key::<Toy11, _>(ThresholdParams::new(k, n).unwrap(), &mut rng)
                    .unwrap();
            let positions: Vec<usize> = (0..n as usize).collect();
            for subset in subsets_of_size(&positions, k as usize) {
                let (_, _, sig) = sign_with_quorum(&key_shares, &subset, b"subset", &mut rng);
                assert!(verify::<Toy11>(&pk, b"subset", &sig), "subset {subset:?}");
            }
        }
    }

    fn subsets_of_size(items: &[usize], k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if items.len() < k {
            return vec![];
        }
        let mut out = subsets_of_size(&items[1..], k - 1)
            .into_iter()
            .map(|mut rest| {
                rest.insert(0, items[0]);
                rest
            })
            .collect::<Vec<_>>();
        out.extend(subsets_of_size(&items[1..], k));
        out
    }

    #[test]
    fn nonces_single_use_even_on_failure() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let (_, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let mut n0 = round1_commit::<Ristretto255, _>(1, &mut rng).unwrap();
        let n1 = round1_commit::<Ristretto255, _>(2, &mut rng).unwrap();
        let roster = vec![n0.commitment().clone(), n1.commitment().clone()];
        assert!(round2_sign::<Ristretto255>(&key_shares[0], &mut n0, b"m", &roster).is_ok());
        assert_eq!(
            round2_sign::<Ristretto255>(&key_shares[0], &mut n0, b"m", &roster),
            Err(SchnorrError::NonceReused)
        );

        // A failed attempt burns the nonces too.
        let mut n2 = round1_commit::<Ristretto255, _>(1, &mut rng).unwrap();
        let foreign_roster = vec![n1.commitment().clone()];
        assert_eq!(
            round2_sign::<Ristretto255>(&key_shares[0], &mut n2, b"m", &foreign_roster),
            Err(SchnorrError::SignerNotInRoster(1))
        );
        assert!(n2.is_spent());
    }

    #[test]
    fn tampered_roster_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let (_, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let mut n0 = round1_commit::<Ristretto255, _>(1, &mut rng).unwrap();
        let n1 = round1_commit::<Ristretto255, _>(2, &mut rng).unwrap();
        let swapped = round1_commit::<Ristretto255, _>(1, &mut rng).unwrap();
        let roster = vec![swapped.commitment().clone(), n1.commitment().clone()];
        assert_eq!(
            round2_sign::<Ristretto255>(&key_shares[0], &mut n0, b"m", &roster),
            Err(SchnorrError::CommitmentMismatch(1))
        );
    }

    #[test]
    fn corrupted_share_fails_aggregate_verify_and_share_check() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let (pk, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let msg = b"payload";
        let (roster, mut shares, good) = sign_with_quorum(&key_shares, &[0, 1], msg, &mut rng);
        assert!(verify::<Ristretto255>(&pk, msg, &good));

        for (position, share) in shares.iter().enumerate() {
            assert!(verify_share::<Ristretto255>(
                &roster,
                share,
                msg,
                &key_shares[position].verification_share,
                &pk
            ));
        }

        shares[1].z = shares[1].z.add(&Scalar::one());
        assert!(!verify_share::<Ristretto255>(
            &roster,
            &shares[1],
            msg,
            &key_shares[1].verification_share,
            &pk
        ));
        let bad = aggregate::<Ristretto255>(&roster, &shares, msg).unwrap();
        assert!(!verify::<Ristretto255>(&pk, msg, &bad));
    }

    #[test]
    fn verify_share_rejects_foreign_roster() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let (pk, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let msg = b"payload";
        let (_, shares, _) = sign_with_quorum(&key_shares, &[0, 1], msg, &mut rng);
        let (other_roster, _, _) = sign_with_quorum(&key_shares, &[0, 1], msg, &mut rng);
        assert!(!verify_share::<Ristretto255>(
            &other_roster,
            &shares[0],
            msg,
            &key_shares[0].verification_share,
            &pk
        ));
    }

    #[test]
    fn single_signer_round_trip_and_shared_verifier() {
        let mut rng = ChaCha20Rng::seed_from_u64(18);
        let sk = random_nonzero_scalar::<Ristretto255, _>(&mut rng).unwrap();
        let pk = <Ristretto255 as Suite>::Element::base_pow(&sk);
        let sig = sign_single::<Ristretto255, _>(&sk, b"hello", &mut rng).unwrap();
        assert!(verify::<Ristretto255>(&pk, b"hello", &sig));
        assert!(!verify::<Ristretto255>(&pk, b"other", &sig));

        let other_pk = <Ristretto255 as Suite>::Element::base_pow(
            &random_nonzero_scalar::<Ristretto255, _>(&mut rng).unwrap(),
        );
        assert!(!verify::<Ristretto255>(&other_pk, b"hello", &sig));

        // Deterministic under a fixed seed.
        let mut a = ChaCha20Rng::seed_from_u64(99);
        let mut b = ChaCha20Rng::seed_from_u64(99);
        assert_eq!(
            sign_single::<Ristretto255, _>(&sk, b"x", &mut a).unwrap(),
            sign_single::<Ristretto255, _>(&sk, b"x", &mut b).unwrap()
        );

        // Same codec and equation as the threshold path.
        let (_, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let (_, _, agg) = sign_with_quorum(&key_shares, &[1, 2], b"hello", &mut rng);
        let reparsed = Signature::<Ristretto255>::from_bytes(&agg.to_bytes()).unwrap();
        assert_eq!(reparsed, agg);
        assert!(verify::<Ristretto255>(&key_shares[0].group_pk, b"hello", &reparsed));
    }

    #[test]
    fn commitment_and_signature_codecs_are_strict() {
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let sk = random_nonzero_scalar::<Ristretto255, _>(&mut rng).unwrap();
        let sig = sign_single::<Ristretto255, _>(&sk, b"m", &mut rng).unwrap();
        let bytes = sig.to_bytes();
        assert_eq!(bytes.len(), Signature::<Ristretto255>::wire_len());
        assert!(Signature::<Ristretto255>::from_bytes(&bytes[..63]).is_err());
        let mut bad_scalar = bytes.clone();
        for b in bad_scalar[32..].iter_mut() {
            *b = 0xff;
        }
        assert!(Signature::<Ristretto255>::from_bytes(&bad_scalar).is_err());
    }

    #[test]
    fn aggregate_checks_alignment() {
        let mut rng = ChaCha20Rng::seed_from_u64(20);
        let (_, key_shares) =
            deal_signing_key::<Ristretto255, _>(ThresholdParams::new(2, 3).unwrap(), &mut rng)
                .unwrap();
        let (roster, shares, _) = sign_with_quorum(&key_shares, &[0, 1], b"m", &mut rng);
        assert!(matches!(
            aggregate::<Ristretto255>(&roster, &shares[..1], b"m"),
            Err(SchnorrError::ShareCountMismatch { .. })
        ));
        let mut swapped = shares.clone();
        swapped.swap(0, 1);
        assert!(matches!(
            aggregate::<Ristretto255>(&roster, &swapped, b"m"),
            Err(SchnorrError::ShareIndexMismatch { .. })
        ));
    }

    #[test]
    fn fresh_nonces_every_round1() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let a = round1_commit::<Ristretto255, _>(1, &mut rng).unwrap();
        let b = round1_commit::<Ristretto255, _>(1, &mut rng).unwrap();
        assert_ne!(a.commitment().d, b.commitment().d);
        assert_ne!(a.commitment().e, b.commitment().e);
    }
}
