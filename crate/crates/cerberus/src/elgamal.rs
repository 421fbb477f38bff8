//! Threshold ElGamal over the sender identity.
//!
//! The identity ciphertext is hashed ElGamal: c1 = g^r and c2 = id ⊕
//! XOF("id-mask", pk^r). Each moderator holding a Shamir share s_i of the
//! decryption key contributes d_i = c1^{s_i}; any k such shares recombine in
//! the exponent with Lagrange coefficients, since Π d_i^{λ_i} = c1^{Σ λ_i s_i}
//! = c1^{sk} = pk^r, and the mask falls out.
//!
//! Decryption shares carry no correctness proof: a moderator submitting a
//! bogus d_i makes the combination silently yield a wrong identity. Detecting
//! that is out of scope here and called out in the crate documentation.

use crate::group::{xof, Element, ElementOf, GroupError, ScalarOf, Suite};
use crate::shamir::{self, lagrange_at_zero, SecretShare, ShamirError, ThresholdParams};
use rand::{CryptoRng, RngCore};

/// Fixed identity width in bytes; every mask and XOR in the protocol assumes
/// this so the wire format stays static.
pub const ID_LEN: usize = 32;

const MASK_TAG: &[u8] = b"id-mask";
const DIGEST_TAG: &[u8] = b"identity";

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ElgamalError {
    #[error("encryption randomness must be nonzero")]
    ZeroRandomness,

    #[error("ciphertext base must not be the identity element")]
    IdentityBase,

    #[error("public key must not be the identity element")]
    IdentityKey,

    #[error("{got} decryption shares given, {needed} required")]
    InsufficientShares { needed: usize, got: usize },

    #[error("identity payload too long: {0} bytes (max {max})", max = ID_LEN - 1)]
    OversizedIdentity(usize),

    #[error(transparent)]
    Shamir(#[from] ShamirError),

    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A sender identity, always exactly [`ID_LEN`] bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Identity(pub [u8; ID_LEN]);

impl Identity {
    /// The standard construction: a 32-byte digest of an arbitrary account
    /// identifier, so deployments are not constrained in what they call a
    /// user.
    pub fn digest(account: &[u8]) -> Self {
        let mut id = [0u8; ID_LEN];
        id.copy_from_slice(&xof(DIGEST_TAG, account, ID_LEN));
        Identity(id)
    }

    /// Embed a short raw identifier reversibly: one length byte, the bytes,
    /// zero padding.
    pub fn from_short(raw: &[u8]) -> Result<Self, ElgamalError> {
        if raw.len() > ID_LEN - 1 {
            return Err(ElgamalError::OversizedIdentity(raw.len()));
        }
        let mut id = [0u8; ID_LEN];
        id[0] = raw.len() as u8;
        id[1..1 + raw.len()].copy_from_slice(raw);
        Ok(Identity(id))
    }

    pub fn as_bytes(&self) -> &[u8; ID_LEN] {
        &self.0
    }
}

/// ElGamal encryption of an identity: (g^r, id ⊕ XOF(pk^r)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCiphertext<S: Suite> {
    pub c1: ElementOf<S>,
    pub c2: [u8; ID_LEN],
}

impl<S: Suite> IdentityCiphertext<S> {
    /// Canonical wire form encode(c1) ∥ c2. These exact bytes feed the token
    /// signing transcript and the envelope XOR.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.c1.encode();
        out.extend_from_slice(&self.c2);
        out
    }

    pub const fn wire_len() -> usize {
        S::ELEMENT_LEN + ID_LEN
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ElgamalError> {
        if bytes.len() != Self::wire_len() {
            return Err(GroupError::Length {
                expected: Self::wire_len(),
                got: bytes.len(),
            }
            .into());
        }
        let c1 = S::Element::decode_non_identity(&bytes[..S::ELEMENT_LEN])?;
        let mut c2 = [0u8; ID_LEN];
        c2.copy_from_slice(&bytes[S::ELEMENT_LEN..]);
        Ok(IdentityCiphertext { c1, c2 })
    }
}

/// One moderator's contribution to decryption: d = c1^{s_i}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecryptionShare<S: Suite> {
    pub index: u16,
    pub d: ElementOf<S>,
}

fn xor_mask(point: &impl AsRef<[u8]>, data: &[u8; ID_LEN]) -> [u8; ID_LEN] {
    let mask = xof(MASK_TAG, point.as_ref(), ID_LEN);
    let mut out = [0u8; ID_LEN];
    for (o, (m, d)) in out.iter_mut().zip(mask.iter().zip(data.iter())) {
        *o = m ^ d;
    }
    out
}

/// Deal a fresh decryption key: returns the joint public key the clients
/// encrypt to and one Shamir share per moderator. The full secret exists
/// only inside this call.
pub fn deal_decryption_key<S: Suite, R: RngCore + CryptoRng>(
    params: ThresholdParams,
    rng: &mut R,
) -> Result<(ElementOf<S>, Vec<SecretShare<S>>), ElgamalError> {
    let sk = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let pk = S::Element::base_pow(&sk);
    let shares = shamir::deal::<S, R>(&sk, params, rng)?;
    Ok((pk, shares))
}

/// Encrypt `id` under the moderators' joint public key with randomness `r`.
/// Deterministic given (pk, id, r); r = 0 would leak the mask key and is
/// rejected.
pub fn encrypt_identity<S: Suite>(
    pk_mod: &ElementOf<S>,
    id: &Identity,
    r: &ScalarOf<S>,
) -> Result<IdentityCiphertext<S>, ElgamalError> {
    if crate::group::Scalar::is_zero(r) {
        return Err(ElgamalError::ZeroRandomness);
    }
    if pk_mod.is_identity() {
        return Err(ElgamalError::IdentityKey);
    }
    let c1 = S::Element::base_pow(r);
    let shared = pk_mod.pow(r);
    let c2 = xor_mask(&shared.encode(), id.as_bytes());
    Ok(IdentityCiphertext { c1, c2 })
}

/// Check that `x1` really is the encryption of `id` with randomness `r`:
/// recompute and compare field by field. Never errors; malformed input is
/// simply not a valid encryption.
pub fn verify_encryption<S: Suite>(
    pk_mod: &ElementOf<S>,
    id: &Identity,
    r: &ScalarOf<S>,
    x1: &IdentityCiphertext<S>,
) -> bool {
    match encrypt_identity::<S>(pk_mod, id, r) {
        Ok(expected) => expected == *x1,
        Err(_) => false,
    }
}

/// Produce this moderator's decryption share for a ciphertext base.
/// A share value of zero yields the identity element; that is legal and the
/// combiner handles it.
pub fn decryption_share<S: Suite>(
    share: &SecretShare<S>,
    c1: &ElementOf<S>,
) -> Result<DecryptionShare<S>, ElgamalError> {
    if c1.is_identity() {
        return Err(ElgamalError::IdentityBase);
    }
    Ok(DecryptionShare {
        index: share.index,
        d: c1.pow(&share.value),
    })
}

/// Recombine at least `k` decryption shares and strip the mask:
/// id = XOF(Π d_i^{λ_i}) ⊕ c2.
pub fn combine_shares<S: Suite>(
    shares: &[DecryptionShare<S>],
    c2: &[u8; ID_LEN],
    k: u16,
) -> Result<Identity, ElgamalError> {
    if shares.len() < k as usize {
        return Err(ElgamalError::InsufficientShares {
            needed: k as usize,
            got: shares.len(),
        });
    }
    let indices: Vec<u16> = shares.iter().map(|s| s.index).collect();
    let lambdas = lagrange_at_zero::<S>(&indices)?;
    let mut acc = S::Element::identity();
    for (share, lambda) in shares.iter().zip(&lambdas) {
        acc = acc.mul(&share.d.pow(lambda));
    }
    Ok(Identity(xor_mask(&acc.encode(), c2)))
}
