//! Prime-order group and scalar-field abstraction.
//!
//! All protocol code is generic over a [`Suite`], which fixes the group, its
//! scalar field, and the canonical byte encodings. Two suites ship with the
//! crate: [`Ristretto255`] for production and [`Toy11`], an order-11 subgroup
//! of the integers mod 23, small enough that tests can brute-force discrete
//! logs and enumerate every exponent.
//!
//! Canonical encodings are the only byte forms that are ever hashed or
//! signed: group elements use the suite's fixed-width compressed encoding,
//! scalars are fixed-width big-endian and zero-padded.

pub mod ristretto;
pub mod toy;

pub use ristretto::Ristretto255;
pub use toy::Toy11;

use rand::{CryptoRng, RngCore};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;
use std::fmt::Debug;
use std::str::FromStr;

/// Errors from group arithmetic, codecs, and entropy.
#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("entropy source failed: {0}")]
    Entropy(String),

    #[error("encoding has wrong length: expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },

    #[error("encoding is not a valid group element")]
    InvalidElement,

    #[error("scalar encoding is non-canonical or out of range")]
    InvalidScalar,

    #[error("identity element is not allowed here")]
    UnexpectedIdentity,

    #[error("unknown suite id {0:?}")]
    UnknownSuite(String),
}

/// An element of the scalar field Z_q.
pub trait Scalar: Sized + Clone + PartialEq + Eq + Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;

    /// Multiplicative inverse; `None` for zero.
    fn invert(&self) -> Option<Self>;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    /// Fixed-width big-endian, zero-padded.
    fn encode(&self) -> Vec<u8>;

    /// Strict decode: rejects wrong lengths and values ≥ q.
    fn decode(bytes: &[u8]) -> Result<Self, GroupError>;

    /// Wide reduction of 64 uniform bytes, interpreted big-endian.
    /// 512 bits ≥ |q| + 128 for every suite, so the result is
    /// statistically uniform.
    fn from_wide_bytes(wide: &[u8; 64]) -> Self;
}

/// An element of the prime-order group G, written multiplicatively: `mul`
/// is the group operation, `pow` is exponentiation by a scalar.
pub trait Element<Sc: Scalar>: Sized + Clone + PartialEq + Eq + Debug + Send + Sync {
    fn generator() -> Self;
    fn identity() -> Self;
    fn is_identity(&self) -> bool;

    fn mul(&self, rhs: &Self) -> Self;
    fn pow(&self, exp: &Sc) -> Self;

    /// `g^exp`; suites may use a fixed-base table.
    fn base_pow(exp: &Sc) -> Self {
        Self::generator().pow(exp)
    }

    /// Fixed-width compressed encoding.
    fn encode(&self) -> Vec<u8>;

    /// Strict decode with subgroup check. The identity is accepted (it is a
    /// legal decryption share); use [`decode_non_identity`] where it is not.
    fn decode(bytes: &[u8]) -> Result<Self, GroupError>;

    /// Decode that additionally rejects the identity, for positions where it
    /// is never legal: public keys and ciphertext bases.
    fn decode_non_identity(bytes: &[u8]) -> Result<Self, GroupError> {
        let e = Self::decode(bytes)?;
        if e.is_identity() {
            return Err(GroupError::UnexpectedIdentity);
        }
        Ok(e)
    }
}

/// A named suite fixing (G, q, g) and the canonical encodings.
pub trait Suite: Copy + Clone + Debug + PartialEq + Eq + Send + Sync + 'static {
    /// Stable identifier written into key files and rosters.
    const ID: &'static str;
    /// Canonical scalar encoding width in bytes.
    const SCALAR_LEN: usize;
    /// Canonical element encoding width in bytes.
    const ELEMENT_LEN: usize;

    type Scalar: Scalar;
    type Element: Element<Self::Scalar>;
}

pub type ScalarOf<S> = <S as Suite>::Scalar;
pub type ElementOf<S> = <S as Suite>::Element;

/// Runtime tag for the suites this build knows about, used when a file or
/// flag names the suite and the caller must dispatch to generic code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteId {
    Ristretto255,
    Toy11,
}

impl SuiteId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteId::Ristretto255 => Ristretto255::ID,
            SuiteId::Toy11 => Toy11::ID,
        }
    }
}

impl FromStr for SuiteId {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            x if x == Ristretto255::ID => Ok(SuiteId::Ristretto255),
            x if x == Toy11::ID => Ok(SuiteId::Toy11),
            other => Err(GroupError::UnknownSuite(other.to_string())),
        }
    }
}

/// Domain-separated extendable-output hash.
///
/// Realized as SHAKE256 over `len(tag) ∥ tag ∥ input`, so different tags
/// yield independent streams. Being an XOF, output at a shorter `out_len`
/// is a prefix of output at a longer one; callers that need unrelated
/// digests of one input must vary the tag, not the length.
pub fn xof(domain_tag: &[u8], input: &[u8], out_len: usize) -> Vec<u8> {
    assert!(out_len >= 1, "xof output length must be at least 1");
    let mut hasher = Shake256::default();
    hasher.update(&(domain_tag.len() as u64).to_be_bytes());
    hasher.update(domain_tag);
    hasher.update(input);
    let mut reader = hasher.finalize_xof();
    let mut out = vec![0u8; out_len];
    reader.read(&mut out);
    out
}

/// Hash to a uniform-looking scalar via 512-bit wide reduction.
pub fn hash_to_scalar<S: Suite>(domain_tag: &[u8], input: &[u8]) -> ScalarOf<S> {
    let wide = xof(domain_tag, input, 64);
    let mut buf = [0u8; 64];
    buf.copy_from_slice(&wide);
    S::Scalar::from_wide_bytes(&buf)
}

/// Uniform scalar in [0, q−1]. Entropy failures surface as errors; there is
/// no deterministic fallback.
pub fn random_scalar<S: Suite, R: RngCore + CryptoRng>(
    rng: &mut R,
) -> Result<ScalarOf<S>, GroupError> {
    let mut wide = [0u8; 64];
    rng.try_fill_bytes(&mut wide)
        .map_err(|e| GroupError::Entropy(e.to_string()))?;
    Ok(S::Scalar::from_wide_bytes(&wide))
}

/// Uniform nonzero scalar, for randomness and keys where zero is degenerate.
pub fn random_nonzero_scalar<S: Suite, R: RngCore + CryptoRng>(
    rng: &mut R,
) -> Result<ScalarOf<S>, GroupError> {
    // Zero has probability 1/q per draw; even in the toy suite 128 draws
    // failing is a broken rng, not bad luck.
    for _ in 0..128 {
        let s = random_scalar::<S, R>(rng)?;
        if !s.is_zero() {
            return Ok(s);
        }
    }
    Err(GroupError::Entropy("rng kept returning zero".into()))
}
