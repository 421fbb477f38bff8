//! On-disk key material: the per-moderator share file written by the
//! `keygen` ceremony and read by the daemon at startup.
//!
//! The layout is binary, fixed, and versioned:
//!
//! ```text
//! "CRBSHARE"  8 bytes   magic
//! version     u16 BE    currently 1
//! suite len   u8        followed by the suite id bytes
//! k, n, index u16 BE ×3
//! enc pk      element   joint encryption public key
//! enc share   scalar    this moderator's decryption-key share
//! sig pk      element   joint signing public key
//! sig share   scalar    this moderator's signing-key share
//! sig vshare  element   g^(sig share), published for share verification
//! ```
//!
//! All widths after the header are fixed by the suite, so the expected file
//! length is known exactly and anything else is rejected.

use crate::group::{Element, ElementOf, GroupError, Scalar, Suite, SuiteId};
use crate::schnorr::SigningKeyShare;
use crate::shamir::{SecretShare, ThresholdParams};
use std::path::Path;

const MAGIC: &[u8; 8] = b"CRBSHARE";
const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum KeyfileError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("not a share file (bad magic)")]
    BadMagic,

    #[error("unsupported share file version {0}")]
    BadVersion(u16),

    #[error("share file truncated or oversized: expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },

    #[error("share file is for suite {found}, expected {expected}")]
    SuiteMismatch { expected: String, found: String },

    #[error("share file index {found} does not match configured index {expected}")]
    IndexMismatch { expected: u16, found: u16 },

    #[error("invalid threshold parameters k={k}, n={n} in share file")]
    BadParams { k: u16, n: u16 },

    #[error("share file index {index} outside 1..={n}")]
    BadIndex { index: u16, n: u16 },

    #[error("signing share does not match its verification share")]
    InconsistentSigningShare,

    #[error("key ceremony failed: {0}")]
    Ceremony(String),

    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One moderator's complete key material.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareFile<S: Suite> {
    pub params: ThresholdParams,
    pub index: u16,
    pub enc_group_pk: ElementOf<S>,
    pub enc_share: SecretShare<S>,
    pub sig_group_pk: ElementOf<S>,
    pub sig_share: SigningKeyShare<S>,
}

impl<S: Suite> ShareFile<S> {
    fn total_len() -> usize {
        MAGIC.len() + 2 + 1 + S::ID.len() + 3 * 2 + 3 * S::ELEMENT_LEN + 2 * S::SCALAR_LEN
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::total_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_be_bytes());
        out.push(S::ID.len() as u8);
        out.extend_from_slice(S::ID.as_bytes());
        out.extend_from_slice(&self.params.k.to_be_bytes());
        out.extend_from_slice(&self.params.n.to_be_bytes());
        out.extend_from_slice(&self.index.to_be_bytes());
        out.extend_from_slice(&self.enc_group_pk.encode());
        out.extend_from_slice(&self.enc_share.value.encode());
        out.extend_from_slice(&self.sig_group_pk.encode());
        out.extend_from_slice(&self.sig_share.value.encode());
        out.extend_from_slice(&self.sig_share.verification_share.encode());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KeyfileError> {
        let (suite, body_at) = peek_header(bytes)?;
        if suite.as_str() != S::ID {
            return Err(KeyfileError::SuiteMismatch {
                expected: S::ID.to_string(),
                found: suite.as_str().to_string(),
            });
        }
        if bytes.len() != Self::total_len() {
            return Err(KeyfileError::BadLength {
                expected: Self::total_len(),
                got: bytes.len(),
            });
        }

        let mut cursor = Cursor { bytes, at: body_at };
        let k = cursor.take_u16();
        let n = cursor.take_u16();
        let index = cursor.take_u16();
        if k < 1 || k > n {
            return Err(KeyfileError::BadParams { k, n });
        }
        if index < 1 || index > n {
            return Err(KeyfileError::BadIndex { index, n });
        }

        let enc_group_pk = cursor.take_element::<S>()?;
        let enc_value = cursor.take_scalar::<S>()?;
        let sig_group_pk = cursor.take_element::<S>()?;
        let sig_value = cursor.take_scalar::<S>()?;
        let verification_share = cursor.take_element::<S>()?;
        debug_assert_eq!(cursor.at, bytes.len());

        if S::Element::base_pow(&sig_value) != verification_share {
            return Err(KeyfileError::InconsistentSigningShare);
        }

        Ok(ShareFile {
            params: ThresholdParams { k, n },
            index,
            enc_group_pk,
            enc_share: SecretShare { index, value: enc_value },
            sig_group_pk: sig_group_pk.clone(),
            sig_share: SigningKeyShare {
                index,
                value: sig_value,
                group_pk: sig_group_pk,
                verification_share,
            },
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), KeyfileError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| KeyfileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_from(path: &Path) -> Result<Self, KeyfileError> {
        let bytes = std::fs::read(path).map_err(|source| KeyfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take_u16(&mut self) -> u16 {
        let v = u16::from_be_bytes(self.bytes[self.at..self.at + 2].try_into().expect("2 bytes"));
        self.at += 2;
        v
    }

    fn take_element<S: Suite>(&mut self) -> Result<ElementOf<S>, GroupError> {
        let e = S::Element::decode(&self.bytes[self.at..self.at + S::ELEMENT_LEN])?;
        self.at += S::ELEMENT_LEN;
        Ok(e)
    }

    fn take_scalar<S: Suite>(&mut self) -> Result<<S as Suite>::Scalar, GroupError> {
        let s = S::Scalar::decode(&self.bytes[self.at..self.at + S::SCALAR_LEN])?;
        self.at += S::SCALAR_LEN;
        Ok(s)
    }
}

fn peek_header(bytes: &[u8]) -> Result<(SuiteId, usize), KeyfileError> {
    if bytes.len() < MAGIC.len() + 3 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(KeyfileError::BadMagic);
    }
    let version = u16::from_be_bytes(bytes[8..10].try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(KeyfileError::BadVersion(version));
    }
    let id_len = bytes[10] as usize;
    if bytes.len() < 11 + id_len {
        return Err(KeyfileError::BadMagic);
    }
    let id = std::str::from_utf8(&bytes[11..11 + id_len]).map_err(|_| KeyfileError::BadMagic)?;
    let suite: SuiteId = id.parse()?;
    Ok((suite, 11 + id_len))
}

/// The trusted-dealer ceremony: deal an encryption key and an independent
/// signing key for the same k-of-n parameters and bundle each party's
/// shares into one file's worth of material.
pub fn ceremony<S: Suite, R: rand::RngCore + rand::CryptoRng>(
    params: ThresholdParams,
    rng: &mut R,
) -> Result<Vec<ShareFile<S>>, KeyfileError> {
    if params.k < 1 || params.k > params.n {
        return Err(KeyfileError::BadParams { k: params.k, n: params.n });
    }
    let (enc_pk, enc_shares) = crate::elgamal::deal_decryption_key::<S, R>(params, rng)
        .map_err(|e| KeyfileError::Ceremony(e.to_string()))?;
    let (sig_pk, sig_shares) = crate::schnorr::deal_signing_key::<S, R>(params, rng)
        .map_err(|e| KeyfileError::Ceremony(e.to_string()))?;
    Ok(enc_shares
        .into_iter()
        .zip(sig_shares)
        .map(|(enc_share, sig_share)| ShareFile {
            params,
            index: enc_share.index,
            enc_group_pk: enc_pk.clone(),
            enc_share,
            sig_group_pk: sig_pk.clone(),
            sig_share,
        })
        .collect())
}

/// Read just enough of a share file to learn which suite it is for, so a
/// caller can dispatch into the right monomorphization.
pub fn peek_suite(path: &Path) -> Result<SuiteId, KeyfileError> {
    let bytes = std::fs::read(path).map_err(|source| KeyfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    peek_header(&bytes).map(|(suite, _)| suite)
}
