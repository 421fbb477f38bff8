//! The transport-agnostic protocol state machine: token construction and
//! finalization, message sealing, envelope verification along forwarding
//! chains, report voting, and identity recovery.
//!
//! A sender first obtains a token: an encrypted identity x1, a fresh
//! ephemeral public key, an issuance timestamp, and a threshold signature
//! σ_mod binding them together. Sending a message m consumes the token and
//! attaches x2 = x1-bytes ⊕ XOF(m) together with σ_src, the ephemeral-key
//! signature over x2. Any hop can verify the envelope; none learns the
//! sender. Reporting hands the envelope to the moderators, whose decryption
//! shares double as approval votes.

use crate::elgamal::{
    combine_shares, decryption_share, encrypt_identity, verify_encryption, DecryptionShare,
    ElgamalError, Identity, IdentityCiphertext,
};
use crate::group::{xof, Element, ElementOf, GroupError, ScalarOf, Suite};
use crate::schnorr::{
    aggregate, sign_single, verify, verify_share, NonceCommitment, SchnorrError, Signature,
    SignatureShare,
};
use crate::shamir::{SecretShare, ThresholdParams};
use rand::{CryptoRng, RngCore};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

const TRANSCRIPT_TAG: &[u8] = b"token";
const X2_TAG: &[u8] = b"x2-mask";

/// Default tolerance on a token request's issuance timestamp, seconds
/// either side of the moderator's clock.
pub const DEFAULT_SKEW_SECS: u64 = 300;

/// Wall-clock source, injected so tests can pin time.
pub trait Clock: Send + Sync {
    fn now_unix(&self) -> u64;
}

/// Real time.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_unix(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("system clock before the unix epoch")
            .as_secs()
    }
}

/// Fixed time for tests.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now_unix(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("{got} signature shares collected, {needed} required")]
    InsufficientShares { needed: usize, got: usize },

    #[error("signature share from moderator {index} is invalid")]
    InvalidShare { index: u16 },

    #[error("no verification share known for moderator {index}")]
    UnknownModerator { index: u16 },

    #[error("aggregated signature failed verification")]
    AggregateInvalid,

    #[error("token was already used to seal a message")]
    TokenReuse,

    #[error("ephemeral secret key does not match the token's public key")]
    EphemeralKeyMismatch,

    #[error("envelope bytes are malformed: {0}")]
    MalformedEnvelope(String),

    #[error(transparent)]
    Elgamal(#[from] ElgamalError),

    #[error(transparent)]
    Schnorr(#[from] SchnorrError),

    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Why a moderator refused to consider a token request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestReject {
    /// x1 is not an encryption of the claimed identity under the provided
    /// randomness.
    BadEncryption,
    /// issued_at falls outside the moderator's clock-skew window.
    StaleTimestamp,
}

impl RequestReject {
    pub fn code(&self) -> &'static str {
        match self {
            RequestReject::BadEncryption => "bad-encryption",
            RequestReject::StaleTimestamp => "stale-timestamp",
        }
    }
}

impl fmt::Display for RequestReject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Why an envelope failed verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeReject {
    /// σ_mod does not verify over the token transcript.
    BadToken,
    /// x2 does not equal x1-bytes ⊕ XOF(message).
    X2Mismatch,
    /// σ_src does not verify over x2 under the token's ephemeral key.
    BadSrcSig,
}

impl EnvelopeReject {
    pub fn code(&self) -> &'static str {
        match self {
            EnvelopeReject::BadToken => "bad-token",
            EnvelopeReject::X2Mismatch => "x2-mismatch",
            EnvelopeReject::BadSrcSig => "bad-src-sig",
        }
    }
}

impl fmt::Display for EnvelopeReject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A finalized sender token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<S: Suite> {
    pub x1: IdentityCiphertext<S>,
    pub pk_eph: ElementOf<S>,
    pub issued_at: u64,
    pub sig_mod: Signature<S>,
}

impl<S: Suite> Token<S> {
    pub const fn wire_len() -> usize {
        IdentityCiphertext::<S>::wire_len() + S::ELEMENT_LEN + 8 + Signature::<S>::wire_len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.x1.to_bytes();
        out.extend_from_slice(&self.pk_eph.encode());
        out.extend_from_slice(&self.issued_at.to_be_bytes());
        out.extend_from_slice(&self.sig_mod.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        if bytes.len() != Self::wire_len() {
            return Err(GroupError::Length {
                expected: Self::wire_len(),
                got: bytes.len(),
            }
            .into());
        }
        let x1_len = IdentityCiphertext::<S>::wire_len();
        let x1 = IdentityCiphertext::from_bytes(&bytes[..x1_len])?;
        let mut at = x1_len;
        let pk_eph = S::Element::decode_non_identity(&bytes[at..at + S::ELEMENT_LEN])?;
        at += S::ELEMENT_LEN;
        let issued_at = u64::from_be_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        at += 8;
        let sig_mod = Signature::from_bytes(&bytes[at..])?;
        Ok(Token { x1, pk_eph, issued_at, sig_mod })
    }
}

/// A message plus its franking metadata, carried hop to hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageEnvelope<S: Suite> {
    pub message: Vec<u8>,
    pub token: Token<S>,
    /// x1-bytes ⊕ XOF("x2-mask", message); same width as x1-bytes.
    pub x2: Vec<u8>,
    pub sig_src: Signature<S>,
}

impl<S: Suite> MessageEnvelope<S> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.message.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.message);
        out.extend_from_slice(&self.token.to_bytes());
        out.extend_from_slice(&self.x2);
        out.extend_from_slice(&self.sig_src.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let malformed = |what: &str| ProtocolError::MalformedEnvelope(what.to_string());
        if bytes.len() < 8 {
            return Err(malformed("too short for a length header"));
        }
        let msg_len = u64::from_be_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
        let x1_len = IdentityCiphertext::<S>::wire_len();
        let fixed = Token::<S>::wire_len() + x1_len + Signature::<S>::wire_len();
        let expected = 8usize
            .checked_add(msg_len)
            .and_then(|n| n.checked_add(fixed))
            .ok_or_else(|| malformed("length overflow"))?;
        if bytes.len() != expected {
            return Err(malformed("total length does not match the header"));
        }
        let mut at = 8;
        let message = bytes[at..at + msg_len].to_vec();
        at += msg_len;
        let token = Token::from_bytes(&bytes[at..at + Token::<S>::wire_len()])?;
        at += Token::<S>::wire_len();
        let x2 = bytes[at..at + x1_len].to_vec();
        at += x1_len;
        let sig_src = Signature::from_bytes(&bytes[at..])?;
        Ok(MessageEnvelope { message, token, x2, sig_src })
    }
}

/// What a client sends each moderator to get a token signed: it discloses
/// the encryption randomness so the moderator can re-derive x1 and check it
/// hides the claimed identity and nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRequest<S: Suite> {
    pub id_src: Identity,
    pub x1: IdentityCiphertext<S>,
    pub r: ScalarOf<S>,
    pub pk_eph: ElementOf<S>,
    pub issued_at: u64,
}

/// A report is the envelope, resubmitted verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRequest<S: Suite> {
    pub envelope: MessageEnvelope<S>,
}

/// Per-moderator judgment of whether a reported message warrants revealing
/// its sender. Deterministic for a fixed configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VotePolicy {
    AlwaysApprove,
    AlwaysDeny,
    /// Approve iff the message contains any of these substrings.
    KeywordList(Vec<String>),
}

impl VotePolicy {
    pub fn approves(&self, message: &[u8], _token_issued_at: u64) -> bool {
        match self {
            VotePolicy::AlwaysApprove => true,
            VotePolicy::AlwaysDeny => false,
            VotePolicy::KeywordList(words) => {
                let text = String::from_utf8_lossy(message);
                words.iter().any(|w| text.contains(w.as_str()))
            }
        }
    }
}

impl FromStr for VotePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "always-approve" => Ok(VotePolicy::AlwaysApprove),
            "always-deny" => Ok(VotePolicy::AlwaysDeny),
            other => match other.strip_prefix("keywords:") {
                Some(list) if !list.is_empty() => Ok(VotePolicy::KeywordList(
                    list.split(',').map(str::to_string).collect(),
                )),
                _ => Err(format!(
                    "unknown policy {other:?}; expected always-approve, always-deny, or keywords:a,b"
                )),
            },
        }
    }
}

impl fmt::Display for VotePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VotePolicy::AlwaysApprove => f.write_str("always-approve"),
            VotePolicy::AlwaysDeny => f.write_str("always-deny"),
            VotePolicy::KeywordList(words) => write!(f, "keywords:{}", words.join(",")),
        }
    }
}

/// Outcome of a moderator's look at a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoteOutcome<S: Suite> {
    /// The envelope checks out and the policy approves: here is d_i.
    Approve(DecryptionShare<S>),
    /// The envelope checks out but the policy declines to act.
    Deny,
    /// The envelope is invalid; no share under any policy.
    Reject(EnvelopeReject),
}

/// Client-side ledger of consumed tokens, keyed by ephemeral public key.
/// Keeps an honest sender from attaching one token to two messages; a
/// dishonest sender's reuse is detectable downstream (two envelopes sharing
/// a pk_eph) but not prevented here.
#[derive(Debug, Default)]
pub struct ConsumedTokens {
    spent: HashSet<Vec<u8>>,
}

impl ConsumedTokens {
    pub fn new() -> Self {
        Self::default()
    }

    fn consume(&mut self, pk_eph: &[u8]) -> Result<(), ProtocolError> {
        if !self.spent.insert(pk_eph.to_vec()) {
            return Err(ProtocolError::TokenReuse);
        }
        Ok(())
    }
}

/// Start a token: draw r and the ephemeral keypair, encrypt the identity.
/// The ephemeral secret never leaves the client; it is returned alongside
/// the request, not inside it.
pub fn begin_token<S: Suite, R: RngCore + CryptoRng>(
    id_src: &Identity,
    pk_mod: &ElementOf<S>,
    clock: &dyn Clock,
    rng: &mut R,
) -> Result<(TokenRequest<S>, ScalarOf<S>), ProtocolError> {
    let r = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let sk_eph = crate::group::random_nonzero_scalar::<S, R>(rng)?;
    let x1 = encrypt_identity::<S>(pk_mod, id_src, &r)?;
    let request = TokenRequest {
        id_src: *id_src,
        x1,
        r,
        pk_eph: S::Element::base_pow(&sk_eph),
        issued_at: clock.now_unix(),
    };
    Ok((request, sk_eph))
}

/// Moderator-side gate for token requests: x1 must be a valid encryption of
/// the claimed identity with the provided randomness, and issued_at must be
/// within ±skew of the moderator's clock.
pub fn moderator_check_token_request<S: Suite>(
    req: &TokenRequest<S>,
    pk_mod: &ElementOf<S>,
    now_unix: u64,
    skew_secs: u64,
) -> Result<(), RequestReject> {
    if !verify_encryption::<S>(pk_mod, &req.id_src, &req.r, &req.x1) {
        return Err(RequestReject::BadEncryption);
    }
    if req.issued_at.abs_diff(now_unix) > skew_secs {
        return Err(RequestReject::StaleTimestamp);
    }
    Ok(())
}

/// The exact bytes σ_mod signs: tag ∥ x1-bytes ∥ encode(pk_eph) ∥ issued_at.
/// Every field is fixed-width per suite, so the encoding is injective.
pub fn token_transcript<S: Suite>(
    x1: &IdentityCiphertext<S>,
    pk_eph: &ElementOf<S>,
    issued_at: u64,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        TRANSCRIPT_TAG.len() + IdentityCiphertext::<S>::wire_len() + S::ELEMENT_LEN + 8,
    );
    out.extend_from_slice(TRANSCRIPT_TAG);
    out.extend_from_slice(&x1.to_bytes());
    out.extend_from_slice(&pk_eph.encode());
    out.extend_from_slice(&issued_at.to_be_bytes());
    out
}

/// Combine at least k verified signature shares into a token. Each share is
/// checked against its signer's verification share first, so a corrupt
/// moderator is named rather than silently poisoning the aggregate. The
/// encryption randomness r is deliberately not part of the token.
pub fn finalize_token<S: Suite>(
    req: &TokenRequest<S>,
    roster: &[NonceCommitment<S>],
    sig_shares: &[SignatureShare<S>],
    verification_shares: &[(u16, ElementOf<S>)],
    group_pk: &ElementOf<S>,
    k: u16,
) -> Result<Token<S>, ProtocolError> {
    if sig_shares.len() < k as usize {
        return Err(ProtocolError::InsufficientShares {
            needed: k as usize,
            got: sig_shares.len(),
        });
    }
    let transcript = token_transcript::<S>(&req.x1, &req.pk_eph, req.issued_at);
    for share in sig_shares {
        let vs = verification_shares
            .iter()
            .find(|(i, _)| *i == share.index)
            .map(|(_, vs)| vs)
            .ok_or(ProtocolError::UnknownModerator { index: share.index })?;
        if !verify_share::<S>(roster, share, &transcript, vs, group_pk) {
            return Err(ProtocolError::InvalidShare { index: share.index });
        }
    }
    let sig_mod = aggregate::<S>(roster, sig_shares, &transcript)?;
    if !verify::<S>(group_pk, &transcript, &sig_mod) {
        return Err(ProtocolError::AggregateInvalid);
    }
    Ok(Token {
        x1: req.x1.clone(),
        pk_eph: req.pk_eph.clone(),
        issued_at: req.issued_at,
        sig_mod,
    })
}

/// Stretch the message hash to the width of x1-bytes and XOR.
fn x2_bytes<S: Suite>(x1: &IdentityCiphertext<S>, message: &[u8]) -> Vec<u8> {
    let x1b = x1.to_bytes();
    let mask = xof(X2_TAG, message, x1b.len());
    x1b.iter().zip(mask.iter()).map(|(a, b)| a ^ b).collect()
}

/// Consume a token to seal one message: x2 = x1-bytes ⊕ XOF(m) and
/// σ_src = Sign_{sk_eph}(x2).
pub fn seal_message<S: Suite, R: RngCore + CryptoRng>(
    message: &[u8],
    token: &Token<S>,
    sk_eph: &ScalarOf<S>,
    ledger: &mut ConsumedTokens,
    rng: &mut R,
) -> Result<MessageEnvelope<S>, ProtocolError> {
    if S::Element::base_pow(sk_eph) != token.pk_eph {
        return Err(ProtocolError::EphemeralKeyMismatch);
    }
    let x2 = x2_bytes::<S>(&token.x1, message);
    let sig_src = sign_single::<S, R>(sk_eph, &x2, rng)?;
    // Consume last: a seal that failed earlier must not burn the token.
    ledger.consume(&token.pk_eph.encode())?;
    Ok(MessageEnvelope {
        message: message.to_vec(),
        token: token.clone(),
        x2,
        sig_src,
    })
}

/// Anyone along the forwarding chain can check an envelope: the token's
/// threshold signature, the x2 binding, and the sender signature, in that
/// order.
pub fn verify_envelope<S: Suite>(
    env: &MessageEnvelope<S>,
    group_pk: &ElementOf<S>,
) -> Result<(), EnvelopeReject> {
    let transcript =
        token_transcript::<S>(&env.token.x1, &env.token.pk_eph, env.token.issued_at);
    if !verify::<S>(group_pk, &transcript, &env.token.sig_mod) {
        return Err(EnvelopeReject::BadToken);
    }
    if x2_bytes::<S>(&env.token.x1, &env.message) != env.x2 {
        return Err(EnvelopeReject::X2Mismatch);
    }
    if !verify::<S>(&env.token.pk_eph, &env.x2, &env.sig_src) {
        return Err(EnvelopeReject::BadSrcSig);
    }
    Ok(())
}

/// One moderator's full treatment of a report: an invalid envelope never
/// earns a share, a valid one earns a share only if the policy approves.
pub fn moderator_vote<S: Suite>(
    report: &ReportRequest<S>,
    key_share: &SecretShare<S>,
    policy: &VotePolicy,
    group_pk: &ElementOf<S>,
) -> VoteOutcome<S> {
    if let Err(reason) = verify_envelope::<S>(&report.envelope, group_pk) {
        return VoteOutcome::Reject(reason);
    }
    let token = &report.envelope.token;
    if !policy.approves(&report.envelope.message, token.issued_at) {
        return VoteOutcome::Deny;
    }
    match decryption_share::<S>(key_share, &token.x1.c1) {
        Ok(share) => VoteOutcome::Approve(share),
        // c1 was validated as non-identity when the ciphertext was built or
        // decoded; treat a failure as a malformed token all the same.
        Err(_) => VoteOutcome::Reject(EnvelopeReject::BadToken),
    }
}

/// Recombine k or more approval shares into the sender identity.
pub fn recover_identity<S: Suite>(
    report: &ReportRequest<S>,
    shares: &[DecryptionShare<S>],
    params: ThresholdParams,
) -> Result<Identity, ProtocolError> {
    Ok(combine_shares::<S>(
        shares,
        &report.envelope.token.x1.c2,
        params.k,
    )?)
}
