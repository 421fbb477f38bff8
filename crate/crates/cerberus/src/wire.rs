//! JSON bodies for the moderator HTTP endpoints.
//!
//! Every binary field is lowercase hex of the canonical encoding from
//! [`crate::group`]; field names are fixed and unknown fields are rejected.
//! The endpoint paths carry the schema version (`/v1/...`). Rejections are
//! `{"error": "<reason-code>"}` with a 4xx status.
//!
//! Round-1 and round-2 bodies carry arrays so a client can move a whole
//! token batch per round trip; a batch is checked atomically and a rejection
//! creates no sessions.

use crate::elgamal::{DecryptionShare, Identity, IdentityCiphertext, ID_LEN};
use crate::group::{Element, ElementOf, Scalar, Suite};
use crate::protocol::{MessageEnvelope, ReportRequest, Token, TokenRequest};
use crate::schnorr::{NonceCommitment, Signature, SignatureShare};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("field {field}: {reason}")]
pub struct WireError {
    pub field: &'static str,
    pub reason: String,
}

fn bad(field: &'static str, reason: impl ToString) -> WireError {
    WireError { field, reason: reason.to_string() }
}

fn decode_hex(field: &'static str, value: &str) -> Result<Vec<u8>, WireError> {
    hex::decode(value).map_err(|e| bad(field, e))
}

fn element<S: Suite>(field: &'static str, value: &str) -> Result<ElementOf<S>, WireError> {
    S::Element::decode(&decode_hex(field, value)?).map_err(|e| bad(field, e))
}

fn element_non_identity<S: Suite>(
    field: &'static str,
    value: &str,
) -> Result<ElementOf<S>, WireError> {
    S::Element::decode_non_identity(&decode_hex(field, value)?).map_err(|e| bad(field, e))
}

fn scalar<S: Suite>(field: &'static str, value: &str) -> Result<<S as Suite>::Scalar, WireError> {
    S::Scalar::decode(&decode_hex(field, value)?).map_err(|e| bad(field, e))
}

/// x1 as (c1, c2).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CiphertextWire {
    pub c1: String,
    pub c2: String,
}

impl CiphertextWire {
    pub fn from_typed<S: Suite>(x1: &IdentityCiphertext<S>) -> Self {
        CiphertextWire {
            c1: hex::encode(x1.c1.encode()),
            c2: hex::encode(x1.c2),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<IdentityCiphertext<S>, WireError> {
        let c1 = element_non_identity::<S>("x1.c1", &self.c1)?;
        let c2_bytes = decode_hex("x1.c2", &self.c2)?;
        let c2: [u8; ID_LEN] = c2_bytes
            .try_into()
            .map_err(|_| bad("x1.c2", format!("must be {ID_LEN} bytes")))?;
        Ok(IdentityCiphertext { c1, c2 })
    }
}

/// A Schnorr signature (R, z).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureWire {
    pub r: String,
    pub z: String,
}

impl SignatureWire {
    pub fn from_typed<S: Suite>(sig: &Signature<S>) -> Self {
        SignatureWire {
            r: hex::encode(sig.r.encode()),
            z: hex::encode(sig.z.encode()),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<Signature<S>, WireError> {
        Ok(Signature {
            r: element::<S>("sig.r", &self.r)?,
            z: scalar::<S>("sig.z", &self.z)?,
        })
    }
}

/// One token request: the encrypted identity together with the randomness
/// that lets a moderator re-derive it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenRequestWire {
    pub id_src: String,
    pub x1: CiphertextWire,
    pub r: String,
    pub pk_eph: String,
    pub issued_at: u64,
}

impl TokenRequestWire {
    pub fn from_typed<S: Suite>(req: &TokenRequest<S>) -> Self {
        TokenRequestWire {
            id_src: hex::encode(req.id_src.as_bytes()),
            x1: CiphertextWire::from_typed(&req.x1),
            r: hex::encode(req.r.encode()),
            pk_eph: hex::encode(req.pk_eph.encode()),
            issued_at: req.issued_at,
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<TokenRequest<S>, WireError> {
        let id_bytes = decode_hex("id_src", &self.id_src)?;
        let id: [u8; ID_LEN] = id_bytes
            .try_into()
            .map_err(|_| bad("id_src", format!("must be {ID_LEN} bytes")))?;
        Ok(TokenRequest {
            id_src: Identity(id),
            x1: self.x1.to_typed::<S>()?,
            r: scalar::<S>("r", &self.r)?,
            pk_eph: element_non_identity::<S>("pk_eph", &self.pk_eph)?,
            issued_at: self.issued_at,
        })
    }
}

/// One signer's round-1 commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitmentWire {
    pub index: u16,
    pub d: String,
    pub e: String,
}

impl CommitmentWire {
    pub fn from_typed<S: Suite>(c: &NonceCommitment<S>) -> Self {
        CommitmentWire {
            index: c.index,
            d: hex::encode(c.d.encode()),
            e: hex::encode(c.e.encode()),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<NonceCommitment<S>, WireError> {
        Ok(NonceCommitment {
            index: self.index,
            d: element_non_identity::<S>("commitment.d", &self.d)?,
            e: element_non_identity::<S>("commitment.e", &self.e)?,
        })
    }
}

/// POST /v1/token/round1 request body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round1Request {
    pub requests: Vec<TokenRequestWire>,
}

/// One opened signing session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round1Item {
    pub session_id: String,
    pub commitment: CommitmentWire,
}

/// POST /v1/token/round1 response body, aligned with the request array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round1Response {
    pub results: Vec<Round1Item>,
}

/// One signing session to complete, with the roster the client settled on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round2Item {
    pub session_id: String,
    pub roster: Vec<CommitmentWire>,
}

/// POST /v1/token/round2 request body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round2Request {
    pub items: Vec<Round2Item>,
}

/// One signature share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureShareWire {
    pub index: u16,
    pub z: String,
}

impl SignatureShareWire {
    pub fn from_typed<S: Suite>(share: &SignatureShare<S>) -> Self {
        SignatureShareWire {
            index: share.index,
            z: hex::encode(share.z.encode()),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<SignatureShare<S>, WireError> {
        Ok(SignatureShare {
            index: self.index,
            z: scalar::<S>("share.z", &self.z)?,
        })
    }
}

/// POST /v1/token/round2 response body, aligned with the request array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round2Response {
    pub shares: Vec<SignatureShareWire>,
}

/// A finalized token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenWire {
    pub x1: CiphertextWire,
    pub pk_eph: String,
    pub issued_at: u64,
    pub sig_mod: SignatureWire,
}

impl TokenWire {
    pub fn from_typed<S: Suite>(token: &Token<S>) -> Self {
        TokenWire {
            x1: CiphertextWire::from_typed(&token.x1),
            pk_eph: hex::encode(token.pk_eph.encode()),
            issued_at: token.issued_at,
            sig_mod: SignatureWire::from_typed(&token.sig_mod),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<Token<S>, WireError> {
        Ok(Token {
            x1: self.x1.to_typed::<S>()?,
            pk_eph: element_non_identity::<S>("pk_eph", &self.pk_eph)?,
            issued_at: self.issued_at,
            sig_mod: self.sig_mod.to_typed::<S>()?,
        })
    }
}

/// A full envelope: message, token, x2, sender signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeWire {
    pub message: String,
    pub token: TokenWire,
    pub x2: String,
    pub sig_src: SignatureWire,
}

impl EnvelopeWire {
    pub fn from_typed<S: Suite>(env: &MessageEnvelope<S>) -> Self {
        EnvelopeWire {
            message: hex::encode(&env.message),
            token: TokenWire::from_typed(&env.token),
            x2: hex::encode(&env.x2),
            sig_src: SignatureWire::from_typed(&env.sig_src),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<MessageEnvelope<S>, WireError> {
        let x2 = decode_hex("x2", &self.x2)?;
        if x2.len() != IdentityCiphertext::<S>::wire_len() {
            return Err(bad(
                "x2",
                format!("must be {} bytes", IdentityCiphertext::<S>::wire_len()),
            ));
        }
        Ok(MessageEnvelope {
            message: decode_hex("message", &self.message)?,
            token: self.token.to_typed::<S>()?,
            x2,
            sig_src: self.sig_src.to_typed::<S>()?,
        })
    }
}

/// POST /v1/report request body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRequestWire {
    pub envelope: EnvelopeWire,
}

impl ReportRequestWire {
    pub fn from_typed<S: Suite>(report: &ReportRequest<S>) -> Self {
        ReportRequestWire {
            envelope: EnvelopeWire::from_typed(&report.envelope),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<ReportRequest<S>, WireError> {
        Ok(ReportRequest {
            envelope: self.envelope.to_typed::<S>()?,
        })
    }
}

/// One decryption share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecryptionShareWire {
    pub index: u16,
    pub d: String,
}

impl DecryptionShareWire {
    pub fn from_typed<S: Suite>(share: &DecryptionShare<S>) -> Self {
        DecryptionShareWire {
            index: share.index,
            d: hex::encode(share.d.encode()),
        }
    }

    pub fn to_typed<S: Suite>(&self) -> Result<DecryptionShare<S>, WireError> {
        Ok(DecryptionShare {
            index: self.index,
            // A zero key share legally yields the identity element here.
            d: element::<S>("share.d", &self.d)?,
        })
    }
}

/// POST /v1/report response body: `vote` is `"approve"` (share present) or
/// `"deny"` (share absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportResponseWire {
    pub vote: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub share: Option<DecryptionShareWire>,
}

impl ReportResponseWire {
    pub fn approve(share: DecryptionShareWire) -> Self {
        ReportResponseWire { vote: "approve".into(), share: Some(share) }
    }

    pub fn deny() -> Self {
        ReportResponseWire { vote: "deny".into(), share: None }
    }
}

/// Error body carried by every rejection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorResponse {
    pub error: String,
}
