//! The moderator daemon: one party's key shares behind three HTTP
//! endpoints.
//!
//! * `POST /v1/token/round1` — verify a batch of token requests, open one
//!   signing session per request, return nonce commitments.
//! * `POST /v1/token/round2` — given session ids and the roster the client
//!   settled on, return signature shares. Sessions are single-use.
//! * `POST /v1/report` — verify a reported envelope, apply the local vote
//!   policy, and return a decryption share or a denial.
//!
//! [`ModeratorCore`] implements the handlers over the wire DTOs and knows
//! nothing about HTTP; the in-memory client transport calls it directly and
//! [`serve`] wraps the same core in a real server. The daemon never logs
//! claimed identities, request randomness, or anything it decrypts.

mod server;
mod session;

pub use server::{serve, DaemonHandle};
pub use session::{SessionError, SessionStore, SESSION_TTL};

use crate::group::{Ristretto255, Suite, SuiteId, Toy11};
use crate::keyfile::{KeyfileError, ShareFile};
use crate::protocol::{
    moderator_check_token_request, moderator_vote, token_transcript, Clock, SystemClock,
    TokenRequest, VoteOutcome, VotePolicy, DEFAULT_SKEW_SECS,
};
use crate::schnorr::{round1_commit, round2_sign, SchnorrError};
use crate::wire::{
    CommitmentWire, DecryptionShareWire, ReportRequestWire, ReportResponseWire, Round1Item,
    Round1Request, Round1Response, Round2Request, Round2Response, SignatureShareWire,
};
use rand::rngs::OsRng;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const DEFAULT_NONCE_POOL: usize = 4096;
const MALFORMED: &str = "malformed-body";

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("failed to bind {listen}: {reason}")]
    Bind { listen: String, reason: String },

    #[error(transparent)]
    Keyfile(#[from] KeyfileError),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A request the daemon refuses, with the reason code that goes on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub code: String,
}

impl Rejection {
    fn new(code: impl Into<String>) -> Self {
        Rejection { code: code.into() }
    }
}

/// Daemon settings: one file, overridable per flag.
#[derive(Debug, Clone)]
pub struct ModeratorConfig {
    /// Cross-checked against the share file when set.
    pub index: Option<u16>,
    pub listen: String,
    pub share_file: PathBuf,
    pub policy: VotePolicy,
    pub skew_secs: u64,
    pub nonce_pool_size: usize,
}

impl ModeratorConfig {
    pub fn new(share_file: impl Into<PathBuf>, listen: impl Into<String>) -> Self {
        ModeratorConfig {
            index: None,
            listen: listen.into(),
            share_file: share_file.into(),
            policy: VotePolicy::AlwaysApprove,
            skew_secs: DEFAULT_SKEW_SECS,
            nonce_pool_size: DEFAULT_NONCE_POOL,
        }
    }

    pub fn load(path: &Path) -> Result<Self, NodeError> {
        let text = std::fs::read_to_string(path).map_err(|source| NodeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| NodeError::Config(format!("{}: {e}", path.display())))?;
        let policy = match file.policy {
            Some(s) => s.parse().map_err(NodeError::Config)?,
            None => VotePolicy::AlwaysApprove,
        };
        let config = ModeratorConfig {
            index: file.index,
            listen: file.listen.unwrap_or_else(|| "127.0.0.1:9100".into()),
            share_file: PathBuf::from(file.share_file),
            policy,
            skew_secs: file.skew_secs.unwrap_or(DEFAULT_SKEW_SECS),
            nonce_pool_size: file.nonce_pool_size.unwrap_or(DEFAULT_NONCE_POOL),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), NodeError> {
        if self.nonce_pool_size < 1 {
            return Err(NodeError::Config("nonce_pool_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    index: Option<u16>,
    listen: Option<String>,
    share_file: String,
    policy: Option<String>,
    skew_secs: Option<u64>,
    nonce_pool_size: Option<usize>,
}

/// One moderator's state and request handlers, transport-agnostic.
pub struct ModeratorCore<S: Suite> {
    share: ShareFile<S>,
    policy: VotePolicy,
    skew_secs: u64,
    sessions: SessionStore<S>,
    clock: Box<dyn Clock>,
}

impl<S: Suite> ModeratorCore<S> {
    pub fn new(share: ShareFile<S>, policy: VotePolicy, skew_secs: u64) -> Self {
        Self::with_clock(
            share,
            policy,
            skew_secs,
            DEFAULT_NONCE_POOL,
            Box::new(SystemClock),
        )
    }

    pub fn with_clock(
        share: ShareFile<S>,
        policy: VotePolicy,
        skew_secs: u64,
        nonce_pool_size: usize,
        clock: Box<dyn Clock>,
    ) -> Self {
        ModeratorCore {
            share,
            policy,
            skew_secs,
            sessions: SessionStore::new(nonce_pool_size, SESSION_TTL),
            clock,
        }
    }

    pub fn index(&self) -> u16 {
        self.share.index
    }

    pub fn open_sessions(&self) -> usize {
        self.sessions.live_count()
    }

    /// Verify every request in the batch, then open sessions atomically.
    /// A single bad request rejects the whole batch and opens nothing.
    pub fn handle_round1(&self, body: &Round1Request) -> Result<Round1Response, Rejection> {
        if body.requests.is_empty() {
            return Err(Rejection::new(MALFORMED));
        }
        let mut typed: Vec<TokenRequest<S>> = Vec::with_capacity(body.requests.len());
        for wire in &body.requests {
            typed.push(wire.to_typed::<S>().map_err(|_| Rejection::new(MALFORMED))?);
        }
        let now = self.clock.now_unix();
        for request in &typed {
            moderator_check_token_request::<S>(
                request,
                &self.share.enc_group_pk,
                now,
                self.skew_secs,
            )
            .map_err(|reason| Rejection::new(reason.code()))?;
        }

        let mut items = Vec::with_capacity(typed.len());
        for request in typed {
            let nonces = round1_commit::<S, _>(self.share.index, &mut OsRng)
                .map_err(|_| Rejection::new("entropy-failure"))?;
            items.push((request, nonces));
        }
        let commitments: Vec<CommitmentWire> = items
            .iter()
            .map(|(_, nonces)| CommitmentWire::from_typed(nonces.commitment()))
            .collect();
        let ids = self
            .sessions
            .open_batch(items)
            .map_err(|e| Rejection::new(e.code()))?;
        Ok(Round1Response {
            results: ids
                .into_iter()
                .zip(commitments)
                .map(|(id, commitment)| Round1Item {
                    session_id: hex::encode(id),
                    commitment,
                })
                .collect(),
        })
    }

    /// Complete signing for each listed session. Each session is consumed
    /// on first touch, so retrying a failed batch requires a fresh round 1.
    pub fn handle_round2(&self, body: &Round2Request) -> Result<Round2Response, Rejection> {
        if body.items.is_empty() {
            return Err(Rejection::new(MALFORMED));
        }
        let mut shares = Vec::with_capacity(body.items.len());
        for item in &body.items {
            let id_bytes =
                hex::decode(&item.session_id).map_err(|_| Rejection::new(MALFORMED))?;
            let id: session::SessionId =
                id_bytes.try_into().map_err(|_| Rejection::new(MALFORMED))?;
            let mut roster = Vec::with_capacity(item.roster.len());
            for c in &item.roster {
                roster.push(c.to_typed::<S>().map_err(|_| Rejection::new(MALFORMED))?);
            }
            let (request, mut nonces) = self
                .sessions
                .consume(&id)
                .map_err(|e| Rejection::new(e.code()))?;
            let transcript =
                token_transcript::<S>(&request.x1, &request.pk_eph, request.issued_at);
            let share = round2_sign::<S>(&self.share.sig_share, &mut nonces, &transcript, &roster)
                .map_err(|e| match e {
                    SchnorrError::SignerNotInRoster(_)
                    | SchnorrError::CommitmentMismatch(_)
                    | SchnorrError::DuplicateIndex(_)
                    | SchnorrError::IdentityCommitment(_) => Rejection::new("roster-mismatch"),
                    _ => Rejection::new("signing-failure"),
                })?;
            shares.push(SignatureShareWire::from_typed(&share));
        }
        Ok(Round2Response { shares })
    }

    /// Stateless report handling: same report, same answer, any number of
    /// times.
    pub fn handle_report(&self, body: &ReportRequestWire) -> Result<ReportResponseWire, Rejection> {
        let report = body
            .to_typed::<S>()
            .map_err(|_| Rejection::new(MALFORMED))?;
        match moderator_vote::<S>(
            &report,
            &self.share.enc_share,
            &self.policy,
            &self.share.sig_group_pk,
        ) {
            VoteOutcome::Approve(share) => Ok(ReportResponseWire::approve(
                DecryptionShareWire::from_typed(&share),
            )),
            VoteOutcome::Deny => Ok(ReportResponseWire::deny()),
            VoteOutcome::Reject(reason) => Err(Rejection::new(reason.code())),
        }
    }
}

/// Load the share file named by the config, cross-check it, and start the
/// daemon for whichever suite the file was dealt for.
pub fn run_from_config(config: &ModeratorConfig) -> Result<DaemonHandle, NodeError> {
    config.validate()?;
    match crate::keyfile::peek_suite(&config.share_file)? {
        SuiteId::Ristretto255 => run_suite::<Ristretto255>(config),
        SuiteId::Toy11 => run_suite::<Toy11>(config),
    }
}

fn run_suite<S: Suite>(config: &ModeratorConfig) -> Result<DaemonHandle, NodeError> {
    let share = ShareFile::<S>::read_from(&config.share_file)?;
    if let Some(expected) = config.index {
        if share.index != expected {
            return Err(KeyfileError::IndexMismatch {
                expected,
                found: share.index,
            }
            .into());
        }
    }
    let core = Arc::new(ModeratorCore::with_clock(
        share,
        config.policy.clone(),
        config.skew_secs,
        config.nonce_pool_size,
        Box::new(SystemClock),
    ));
    serve(core, &config.listen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::deal_decryption_key;
    use crate::protocol::{begin_token, FixedClock};
    use crate::schnorr::deal_signing_key;
    use crate::shamir::ThresholdParams;
    use crate::wire::{Round2Item, TokenRequestWire};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn cores(k: u16, n: u16, rng: &mut ChaCha20Rng) -> Vec<ModeratorCore<Toy11>> {
        let params = ThresholdParams::new(k, n).unwrap();
        let (enc_pk, enc_shares) = deal_decryption_key::<Toy11, _>(params, rng).unwrap();
        let (sig_pk, sig_shares) = deal_signing_key::<Toy11, _>(params, rng).unwrap();
        enc_shares
            .into_iter()
            .zip(sig_shares)
            .map(|(enc_share, sig_share)| {
                let share = ShareFile {
                    params,
                    index: enc_share.index,
                    enc_group_pk: enc_pk,
                    enc_share,
                    sig_group_pk: sig_pk,
                    sig_share,
                };
                ModeratorCore::with_clock(
                    share,
                    VotePolicy::AlwaysApprove,
                    300,
                    64,
                    Box::new(FixedClock(1_000)),
                )
            })
            .collect()
    }

    fn wire_request(core: &ModeratorCore<Toy11>, rng: &mut ChaCha20Rng) -> TokenRequestWire {
        let id = crate::elgamal::Identity::digest(b"node-test");
        let (req, _) =
            begin_token::<Toy11, _>(&id, &core.share.enc_group_pk, &FixedClock(1_000), rng)
                .unwrap();
        TokenRequestWire::from_typed(&req)
    }

    #[test]
    fn round1_issues_fresh_sessions_for_honest_requests() {
        let mut rng = ChaCha20Rng::seed_from_u64(60);
        let cores = cores(2, 3, &mut rng);
        let wire = wire_request(&cores[0], &mut rng);
        let body = Round1Request { requests: vec![wire.clone(), wire.clone()] };
        let a = cores[0].handle_round1(&body).unwrap();
        assert_eq!(a.results.len(), 2);
        assert_ne!(a.results[0].session_id, a.results[1].session_id);
        assert_ne!(a.results[0].commitment, a.results[1].commitment);
        assert_eq!(cores[0].open_sessions(), 2);
    }

    #[test]
    fn round1_rejects_batches_atomically() {
        let mut rng = ChaCha20Rng::seed_from_u64(61);
        let cores = cores(2, 3, &mut rng);
        let good = wire_request(&cores[0], &mut rng);
        let mut bad = good.clone();
        bad.id_src = hex::encode([7u8; 32]);
        let body = Round1Request { requests: vec![good, bad] };
        let err = cores[0].handle_round1(&body).unwrap_err();
        assert_eq!(err.code, "bad-encryption");
        assert_eq!(cores[0].open_sessions(), 0, "no session for a rejected batch");
    }

    #[test]
    fn round1_rejects_stale_timestamps() {
        let mut rng = ChaCha20Rng::seed_from_u64(62);
        let cores = cores(2, 3, &mut rng);
        let mut wire = wire_request(&cores[0], &mut rng);
        wire.issued_at = 1_000 - 600; // ten minutes before the fixed clock
        let err = cores[0]
            .handle_round1(&Round1Request { requests: vec![wire] })
            .unwrap_err();
        assert_eq!(err.code, "stale-timestamp");
    }

    #[test]
    fn round2_replay_and_roster_tampering() {
        let mut rng = ChaCha20Rng::seed_from_u64(63);
        let cores = cores(2, 3, &mut rng);
        let wire = wire_request(&cores[0], &mut rng);
        let body = Round1Request { requests: vec![wire] };
        let r1_a = cores[0].handle_round1(&body).unwrap();
        let r1_b = cores[1].handle_round1(&body).unwrap();

        let roster = vec![
            r1_a.results[0].commitment.clone(),
            r1_b.results[0].commitment.clone(),
        ];
        let round2 = Round2Request {
            items: vec![Round2Item {
                session_id: r1_a.results[0].session_id.clone(),
                roster: roster.clone(),
            }],
        };
        let first = cores[0].handle_round2(&round2).unwrap();
        assert_eq!(first.shares.len(), 1);
        assert_eq!(first.shares[0].index, 1);

        let replay = cores[0].handle_round2(&round2).unwrap_err();
        assert_eq!(replay.code, "consumed-session");

        // Fresh session, but the roster swaps this moderator's commitment.
        let r1_c = cores[0].handle_round1(&body).unwrap();
        let foreign = cores[0].handle_round1(&body).unwrap();
        let tampered = Round2Request {
            items: vec![Round2Item {
                session_id: r1_c.results[0].session_id.clone(),
                roster: vec![
                    foreign.results[0].commitment.clone(),
                    r1_b.results[0].commitment.clone(),
                ],
            }],
        };
        let err = cores[0].handle_round2(&tampered).unwrap_err();
        assert_eq!(err.code, "roster-mismatch");

        // And the failed attempt still burned the session.
        let burned = cores[0].handle_round2(&Round2Request {
            items: vec![Round2Item {
                session_id: r1_c.results[0].session_id.clone(),
                roster,
            }],
        });
        assert_eq!(burned.unwrap_err().code, "consumed-session");
    }

    #[test]
    fn unknown_session_is_distinct_from_consumed() {
        let mut rng = ChaCha20Rng::seed_from_u64(64);
        let cores = cores(2, 3, &mut rng);
        let err = cores[0]
            .handle_round2(&Round2Request {
                items: vec![Round2Item {
                    session_id: hex::encode([9u8; 16]),
                    roster: vec![],
                }],
            })
            .unwrap_err();
        assert_eq!(err.code, "unknown-session");
    }
}
