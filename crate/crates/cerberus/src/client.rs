//! Client orchestration: fan token rounds out to all n moderators, settle
//! on the first k that answer, finalize tokens, file reports, and recover
//! identities.
//!
//! All moderator calls go through [`Transport`], so the same orchestration
//! runs over real HTTP ([`HttpTransport`]) or entirely in memory
//! ([`LoopbackTransport`]) for deterministic protocol tests. Fan-out is one
//! thread per moderator; collection stops as soon as k valid responses are
//! in, and a malformed response from one moderator never aborts the others.

use crate::elgamal::{DecryptionShare, Identity};
use crate::group::{Element, ElementOf, GroupError, ScalarOf, Suite, SuiteId};
use crate::modnode::{ModeratorCore, Rejection};
use crate::protocol::{
    begin_token, finalize_token, Clock, MessageEnvelope, ProtocolError, ReportRequest, Token,
    TokenRequest,
};
use crate::schnorr::{NonceCommitment, SignatureShare};
use crate::shamir::ThresholdParams;
use crate::wire::{
    ReportRequestWire, ReportResponseWire, Round1Request, Round1Response, Round2Item,
    Round2Request, Round2Response, TokenRequestWire,
};
use rand::{CryptoRng, RngCore};
use std::collections::{HashMap, HashSet};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Default per-request deadline; collection proceeds as soon as k valid
/// responses arrive, so stragglers beyond k cost nothing.
pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(2);

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("moderator unreachable: {0}")]
    Unreachable(String),

    #[error("moderator rejected the request: {0}")]
    Rejected(String),

    #[error("moderator response invalid: {0}")]
    Invalid(String),
}

/// The three moderator calls, as seen by the orchestration layer.
pub trait Transport: Send + Sync {
    fn token_round1(
        &self,
        addr: &str,
        index: u16,
        body: &Round1Request,
    ) -> Result<Round1Response, TransportError>;

    fn token_round2(
        &self,
        addr: &str,
        index: u16,
        body: &Round2Request,
    ) -> Result<Round2Response, TransportError>;

    fn report(
        &self,
        addr: &str,
        index: u16,
        body: &ReportRequestWire,
    ) -> Result<ReportResponseWire, TransportError>;
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("batch size must be at least 1")]
    EmptyBatch,

    #[error("roster invalid: {0}")]
    RosterInvalid(String),

    #[error("only {succeeded} of the required {needed} moderators completed signing; failed: {failed:?}")]
    TooFewModerators {
        needed: usize,
        succeeded: usize,
        /// (moderator index, what went wrong) for every unreachable or
        /// faulty party.
        failed: Vec<(u16, String)>,
    },

    #[error("{approvals} of the required {needed} approvals received (denied by {denied:?}, failed: {failed:?})")]
    InsufficientVotes {
        approvals: usize,
        needed: usize,
        denied: Vec<u16>,
        failed: Vec<(u16, String)>,
    },

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One line of the roster: who, where, and the share to verify them by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterEntry<S: Suite> {
    pub index: u16,
    pub addr: String,
    pub verification_share: ElementOf<S>,
}

/// The n-party topology plus the two group public keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeratorRoster<S: Suite> {
    pub params: ThresholdParams,
    pub sig_pk: ElementOf<S>,
    pub enc_pk: ElementOf<S>,
    pub entries: Vec<RosterEntry<S>>,
}

impl<S: Suite> ModeratorRoster<S> {
    /// Assemble the public roster from the ceremony output, pairing each
    /// share with its endpoint address.
    pub fn from_share_files(
        shares: &[crate::keyfile::ShareFile<S>],
        addrs: &[String],
    ) -> Result<Self, ClientError> {
        let first = shares
            .first()
            .ok_or_else(|| ClientError::RosterInvalid("no shares".into()))?;
        if shares.len() != addrs.len() {
            return Err(ClientError::RosterInvalid(format!(
                "{} shares but {} addresses",
                shares.len(),
                addrs.len()
            )));
        }
        let roster = ModeratorRoster {
            params: first.params,
            sig_pk: first.sig_group_pk.clone(),
            enc_pk: first.enc_group_pk.clone(),
            entries: shares
                .iter()
                .zip(addrs)
                .map(|(share, addr)| RosterEntry {
                    index: share.index,
                    addr: addr.clone(),
                    verification_share: share.sig_share.verification_share.clone(),
                })
                .collect(),
        };
        roster.validate()?;
        Ok(roster)
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.entries.len() != self.params.n as usize {
            return Err(ClientError::RosterInvalid(format!(
                "{} entries for n={}",
                self.entries.len(),
                self.params.n
            )));
        }
        let indices: HashSet<u16> = self.entries.iter().map(|e| e.index).collect();
        let expected: HashSet<u16> = (1..=self.params.n).collect();
        if indices != expected {
            return Err(ClientError::RosterInvalid(
                "indices must be exactly 1..=n, unique".into(),
            ));
        }
        Ok(())
    }

    pub fn verification_shares(&self) -> Vec<(u16, ElementOf<S>)> {
        self.entries
            .iter()
            .map(|e| (e.index, e.verification_share.clone()))
            .collect()
    }

    /// Versioned text form, the file `keygen` writes and every tool reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("cerberus-roster v1\n");
        out.push_str(&format!("suite {}\n", S::ID));
        out.push_str(&format!("threshold {} {}\n", self.params.k, self.params.n));
        out.push_str(&format!("signing-pk {}\n", hex::encode(self.sig_pk.encode())));
        out.push_str(&format!("encryption-pk {}\n", hex::encode(self.enc_pk.encode())));
        for e in &self.entries {
            out.push_str(&format!(
                "moderator {} {} {}\n",
                e.index,
                e.addr,
                hex::encode(e.verification_share.encode())
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ClientError> {
        let bad = |reason: &str| ClientError::RosterInvalid(reason.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next() != Some("cerberus-roster v1") {
            return Err(bad("missing 'cerberus-roster v1' header"));
        }
        let mut suite = None;
        let mut params = None;
        let mut sig_pk = None;
        let mut enc_pk = None;
        let mut entries = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["suite", id] => suite = Some(id.to_string()),
                ["threshold", k, n] => {
                    let k: u16 = k.parse().map_err(|_| bad("bad threshold k"))?;
                    let n: u16 = n.parse().map_err(|_| bad("bad threshold n"))?;
                    params = Some(
                        ThresholdParams::new(k, n)
                            .map_err(|e| ClientError::RosterInvalid(e.to_string()))?,
                    );
                }
                ["signing-pk", value] => sig_pk = Some(decode_element::<S>(value)?),
                ["encryption-pk", value] => enc_pk = Some(decode_element::<S>(value)?),
                ["moderator", index, addr, share] => {
                    entries.push(RosterEntry {
                        index: index.parse().map_err(|_| bad("bad moderator index"))?,
                        addr: addr.to_string(),
                        verification_share: decode_element::<S>(share)?,
                    });
                }
                _ => return Err(bad(&format!("unrecognized line {line:?}"))),
            }
        }
        match suite.as_deref() {
            Some(id) if id == S::ID => {}
            Some(id) => {
                return Err(ClientError::RosterInvalid(format!(
                    "roster is for suite {id}, expected {}",
                    S::ID
                )))
            }
            None => return Err(bad("missing suite line")),
        }
        let roster = ModeratorRoster {
            params: params.ok_or_else(|| bad("missing threshold line"))?,
            sig_pk: sig_pk.ok_or_else(|| bad("missing signing-pk line"))?,
            enc_pk: enc_pk.ok_or_else(|| bad("missing encryption-pk line"))?,
            entries,
        };
        roster.validate()?;
        Ok(roster)
    }
}

fn decode_element<S: Suite>(value: &str) -> Result<ElementOf<S>, ClientError> {
    let bytes = hex::decode(value).map_err(|e| ClientError::RosterInvalid(e.to_string()))?;
    S::Element::decode_non_identity(&bytes).map_err(ClientError::Group)
}

/// Read only the suite line, so callers can dispatch before parsing fully.
pub fn peek_roster_suite(text: &str) -> Result<SuiteId, ClientError> {
    for line in text.lines() {
        if let Some(id) = line.trim().strip_prefix("suite ") {
            return id
                .trim()
                .parse()
                .map_err(|e: GroupError| ClientError::RosterInvalid(e.to_string()));
        }
    }
    Err(ClientError::RosterInvalid("missing suite line".into()))
}

/// A finalized token together with the ephemeral secret that may seal
/// exactly one message with it.
pub type IssuedToken<S> = (Token<S>, ScalarOf<S>);

/// A batch of tokens to mint for one identity.
#[derive(Debug, Clone)]
pub struct TokenBatchRequest {
    pub id_src: Identity,
    pub batch_size: usize,
}

/// The orchestration entry point.
pub struct Client<S: Suite> {
    pub roster: ModeratorRoster<S>,
    transport: Arc<dyn Transport>,
    deadline: Duration,
}

impl<S: Suite> Client<S> {
    pub fn new(roster: ModeratorRoster<S>, transport: Arc<dyn Transport>) -> Self {
        Client { roster, transport, deadline: DEFAULT_DEADLINE }
    }

    pub fn with_deadline(mut self, deadline: Duration) -> Self {
        self.deadline = deadline;
        self
    }

    /// Mint `batch_size` tokens: one round-1 fan-out to all n moderators,
    /// one round-2 fan-out to the first k that answered with valid
    /// commitments. Signature shares are verified on arrival, so a corrupt
    /// moderator costs liveness, never a bad σ_mod.
    pub fn obtain_tokens<R: RngCore + CryptoRng>(
        &self,
        batch: &TokenBatchRequest,
        clock: &dyn Clock,
        rng: &mut R,
    ) -> Result<Vec<IssuedToken<S>>, ClientError> {
        if batch.batch_size < 1 {
            return Err(ClientError::EmptyBatch);
        }
        self.roster.validate()?;
        let k = self.roster.params.k as usize;

        let mut requests = Vec::with_capacity(batch.batch_size);
        let mut eph_keys = Vec::with_capacity(batch.batch_size);
        for _ in 0..batch.batch_size {
            let (req, sk_eph) = begin_token::<S, R>(&batch.id_src, &self.roster.enc_pk, clock, rng)?;
            requests.push(req);
            eph_keys.push(sk_eph);
        }

        let round1_body = Arc::new(Round1Request {
            requests: requests.iter().map(TokenRequestWire::from_typed).collect(),
        });

        // Round 1: first k moderators whose whole response decodes.
        let mut failed: Vec<(u16, String)> = Vec::new();
        let mut round1: Vec<(u16, Vec<String>, Vec<NonceCommitment<S>>)> = Vec::new();
        let receiver = self.spawn_round1(&round1_body);
        let cutoff = Instant::now() + self.deadline;
        let mut pending = self.roster.entries.len();
        while pending > 0 && round1.len() < k {
            let Some((index, outcome)) = recv_until(&receiver, cutoff) else {
                break;
            };
            pending -= 1;
            match outcome.and_then(|r| decode_round1::<S>(index, batch.batch_size, r)) {
                Ok((sessions, commitments)) => round1.push((index, sessions, commitments)),
                Err(e) => failed.push((index, e.to_string())),
            }
        }
        if round1.len() < k {
            mark_missing(&mut failed, &self.roster, |i| {
                round1.iter().any(|(idx, _, _)| *idx == i)
            });
            return Err(ClientError::TooFewModerators {
                needed: k,
                succeeded: round1.len(),
                failed,
            });
        }

        // A canonical roster per token: the chosen k, ordered by index.
        round1.sort_by_key(|(index, _, _)| *index);
        let chosen = round1;
        let rosters: Vec<Vec<NonceCommitment<S>>> = (0..batch.batch_size)
            .map(|j| chosen.iter().map(|(_, _, c)| c[j].clone()).collect())
            .collect();

        // Round 2, only to the chosen; all k must deliver verifiable shares.
        let mut round2_bodies = Vec::new();
        for (index, sessions, _) in &chosen {
            let items = (0..batch.batch_size)
                .map(|j| Round2Item {
                    session_id: sessions[j].clone(),
                    roster: rosters[j]
                        .iter()
                        .map(crate::wire::CommitmentWire::from_typed)
                        .collect(),
                })
                .collect();
            round2_bodies.push((*index, Arc::new(Round2Request { items })));
        }
        let receiver = self.spawn_round2(&round2_bodies);
        let cutoff = Instant::now() + self.deadline;
        let mut shares_by_moderator: HashMap<u16, Vec<SignatureShare<S>>> = HashMap::new();
        let mut round2_failed: Vec<(u16, String)> = Vec::new();
        let mut pending = chosen.len();
        while pending > 0 {
            let Some((index, outcome)) = recv_until(&receiver, cutoff) else {
                break;
            };
            pending -= 1;
            match outcome.and_then(|r| {
                self.decode_round2(index, batch.batch_size, &requests, &rosters, r)
            }) {
                Ok(shares) => {
                    shares_by_moderator.insert(index, shares);
                }
                Err(e) => round2_failed.push((index, e.to_string())),
            }
        }
        if shares_by_moderator.len() < k {
            for (index, _, _) in &chosen {
                if !shares_by_moderator.contains_key(index)
                    && !round2_failed.iter().any(|(i, _)| i == index)
                {
                    round2_failed.push((*index, "no response before deadline".into()));
                }
            }
            return Err(ClientError::TooFewModerators {
                needed: k,
                succeeded: shares_by_moderator.len(),
                failed: round2_failed,
            });
        }

        let verification_shares = self.roster.verification_shares();
        let mut tokens = Vec::with_capacity(batch.batch_size);
        for (j, (request, sk_eph)) in requests.iter().zip(eph_keys).enumerate() {
            let sig_shares: Vec<SignatureShare<S>> = chosen
                .iter()
                .map(|(index, _, _)| shares_by_moderator[index][j].clone())
                .collect();
            let token = finalize_token::<S>(
                request,
                &rosters[j],
                &sig_shares,
                &verification_shares,
                &self.roster.sig_pk,
                self.roster.params.k,
            )?;
            tokens.push((token, sk_eph));
        }
        Ok(tokens)
    }

    /// Report an envelope to all n moderators and recover the sender as
    /// soon as k of them approve. Denials, rejections, and network failures
    /// all count as non-approval.
    pub fn report_and_recover(
        &self,
        envelope: &MessageEnvelope<S>,
    ) -> Result<Identity, ClientError> {
        self.roster.validate()?;
        let k = self.roster.params.k as usize;
        let report = ReportRequest { envelope: envelope.clone() };
        let body = Arc::new(ReportRequestWire::from_typed(&report));

        let receiver = self.spawn_report(&body);
        let cutoff = Instant::now() + self.deadline;
        let mut approvals: Vec<DecryptionShare<S>> = Vec::new();
        let mut denied: Vec<u16> = Vec::new();
        let mut failed: Vec<(u16, String)> = Vec::new();
        let mut pending = self.roster.entries.len();
        while pending > 0 && approvals.len() < k {
            let Some((index, outcome)) = recv_until(&receiver, cutoff) else {
                break;
            };
            pending -= 1;
            match outcome.and_then(|r| decode_vote::<S>(index, r)) {
                Ok(Some(share)) => approvals.push(share),
                Ok(None) => denied.push(index),
                Err(e) => failed.push((index, e.to_string())),
            }
        }

        if approvals.len() < k {
            return Err(ClientError::InsufficientVotes {
                approvals: approvals.len(),
                needed: k,
                denied,
                failed,
            });
        }
        Ok(crate::protocol::recover_identity::<S>(
            &report,
            &approvals,
            self.roster.params,
        )?)
    }

    fn spawn_round1(
        &self,
        body: &Arc<Round1Request>,
    ) -> mpsc::Receiver<(u16, Result<Round1Response, TransportError>)> {
        let (tx, rx) = mpsc::channel();
        for entry in &self.roster.entries {
            let transport = Arc::clone(&self.transport);
            let body = Arc::clone(body);
            let tx = tx.clone();
            let addr = entry.addr.clone();
            let index = entry.index;
            std::thread::spawn(move || {
                let result = transport.token_round1(&addr, index, &body);
                let _ = tx.send((index, result));
            });
        }
        rx
    }

    fn spawn_round2(
        &self,
        bodies: &[(u16, Arc<Round2Request>)],
    ) -> mpsc::Receiver<(u16, Result<Round2Response, TransportError>)> {
        let (tx, rx) = mpsc::channel();
        for (index, body) in bodies {
            let entry = self
                .roster
                .entries
                .iter()
                .find(|e| e.index == *index)
                .expect("chosen moderators come from the roster");
            let transport = Arc::clone(&self.transport);
            let body = Arc::clone(body);
            let tx = tx.clone();
            let addr = entry.addr.clone();
            let index = *index;
            std::thread::spawn(move || {
                let result = transport.token_round2(&addr, index, &body);
                let _ = tx.send((index, result));
            });
        }
        rx
    }

    fn spawn_report(
        &self,
        body: &Arc<ReportRequestWire>,
    ) -> mpsc::Receiver<(u16, Result<ReportResponseWire, TransportError>)> {
        let (tx, rx) = mpsc::channel();
        for entry in &self.roster.entries {
            let transport = Arc::clone(&self.transport);
            let body = Arc::clone(body);
            let tx = tx.clone();
            let addr = entry.addr.clone();
            let index = entry.index;
            std::thread::spawn(move || {
                let result = transport.report(&addr, index, &body);
                let _ = tx.send((index, result));
            });
        }
        rx
    }

    fn decode_round2(
        &self,
        index: u16,
        batch_size: usize,
        requests: &[TokenRequest<S>],
        rosters: &[Vec<NonceCommitment<S>>],
        response: Round2Response,
    ) -> Result<Vec<SignatureShare<S>>, TransportError> {
        if response.shares.len() != batch_size {
            return Err(TransportError::Invalid(format!(
                "{} shares for a batch of {batch_size}",
                response.shares.len()
            )));
        }
        let vs = self
            .roster
            .entries
            .iter()
            .find(|e| e.index == index)
            .map(|e| e.verification_share.clone())
            .expect("chosen moderators come from the roster");
        let mut shares = Vec::with_capacity(batch_size);
        for (j, wire) in response.shares.iter().enumerate() {
            let share = wire
                .to_typed::<S>()
                .map_err(|e| TransportError::Invalid(e.to_string()))?;
            if share.index != index {
                return Err(TransportError::Invalid(format!(
                    "share names moderator {}, expected {index}",
                    share.index
                )));
            }
            let transcript = crate::protocol::token_transcript::<S>(
                &requests[j].x1,
                &requests[j].pk_eph,
                requests[j].issued_at,
            );
            if !crate::schnorr::verify_share::<S>(
                &rosters[j],
                &share,
                &transcript,
                &vs,
                &self.roster.sig_pk,
            ) {
                return Err(TransportError::Invalid(format!(
                    "signature share {j} failed verification"
                )));
            }
            shares.push(share);
        }
        Ok(shares)
    }
}

fn decode_round1<S: Suite>(
    index: u16,
    batch_size: usize,
    response: Round1Response,
) -> Result<(Vec<String>, Vec<NonceCommitment<S>>), TransportError> {
    if response.results.len() != batch_size {
        return Err(TransportError::Invalid(format!(
            "{} results for a batch of {batch_size}",
            response.results.len()
        )));
    }
    let mut sessions = Vec::with_capacity(batch_size);
    let mut commitments = Vec::with_capacity(batch_size);
    for item in response.results {
        let commitment = item
            .commitment
            .to_typed::<S>()
            .map_err(|e| TransportError::Invalid(e.to_string()))?;
        if commitment.index != index {
            return Err(TransportError::Invalid(format!(
                "commitment names moderator {}, expected {index}",
                commitment.index
            )));
        }
        sessions.push(item.session_id);
        commitments.push(commitment);
    }
    Ok((sessions, commitments))
}

fn decode_vote<S: Suite>(
    index: u16,
    response: ReportResponseWire,
) -> Result<Option<DecryptionShare<S>>, TransportError> {
    match (response.vote.as_str(), response.share) {
        ("approve", Some(wire)) => {
            let share = wire
                .to_typed::<S>()
                .map_err(|e| TransportError::Invalid(e.to_string()))?;
            if share.index != index {
                return Err(TransportError::Invalid(format!(
                    "share names moderator {}, expected {index}",
                    share.index
                )));
            }
            Ok(Some(share))
        }
        ("deny", None) => Ok(None),
        _ => Err(TransportError::Invalid("inconsistent vote body".into())),
    }
}

fn recv_until<T>(
    receiver: &mpsc::Receiver<(u16, T)>,
    cutoff: Instant,
) -> Option<(u16, T)> {
    let now = Instant::now();
    if now >= cutoff {
        return receiver.try_recv().ok();
    }
    receiver.recv_timeout(cutoff - now).ok()
}

fn mark_missing<S: Suite>(
    failed: &mut Vec<(u16, String)>,
    roster: &ModeratorRoster<S>,
    responded: impl Fn(u16) -> bool,
) {
    for entry in &roster.entries {
        if !responded(entry.index) && !failed.iter().any(|(i, _)| *i == entry.index) {
            failed.push((entry.index, "no response before deadline".into()));
        }
    }
}

/// Real HTTP transport over the daemon wire protocol.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        HttpTransport {
            agent: ureq::AgentBuilder::new()
                .timeout(timeout)
                .build(),
        }
    }

    fn post<B: serde::Serialize, R: serde::de::DeserializeOwned>(
        &self,
        addr: &str,
        path: &str,
        body: &B,
    ) -> Result<R, TransportError> {
        let url = format!("http://{addr}{path}");
        match self.agent.post(&url).send_json(body) {
            Ok(response) => response
                .into_json()
                .map_err(|e| TransportError::Invalid(e.to_string())),
            Err(ureq::Error::Status(_, response)) => {
                let error = response
                    .into_json::<crate::wire::ErrorResponse>()
                    .map(|e| e.error)
                    .unwrap_or_else(|e| format!("unparseable rejection: {e}"));
                Err(TransportError::Rejected(error))
            }
            Err(ureq::Error::Transport(t)) => Err(TransportError::Unreachable(t.to_string())),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(DEFAULT_DEADLINE)
    }
}

impl Transport for HttpTransport {
    fn token_round1(
        &self,
        addr: &str,
        _index: u16,
        body: &Round1Request,
    ) -> Result<Round1Response, TransportError> {
        self.post(addr, "/v1/token/round1", body)
    }

    fn token_round2(
        &self,
        addr: &str,
        _index: u16,
        body: &Round2Request,
    ) -> Result<Round2Response, TransportError> {
        self.post(addr, "/v1/token/round2", body)
    }

    fn report(
        &self,
        addr: &str,
        _index: u16,
        body: &ReportRequestWire,
    ) -> Result<ReportResponseWire, TransportError> {
        self.post(addr, "/v1/report", body)
    }
}

/// In-memory transport: the same wire DTOs, handled by moderator cores in
/// this process. Individual moderators can be taken down to exercise
/// partial-failure paths deterministically.
pub struct LoopbackTransport<S: Suite> {
    nodes: HashMap<u16, Arc<ModeratorCore<S>>>,
    down: Mutex<HashSet<u16>>,
}

impl<S: Suite> LoopbackTransport<S> {
    pub fn new(nodes: Vec<Arc<ModeratorCore<S>>>) -> Self {
        LoopbackTransport {
            nodes: nodes.into_iter().map(|n| (n.index(), n)).collect(),
            down: Mutex::new(HashSet::new()),
        }
    }

    pub fn set_down(&self, index: u16, down: bool) {
        let mut set = self.down.lock().expect("down set poisoned");
        if down {
            set.insert(index);
        } else {
            set.remove(&index);
        }
    }

    fn node(&self, index: u16) -> Result<&Arc<ModeratorCore<S>>, TransportError> {
        if self.down.lock().expect("down set poisoned").contains(&index) {
            return Err(TransportError::Unreachable(format!(
                "moderator {index} is down"
            )));
        }
        self.nodes
            .get(&index)
            .ok_or_else(|| TransportError::Unreachable(format!("no moderator {index}")))
    }
}

fn reject(rejection: Rejection) -> TransportError {
    TransportError::Rejected(rejection.code)
}

impl<S: Suite> Transport for LoopbackTransport<S> {
    fn token_round1(
        &self,
        _addr: &str,
        index: u16,
        body: &Round1Request,
    ) -> Result<Round1Response, TransportError> {
        self.node(index)?.handle_round1(body).map_err(reject)
    }

    fn token_round2(
        &self,
        _addr: &str,
        index: u16,
        body: &Round2Request,
    ) -> Result<Round2Response, TransportError> {
        self.node(index)?.handle_round2(body).map_err(reject)
    }

    fn report(
        &self,
        _addr: &str,
        index: u16,
        body: &ReportRequestWire,
    ) -> Result<ReportResponseWire, TransportError> {
        self.node(index)?.handle_report(body).map_err(reject)
    }
}
