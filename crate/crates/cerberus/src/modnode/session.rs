//! Correlation of signing round 1 to round 2.
//!
//! Round 1 opens a session holding the verified token request and the fresh
//! nonces; round 2 consumes it. Consumption is check-and-take under one
//! lock, so a session never signs twice no matter how many round-2 calls
//! race. Consumed entries linger until expiry so replays are answered
//! distinctly from unknown ids.

use crate::group::Suite;
use crate::protocol::TokenRequest;
use crate::schnorr::SigningNonces;
use rand::rngs::OsRng;
use rand::RngCore;
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

pub const SESSION_TTL: Duration = Duration::from_secs(60);

pub type SessionId = [u8; 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionError {
    /// Never issued, or expired and purged.
    Unknown,
    /// Issued and already spent.
    AlreadyConsumed,
    /// The pool is at capacity; retry after sessions expire.
    Capacity,
    /// The process rng failed while minting an id.
    Entropy,
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Unknown => "unknown-session",
            SessionError::AlreadyConsumed => "consumed-session",
            SessionError::Capacity => "session-capacity",
            SessionError::Entropy => "entropy-failure",
        }
    }
}

struct Session<S: Suite> {
    request: TokenRequest<S>,
    nonces: Option<SigningNonces<S>>,
    created: Instant,
}

impl<S: Suite> Session<S> {
    fn expired(&self, now: Instant, ttl: Duration) -> bool {
        now.duration_since(self.created) > ttl
    }
}

pub struct SessionStore<S: Suite> {
    inner: Mutex<HashMap<SessionId, Session<S>>>,
    capacity: usize,
    ttl: Duration,
}

impl<S: Suite> SessionStore<S> {
    pub fn new(capacity: usize, ttl: Duration) -> Self {
        SessionStore {
            inner: Mutex::new(HashMap::new()),
            capacity,
            ttl,
        }
    }

    /// Open one session per request, all or nothing. Ids are 16 random
    /// bytes; the caller gets them aligned with its input.
    pub fn open_batch(
        &self,
        items: Vec<(TokenRequest<S>, SigningNonces<S>)>,
    ) -> Result<Vec<SessionId>, SessionError> {
        let now = Instant::now();
        let mut inner = self.inner.lock().expect("session store poisoned");
        inner.retain(|_, s| !s.expired(now, self.ttl));
        if inner.len() + items.len() > self.capacity {
            return Err(SessionError::Capacity);
        }
        let mut ids = Vec::with_capacity(items.len());
        for (request, nonces) in items {
            let mut id = [0u8; 16];
            OsRng
                .try_fill_bytes(&mut id)
                .map_err(|_| SessionError::Entropy)?;
            ids.push(id);
            inner.insert(
                id,
                Session {
                    request,
                    nonces: Some(nonces),
                    created: now,
                },
            );
        }
        Ok(ids)
    }

    /// Atomically spend a session: the first caller gets the request and
    /// nonces, every later caller gets [`SessionError::AlreadyConsumed`].
    pub fn consume(
        &self,
        id: &SessionId,
    ) -> Result<(TokenRequest<S>, SigningNonces<S>), SessionError> {
        let now = Instant::now();
        let mut inner = self.inner.lock().expect("session store poisoned");
        let session = inner.get_mut(id).ok_or(SessionError::Unknown)?;
        if session.expired(now, self.ttl) {
            inner.remove(id);
            return Err(SessionError::Unknown);
        }
        let nonces = session.nonces.take().ok_or(SessionError::AlreadyConsumed)?;
        Ok((session.request.clone(), nonces))
    }

    pub fn live_count(&self) -> usize {
        let now = Instant::now();
        let inner = self.inner.lock().expect("session store poisoned");
        inner.values().filter(|s| !s.expired(now, self.ttl)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{encrypt_identity, Identity};
    use crate::group::toy::{ToyElement, ToyScalar};
    use crate::group::{Element, Toy11};
    use crate::schnorr::round1_commit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::Arc;

    fn item(rng: &mut ChaCha20Rng) -> (TokenRequest<Toy11>, SigningNonces<Toy11>) {
        let pk = ToyElement::base_pow(&ToyScalar::new(4));
        let id = Identity::digest(b"s");
        let r = ToyScalar::new(3);
        let request = TokenRequest {
            id_src: id,
            x1: encrypt_identity::<Toy11>(&pk, &id, &r).unwrap(),
            r,
            pk_eph: ToyElement::base_pow(&ToyScalar::new(5)),
            issued_at: 1,
        };
        (request, round1_commit::<Toy11, _>(1, rng).unwrap())
    }

    #[test]
    fn consume_is_single_shot() {
        let mut rng = ChaCha20Rng::seed_from_u64(50);
        let store = SessionStore::<Toy11>::new(8, SESSION_TTL);
        let ids = store.open_batch(vec![item(&mut rng)]).unwrap();
        assert!(store.consume(&ids[0]).is_ok());
        assert!(matches!(
            store.consume(&ids[0]),
            Err(SessionError::AlreadyConsumed)
        ));
        assert!(matches!(store.consume(&[0u8; 16]), Err(SessionError::Unknown)));
    }

    #[test]
    fn capacity_is_enforced_batch_atomically() {
        let mut rng = ChaCha20Rng::seed_from_u64(51);
        let store = SessionStore::<Toy11>::new(3, SESSION_TTL);
        store
            .open_batch(vec![item(&mut rng), item(&mut rng)])
            .unwrap();
        let err = store
            .open_batch(vec![item(&mut rng), item(&mut rng)])
            .unwrap_err();
        assert_eq!(err, SessionError::Capacity);
        assert_eq!(store.live_count(), 2, "failed batch created nothing");
    }

    #[test]
    fn expiry_purges_and_reports_unknown() {
        let mut rng = ChaCha20Rng::seed_from_u64(52);
        let store = SessionStore::<Toy11>::new(8, Duration::from_millis(10));
        let ids = store.open_batch(vec![item(&mut rng)]).unwrap();
        std::thread::sleep(Duration::from_millis(30));
        assert!(matches!(store.consume(&ids[0]), Err(SessionError::Unknown)));
        assert_eq!(store.live_count(), 0);
    }

    #[test]
    fn racing_consumers_get_exactly_one_success() {
        let mut rng = ChaCha20Rng::seed_from_u64(53);
        let store = Arc::new(SessionStore::<Toy11>::new(8, SESSION_TTL));
        let ids = store.open_batch(vec![item(&mut rng)]).unwrap();
        let id = ids[0];
        let barrier = Arc::new(std::sync::Barrier::new(16));
        let mut handles = Vec::new();
        for _ in 0..16 {
            let store = Arc::clone(&store);
            let barrier = Arc::clone(&barrier);
            handles.push(std::thread::spawn(move || {
                barrier.wait();
                store.consume(&id).is_ok()
            }));
        }
        let successes = handles
            .into_iter()
            .map(|h| h.join().unwrap())
            .filter(|&won| won)
            .count();
        assert_eq!(successes, 1);
    }
}
