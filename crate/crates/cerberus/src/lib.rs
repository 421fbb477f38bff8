//! Cerberus: threshold moderation for franked messaging.
//!
//! A set of n moderators jointly issues sender tokens and any k of them can
//! vote to reveal the original sender of a reported message; fewer than k
//! learn nothing. Senders stay deniable to everyone outside the quorum.
//!
//! The crate is a library first: the [`protocol`] module is the
//! transport-agnostic state machine, [`modnode`] wraps one moderator's share
//! of it in an HTTP daemon, and [`client`] fans requests out to a roster of
//! daemons. The `examples/` directory walks each capability end to end, and
//! the `cerberus` binary exposes the key ceremony, the daemon, a demo flow,
//! reporting, and the latency benchmark.
//!
//! ## Threshold layout
//!
//! Two independent secrets are dealt at setup: a decryption key whose Shamir
//! shares let k moderators recombine an encrypted sender identity in the
//! exponent, and a signing key whose shares drive two-round threshold
//! Schnorr signing of tokens. Aggregated token signatures verify under the
//! plain Schnorr verifier, so recipients never learn k or n.
//!
//! ## Known limitations
//!
//! Decryption shares carry no proof of correctness: a moderator can submit
//! a bogus share and skew the recovered identity without detection. Token
//! single-use is enforced in the sending client; a dishonest sender reusing
//! a token is detectable (two envelopes with one ephemeral key) but not
//! prevented. The `toy11` suite exists for exhaustive testing and offers no
//! security.

pub mod bench;
pub mod cli;
pub mod client;
pub mod elgamal;
pub mod group;
pub mod keyfile;
pub mod modnode;
pub mod protocol;
pub mod schnorr;
pub mod shamir;
pub mod wire;

pub use elgamal::{Identity, ID_LEN};
pub use group::{Ristretto255, Suite, SuiteId, Toy11};
pub use protocol::{MessageEnvelope, Token, VotePolicy};
pub use shamir::ThresholdParams;
