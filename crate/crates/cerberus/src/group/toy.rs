//! Tiny test suite: the order-11 subgroup of the integers mod 23.
//!
//! With q = 11 a test can enumerate every exponent, brute-force discrete
//! logs, and check group laws exhaustively. Offers no security whatsoever;
//! key files record the suite id so production tooling can refuse it.

use super::{Element, GroupError, Scalar, Suite};

/// Group order (prime).
const Q: u16 = 11;
/// Ambient modulus; 23 = 2·11 + 1, so Z_23* has a subgroup of order 11.
const P: u16 = 23;
/// Generator of the order-11 subgroup. 2^11 = 2048 ≡ 1 (mod 23) and 2 ≠ 1,
/// so ord(2) divides the prime 11 and is therefore exactly 11; a unit test
/// re-verifies this by enumeration.
const G: u16 = 2;

/// Test-only suite over the order-11 subgroup of Z_23*.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toy11;

impl Suite for Toy11 {
    const ID: &'static str = "toy11";
    const SCALAR_LEN: usize = 1;
    const ELEMENT_LEN: usize = 1;

    type Scalar = ToyScalar;
    type Element = ToyElement;
}

/// Residue mod 11.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyScalar(u16);

impl ToyScalar {
    pub fn new(v: u16) -> Self {
        ToyScalar(v % Q)
    }

    pub fn residue(&self) -> u16 {
        self.0
    }
}

impl Scalar for ToyScalar {
    fn zero() -> Self {
        ToyScalar(0)
    }

    fn one() -> Self {
        ToyScalar(1)
    }

    fn from_u64(v: u64) -> Self {
        ToyScalar((v % Q as u64) as u16)
    }

    fn add(&self, rhs: &Self) -> Self {
        ToyScalar((self.0 + rhs.0) % Q)
    }

    fn sub(&self, rhs: &Self) -> Self {
        ToyScalar((self.0 + Q - rhs.0) % Q)
    }

    fn mul(&self, rhs: &Self) -> Self {
        ToyScalar((self.0 * rhs.0) % Q)
    }

    fn neg(&self) -> Self {
        ToyScalar((Q - self.0) % Q)
    }

    fn invert(&self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        // q − 2 = 9 by Fermat; the field is small enough for a scan too,
        // but exponentiation keeps it branchless.
        let mut acc = 1u32;
        for _ in 0..9 {
            acc = (acc * self.0 as u32) % Q as u32;
        }
        Some(ToyScalar(acc as u16))
    }

    fn encode(&self) -> Vec<u8> {
        vec![self.0 as u8]
    }

    fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        if bytes.len() != 1 {
            return Err(GroupError::Length {
                expected: 1,
                got: bytes.len(),
            });
        }
        if bytes[0] as u16 >= Q {
            return Err(GroupError::InvalidScalar);
        }
        Ok(ToyScalar(bytes[0] as u16))
    }

    fn from_wide_bytes(wide: &[u8; 64]) -> Self {
        // Big-endian fold mod 11; bias after 512 bits is negligible.
        let mut acc = 0u32;
        for b in wide {
            acc = (acc * 256 + *b as u32) % Q as u32;
        }
        ToyScalar(acc as u16)
    }
}

/// Subgroup element, stored as its residue mod 23.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyElement(u16);

impl ToyElement {
    pub fn residue(&self) -> u16 {
        self.0
    }

    fn mod_pow(base: u16, mut exp: u16) -> u16 {
        let mut base = base as u32 % P as u32;
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % P as u32;
            }
            base = base * base % P as u32;
            exp >>= 1;
        }
        acc as u16
    }

    fn in_subgroup(v: u16) -> bool {
        // x lies in the order-11 subgroup iff x^11 ≡ 1 (mod 23).
        (1..P).contains(&v) && Self::mod_pow(v, Q) == 1
    }
}

impl Element<ToyScalar> for ToyElement {
    fn generator() -> Self {
        ToyElement(G)
    }

    fn identity() -> Self {
        ToyElement(1)
    }

    fn is_identity(&self) -> bool {
        self.0 == 1
    }

    fn mul(&self, rhs: &Self) -> Self {
        ToyElement((self.0 as u32 * rhs.0 as u32 % P as u32) as u16)
    }

    fn pow(&self, exp: &ToyScalar) -> Self {
        ToyElement(Self::mod_pow(self.0, exp.0))
    }

    fn encode(&self) -> Vec<u8> {
        vec![self.0 as u8]
    }

    fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        if bytes.len() != 1 {
            return Err(GroupError::Length {
                expected: 1,
                got: bytes.len(),
            });
        }
        let v = bytes[0] as u16;
        if !Self::in_subgroup(v) {
            return Err(GroupError::InvalidElement);
        }
        Ok(ToyElement(v))
    }
}
