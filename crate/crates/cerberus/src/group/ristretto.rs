//! Production suite over the ristretto255 group.
//!
//! ristretto255 is a prime-order group of order q ≈ 2^252 built on
//! curve25519; its compressed encoding is canonical, and decoding performs
//! the subgroup check by construction.

use super::{Element, GroupError, Scalar, Suite};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::Identity;

/// Production suite backed by ristretto255.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ristretto255;

impl Suite for Ristretto255 {
    const ID: &'static str = "ristretto255";
    const SCALAR_LEN: usize = 32;
    const ELEMENT_LEN: usize = 32;

    type Scalar = RScalar;
    type Element = RElement;
}

/// Scalar mod the ristretto255 group order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RScalar(DalekScalar);

impl Scalar for RScalar {
    fn zero() -> Self {
        RScalar(DalekScalar::ZERO)
    }

    fn one() -> Self {
        RScalar(DalekScalar::ONE)
    }

    fn from_u64(v: u64) -> Self {
        RScalar(DalekScalar::from(v))
    }

    fn add(&self, rhs: &Self) -> Self {
        RScalar(self.0 + rhs.0)
    }

    fn sub(&self, rhs: &Self) -> Self {
        RScalar(self.0 - rhs.0)
    }

    fn mul(&self, rhs: &Self) -> Self {
        RScalar(self.0 * rhs.0)
    }

    fn neg(&self) -> Self {
        RScalar(-self.0)
    }

    fn invert(&self) -> Option<Self> {
        if self.0 == DalekScalar::ZERO {
            return None;
        }
        Some(RScalar(self.0.invert()))
    }

    fn encode(&self) -> Vec<u8> {
        // dalek stores little-endian; the canonical wire form is big-endian.
        let mut bytes = self.0.to_bytes();
        bytes.reverse();
        bytes.to_vec()
    }

    fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        if bytes.len() != 32 {
            return Err(GroupError::Length {
                expected: 32,
                got: bytes.len(),
            });
        }
        let mut le = [0u8; 32];
        le.copy_from_slice(bytes);
        le.reverse();
        Option::<DalekScalar>::from(DalekScalar::from_canonical_bytes(le))
            .map(RScalar)
            .ok_or(GroupError::InvalidScalar)
    }

    fn from_wide_bytes(wide: &[u8; 64]) -> Self {
        let mut le = *wide;
        le.reverse();
        RScalar(DalekScalar::from_bytes_mod_order_wide(&le))
    }
}

/// Ristretto point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RElement(RistrettoPoint);

impl Element<RScalar> for RElement {
    fn generator() -> Self {
        RElement(curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT)
    }

    fn identity() -> Self {
        RElement(RistrettoPoint::identity())
    }

    fn is_identity(&self) -> bool {
        self.0 == RistrettoPoint::identity()
    }

    fn mul(&self, rhs: &Self) -> Self {
        RElement(self.0 + rhs.0)
    }

    fn pow(&self, exp: &RScalar) -> Self {
        RElement(self.0 * exp.0)
    }

    fn base_pow(exp: &RScalar) -> Self {
        RElement(RistrettoPoint::mul_base(&exp.0))
    }

    fn encode(&self) -> Vec<u8> {
        self.0.compress().to_bytes().to_vec()
    }

    fn decode(bytes: &[u8]) -> Result<Self, GroupError> {
        if bytes.len() != 32 {
            return Err(GroupError::Length {
                expected: 32,
                got: bytes.len(),
            });
        }
        CompressedRistretto::from_slice(bytes)
            .map_err(|_| GroupError::InvalidElement)?
            .decompress()
            .map(RElement)
            .ok_or(GroupError::InvalidElement)
    }
}
