//! Algebraic hash inside the scalar field, plus the byte-level hash.
//!
//! The field hash is a sponge over a cube-map round permutation:
//! `Permute` runs `R` rounds of `x ← (x + c_i)^3` and then adds the
//! pre-round state back (a Miyaguchi–Preneel-style feedforward that makes
//! the map one-way); absorption is `state ← Permute(state + m)`. The round
//! function is a bijection exactly when `gcd(3, p − 1) = 1`, which the
//! parameter constructor enforces. Being built from field additions and two
//! multiplications per round, the hash translates directly into circuit
//! constraints, so statements about hashed values can be proven in
//! zero knowledge.
//!
//! Byte-level hashing (block hashes, signatures, key fingerprints) is
//! SHA-256 throughout.

use num_bigint::BigUint;
use num_traits::Zero;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{Field, FieldElement, ProfileTag};

/// Domain string for deriving round constants.
const CONSTANT_DOMAIN: &[u8] = b"zkpol-mimc-v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("cube map is not a bijection: 3 divides p - 1")]
    CubeNotPermutation,
    #[error("round constant list must start with 0 and match the round count")]
    BadConstants,
}

/// Round count and per-round constants for one field.
#[derive(Debug, Clone)]
pub struct AlgebraicHashParams {
    field: Field,
    constants: Vec<FieldElement>,
}

impl AlgebraicHashParams {
    /// Default round count per profile: enough rounds for the large field,
    /// few enough in the small profiles to keep circuits brute-force sized.
    pub fn default_rounds(tag: ProfileTag) -> usize {
        match tag {
            ProfileTag::Realistic => 91,
            ProfileTag::Oracle | ProfileTag::Custom => 4,
        }
    }

    /// Derives round constants: `c_0 = 0`,
    /// `c_i = SHA-256(domain ‖ i as 8-byte BE) mod p` for `i ≥ 1`.
    pub fn derive(field: &Field, rounds: usize) -> Result<Self, HashError> {
        let mut constants = Vec::with_capacity(rounds);
        for i in 0..rounds {
            if i == 0 {
                constants.push(field.zero());
                continue;
            }
            let mut hasher = Sha256::new();
            hasher.update(CONSTANT_DOMAIN);
            hasher.update((i as u64).to_be_bytes());
            let digest = hasher.finalize();
            constants.push(field.element(BigUint::from_bytes_be(&digest)));
        }
        Self::with_constants(field, constants)
    }

    /// Explicit constants (unit tests). The first constant must be zero.
    pub fn with_constants(
        field: &Field,
        constants: Vec<FieldElement>,
    ) -> Result<Self, HashError> {
        // cube map is a permutation of F_p iff gcd(3, p-1) = 1
        let p_minus_1 = field.modulus() - 1u32;
        if (p_minus_1 % 3u32).is_zero() {
            return Err(HashError::CubeNotPermutation);
        }
        if constants.is_empty() || !constants[0].is_zero() {
            return Err(HashError::BadConstants);
        }
        Ok(AlgebraicHashParams { field: field.clone(), constants })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rounds(&self) -> usize {
        self.constants.len()
    }

    pub fn constants(&self) -> &[FieldElement] {
        &self.constants
    }

    /// The bijective round chain alone: `R` rounds of `x ← (x + c_i)^3`,
    /// no feedforward.
    pub fn permute_raw(&self, x: &FieldElement) -> FieldElement {
        let mut x = x.clone();
        for c in &self.constants {
            let t = &x + c;
            x = &t.square() * &t;
        }
        x
    }

    /// Full permutation step: round chain plus pre-round state feedforward.
    pub fn permute(&self, x: &FieldElement) -> FieldElement {
        &self.permute_raw(x) + x
    }

    /// Sponge over the inputs: `state ← Permute(state + m)` from a zero
    /// state. The empty input hashes to zero.
    pub fn hash_field(&self, inputs: &[FieldElement]) -> FieldElement {
        let mut state = self.field.zero();
        for m in inputs {
            state = self.permute(&(&state + m));
        }
        state
    }
}

/// SHA-256 of a byte string.
pub fn hash_bytes(data: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(data);
    hasher.finalize().into()
}

/// SHA-256 over several segments without concatenating buffers.
pub fn hash_bytes_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
    }
    hasher.finalize().into()
}

/// Packs an arbitrary byte string into field elements: big-endian chunks one
/// byte narrower than the field width, so every chunk value is < p. For a
/// fixed-width input this mapping is injective.
pub fn bytes_to_elements(field: &Field, bytes: &[u8]) -> Vec<FieldElement> {
    bytes
        .chunks(field.chunk_len())
        .map(|chunk| field.element(BigUint::from_bytes_be(chunk)))
        .collect()
}

/// Number of elements [`bytes_to_elements`] yields for `len` input bytes.
pub fn element_count(field: &Field, len: usize) -> usize {
    len.div_ceil(field.chunk_len())
}

/// Reduces a 32-byte digest into the field (big-endian mod p).
pub fn field_from_digest(field: &Field, digest: &[u8; 32]) -> FieldElement {
    field.element(BigUint::from_bytes_be(digest))
}
