//! Key pairs, signatures, and sealed envelopes for protocol actors.
//!
//! Signatures are Schnorr-style over the signature subgroup with a
//! deterministic nonce (derived from the secret key and the message), so a
//! signer produces byte-identical signatures on replayed inputs. Envelopes
//! are hybrid: an ephemeral Diffie–Hellman share keys a hash-based stream
//! cipher and a MAC tag. Opening fails uniformly — a caller cannot tell a
//! parse error from a tag mismatch.

use num_bigint::BigUint;
use rand::RngCore;
use thiserror::Error;

use crate::field::FieldElement;
use crate::hash::{field_from_digest, hash_bytes_parts};
use crate::pairing::{GroupElement, PairingEngine};

const NONCE_DOMAIN: &[u8] = b"zkpol/sig/nonce/v1";
const CHALLENGE_DOMAIN: &[u8] = b"zkpol/sig/chal/v1";
const STREAM_DOMAIN: &[u8] = b"zkpol/enc/stream/v1";
const TAG_DOMAIN: &[u8] = b"zkpol/enc/tag/v1";
const ENVELOPE_VERSION: u8 = 1;
const TAG_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("envelope could not be opened")]
    OpenFailed,
    #[error("malformed signature encoding")]
    BadSignature,
}

/// Long-term key pair: secret scalar and public point on the signature
/// generator.
#[derive(Debug, Clone)]
pub struct KeyPair {
    sk: FieldElement,
    pk: GroupElement,
}

impl KeyPair {
    pub fn generate(engine: &PairingEngine, rng: &mut impl RngCore) -> KeyPair {
        let sk = engine.scalar_field().random_nonzero(rng);
        let pk = engine.group_exp(engine.signature_generator(), &sk);
        KeyPair { sk, pk }
    }

    pub fn public_key(&self) -> &GroupElement {
        &self.pk
    }

    pub fn public_key_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        self.pk.to_bytes(engine.base_field())
    }

    /// Signs `message` with a nonce derived from (sk, message); repeated
    /// calls return the identical signature.
    pub fn sign(&self, engine: &PairingEngine, message: &[u8]) -> Signature {
        let field = engine.scalar_field();
        let msg_hash = crate::hash::hash_bytes(message);
        let sk_bytes = self.sk.to_bytes();
        let mut counter = 0u64;
        let k = loop {
            let digest = hash_bytes_parts(&[
                NONCE_DOMAIN,
                &sk_bytes,
                &msg_hash,
                &counter.to_be_bytes(),
            ]);
            let k = field_from_digest(field, &digest);
            if !k.is_zero() {
                break k;
            }
            counter += 1;
        };
        let commitment = engine.group_exp(engine.signature_generator(), &k);
        let c = challenge(engine, &commitment, &self.pk, &msg_hash);
        let z = &k + &(&c * &self.sk);
        Signature { c, z }
    }

    /// Opens an envelope sealed to this key pair's public key.
    pub fn open(&self, engine: &PairingEngine, envelope: &[u8]) -> Result<Vec<u8>, IdentityError> {
        let point_len = engine.point_byte_len();
        if envelope.len() < 1 + point_len + TAG_LEN || envelope[0] != ENVELOPE_VERSION {
            return Err(IdentityError::OpenFailed);
        }
        let eph_pk = engine
            .point_from_bytes(&envelope[1..1 + point_len])
            .map_err(|_| IdentityError::OpenFailed)?;
        if engine.check_subgroup(&eph_pk).is_err() {
            return Err(IdentityError::OpenFailed);
        }
        let ciphertext = &envelope[1 + point_len..envelope.len() - TAG_LEN];
        let tag = &envelope[envelope.len() - TAG_LEN..];
        let shared = engine.group_exp(&eph_pk, &self.sk);
        let shared_bytes = shared.to_bytes(engine.base_field());
        let expect = hash_bytes_parts(&[TAG_DOMAIN, &shared_bytes, ciphertext]);
        if !constant_time_eq(&expect, tag) {
            return Err(IdentityError::OpenFailed);
        }
        Ok(apply_stream(&shared_bytes, ciphertext))
    }
}

/// Schnorr signature in challenge–response form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub c: FieldElement,
    pub z: FieldElement,
}

impl Signature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.c.to_bytes();
        out.extend_from_slice(&self.z.to_bytes());
        out
    }

    pub fn from_bytes(engine: &PairingEngine, bytes: &[u8]) -> Result<Signature, IdentityError> {
        let w = engine.scalar_field().byte_len();
        if bytes.len() != 2 * w {
            return Err(IdentityError::BadSignature);
        }
        let field = engine.scalar_field();
        let c = field
            .element_from_bytes(&bytes[..w])
            .map_err(|_| IdentityError::BadSignature)?;
        let z = field
            .element_from_bytes(&bytes[w..])
            .map_err(|_| IdentityError::BadSignature)?;
        Ok(Signature { c, z })
    }
}

fn challenge(
    engine: &PairingEngine,
    commitment: &GroupElement,
    pk: &GroupElement,
    msg_hash: &[u8; 32],
) -> FieldElement {
    let digest = hash_bytes_parts(&[
        CHALLENGE_DOMAIN,
        &commitment.to_bytes(engine.base_field()),
        &pk.to_bytes(engine.base_field()),
        msg_hash,
    ]);
    field_from_digest(engine.scalar_field(), &digest)
}

/// Checks a signature: recompute the commitment as g^z · pk^(−c) and
/// compare challenges.
pub fn verify_signature(
    engine: &PairingEngine,
    pk: &GroupElement,
    message: &[u8],
    sig: &Signature,
) -> bool {
    let msg_hash = crate::hash::hash_bytes(message);
    let commitment = engine.add(
        &engine.group_exp(engine.signature_generator(), &sig.z),
        &engine.group_exp(pk, &-&sig.c),
    );
    challenge(engine, &commitment, pk, &msg_hash) == sig.c
}

fn apply_stream(shared_bytes: &[u8], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    for (block_idx, block) in data.chunks(32).enumerate() {
        let pad = hash_bytes_parts(&[
            STREAM_DOMAIN,
            shared_bytes,
            &(block_idx as u64).to_be_bytes(),
        ]);
        for (b, p) in block.iter().zip(pad.iter()) {
            out.push(b ^ p);
        }
    }
    out
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Seals `plaintext` to `recipient`: version byte, ephemeral public point,
/// stream-ciphered payload, 32-byte tag.
pub fn seal(
    engine: &PairingEngine,
    recipient: &GroupElement,
    plaintext: &[u8],
    rng: &mut impl RngCore,
) -> Vec<u8> {
    let eph_sk = engine.scalar_field().random_nonzero(rng);
    let eph_pk = engine.group_exp(engine.signature_generator(), &eph_sk);
    let shared = engine.group_exp(recipient, &eph_sk);
    let shared_bytes = shared.to_bytes(engine.base_field());
    let ciphertext = apply_stream(&shared_bytes, plaintext);
    let tag = hash_bytes_parts(&[TAG_DOMAIN, &shared_bytes, &ciphertext]);
    let mut out = Vec::with_capacity(1 + engine.point_byte_len() + ciphertext.len() + TAG_LEN);
    out.push(ENVELOPE_VERSION);
    out.extend_from_slice(&eph_pk.to_bytes(engine.base_field()));
    out.extend_from_slice(&ciphertext);
    out.extend_from_slice(&tag);
    out
}

/// Deterministic key pair from a seed tag — handy for fixed simulation
/// casts. Uses the same derive-then-exponentiate path as `generate`.
pub fn keypair_from_tag(engine: &PairingEngine, tag: &[u8]) -> KeyPair {
    let digest = hash_bytes_parts(&[b"zkpol/sig/keyseed/v1", tag]);
    let field = engine.scalar_field();
    let mut sk = field.element(BigUint::from_bytes_be(&digest));
    if sk.is_zero() {
        sk = field.one();
    }
    let pk = engine.group_exp(engine.signature_generator(), &sk);
    KeyPair { sk, pk }
}
