//! Zero-knowledge proof-of-location toolkit.
//!
//! A user obtains a location certificate from a smart access point, the
//! access point anchors a hash digest of the certificate on a simulated
//! blockchain, and the user later proves possession of an anchored
//! certificate to a service provider through a pairing-based SNARK —
//! revealing only the fields selected by a privacy level.
//!
//! Layering, bottom up:
//! - [`field`]: prime-field scalars (hash states, wires, exponents)
//! - [`pairing`]: supersingular curve, symmetric Tate pairing
//! - [`hash`]: algebraic sponge hash inside the field + SHA-256 wrapper
//! - [`poly`]: dense polynomials, interpolation, vanishing targets
//! - [`circuit`]: flattened constraints, witness evaluation, the
//!   proof-of-location statement
//! - [`qap`]: circuit → quadratic-program interpolation

pub mod bench;
pub mod circuit;
pub mod field;
pub mod hash;
pub mod pairing;
pub mod poly;
pub mod qap;
pub mod identity;
pub mod ledger;
pub(crate) mod mont;
pub mod protocol;
pub mod scenario;
pub mod snark;
