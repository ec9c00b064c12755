//! Prime-field arithmetic with a runtime modulus.
//!
//! All scalar math in the system — hash states, circuit wires, QAP
//! polynomials, exponents handed to the group layer — lives in one prime
//! field `F_p`. The modulus is chosen per profile so the same code path
//! serves both brute-force-checkable small instances and timing-scale ones.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use thiserror::Error;

use crate::mont::MontCtx;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus is not prime")]
    NotPrime,
    #[error("modulus below profile floor (need >= 2^{floor_bits})")]
    BelowProfileFloor { floor_bits: u32 },
    #[error("element belongs to a different field")]
    FieldMismatch,
    #[error("encoding is not a canonical field element")]
    NonCanonical,
}

/// Which parameter regime a field instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileTag {
    /// Small parameters; every derived quantity is brute-force checkable.
    Oracle,
    /// Large parameters sized for meaningful timing runs.
    Realistic,
    /// Unit-test fields with hand-picked tiny moduli.
    Custom,
}

#[derive(Debug)]
struct FieldParams {
    modulus: BigUint,
    tag: ProfileTag,
    bits: u64,
    byte_len: usize,
    /// Fixed-width kernel shared by every hot loop over this field; absent
    /// only when the modulus exceeds four limbs.
    mont: Option<MontCtx>,
}

/// Shared handle to field parameters. Cheap to clone.
#[derive(Clone)]
pub struct Field(Arc<FieldParams>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.modulus == other.0.modulus
    }
}
impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field(p={}, {:?})", self.0.modulus, self.0.tag)
    }
}

impl Field {
    /// Builds a field after validating primality and the profile size floor
    /// (2^7 for oracle, 2^190 for realistic).
    pub fn new(modulus: BigUint, tag: ProfileTag) -> Result<Self, FieldError> {
        let floor_bits: u32 = match tag {
            ProfileTag::Oracle => 7,
            ProfileTag::Realistic => 190,
            ProfileTag::Custom => 1,
        };
        if modulus.bits() <= u64::from(floor_bits) {
            return Err(FieldError::BelowProfileFloor { floor_bits });
        }
        if !is_prime(&modulus) {
            return Err(FieldError::NotPrime);
        }
        let bits = modulus.bits();
        let byte_len = ((bits + 7) / 8) as usize;
        let mont = MontCtx::new(&modulus);
        Ok(Field(Arc::new(FieldParams { modulus, tag, bits, byte_len, mont })))
    }

    pub fn custom(modulus: u64) -> Result<Self, FieldError> {
        Field::new(BigUint::from(modulus), ProfileTag::Custom)
    }

    pub fn modulus(&self) -> &BigUint {
        &self.0.modulus
    }

    /// The shared fixed-width kernel, when the modulus fits four limbs.
    pub(crate) fn mont_ctx(&self) -> Option<&MontCtx> {
        self.0.mont.as_ref()
    }

    pub fn tag(&self) -> ProfileTag {
        self.0.tag
    }

    pub fn bits(&self) -> u64 {
        self.0.bits
    }

    /// Width of the canonical big-endian element encoding.
    pub fn byte_len(&self) -> usize {
        self.0.byte_len
    }

    /// Chunk width used when packing arbitrary byte strings into elements:
    /// one byte less than the element width, so every chunk value < p.
    pub fn chunk_len(&self) -> usize {
        (self.0.bits / 8) as usize - 1
    }

    pub fn element(&self, value: BigUint) -> FieldElement {
        FieldElement { value: value % &self.0.modulus, field: self.clone() }
    }

    /// Wraps a value already known to be `< p`, skipping the reduction.
    pub(crate) fn element_reduced(&self, value: BigUint) -> FieldElement {
        debug_assert!(value < self.0.modulus);
        FieldElement { value, field: self.clone() }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: BigUint::zero(), field: self.clone() }
    }

    pub fn one(&self) -> FieldElement {
        self.element(BigUint::one())
    }

    pub fn from_u64(&self, value: u64) -> FieldElement {
        self.element(BigUint::from(value))
    }

    /// Signed reduction: negative inputs land on `p - |v| mod p`.
    pub fn from_i64(&self, value: i64) -> FieldElement {
        if value >= 0 {
            self.from_u64(value as u64)
        } else {
            -self.from_u64(value.unsigned_abs())
        }
    }

    /// Uniform draw by rejection sampling fixed-width byte strings.
    pub fn random(&self, rng: &mut impl RngCore) -> FieldElement {
        let mut buf = vec![0u8; self.0.byte_len];
        loop {
            rng.fill_bytes(&mut buf);
            // mask excess high bits so the acceptance rate stays >= 1/2
            let excess = (self.0.byte_len as u64) * 8 - self.0.bits;
            buf[0] &= 0xffu8 >> excess;
            let candidate = BigUint::from_bytes_be(&buf);
            if candidate < self.0.modulus {
                return FieldElement { value: candidate, field: self.clone() };
            }
        }
    }

    /// Uniform draw from F_p \ {0}.
    pub fn random_nonzero(&self, rng: &mut impl RngCore) -> FieldElement {
        loop {
            let e = self.random(rng);
            if !e.is_zero() {
                return e;
            }
        }
    }

    /// Decodes the canonical fixed-width big-endian encoding.
    pub fn element_from_bytes(&self, bytes: &[u8]) -> Result<FieldElement, FieldError> {
        if bytes.len() != self.0.byte_len {
            return Err(FieldError::NonCanonical);
        }
        let value = BigUint::from_bytes_be(bytes);
        if value >= self.0.modulus {
            return Err(FieldError::NonCanonical);
        }
        Ok(FieldElement { value, field: self.clone() })
    }
}

/// An element of F_p. Always stored reduced: `value < p`.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: BigUint,
    field: Field,
}

impl FieldElement {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn square(&self) -> FieldElement {
        self * self
    }

    pub fn pow(&self, exponent: &BigUint) -> FieldElement {
        FieldElement {
            value: self.value.modpow(exponent, self.field.modulus()),
            field: self.field.clone(),
        }
    }

    /// Multiplicative inverse via Fermat: a^(p-2). Zero has none.
    pub fn inverse(&self) -> Result<FieldElement, FieldError> {
        if self.value.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let exp = self.field.modulus() - 2u32;
        Ok(self.pow(&exp))
    }

    /// Canonical fixed-width big-endian encoding, `ceil(bits(p)/8)` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.field.byte_len()];
        let raw = self.value.to_bytes_be();
        out[self.field.byte_len() - raw.len()..].copy_from_slice(&raw);
        out
    }

    fn assert_same_field(&self, other: &FieldElement) {
        debug_assert!(
            self.field == other.field,
            "mixed elements of different fields"
        );
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fe({})", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
        impl $trait<FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$method(&rhs)
            }
        }
    };
}

impl Add<&FieldElement> for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        let mut v = &self.value + &rhs.value;
        if v >= *self.field.modulus() {
            v -= self.field.modulus();
        }
        FieldElement { value: v, field: self.field.clone() }
    }
}
forward_binop!(Add, add);

impl Sub<&FieldElement> for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        let v = if self.value >= rhs.value {
            &self.value - &rhs.value
        } else {
            self.field.modulus() - &rhs.value + &self.value
        };
        FieldElement { value: v, field: self.field.clone() }
    }
}
forward_binop!(Sub, sub);

impl Mul<&FieldElement> for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        FieldElement {
            value: (&self.value * &rhs.value) % self.field.modulus(),
            field: self.field.clone(),
        }
    }
}
forward_binop!(Mul, mul);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        if self.value.is_zero() {
            self.clone()
        } else {
            FieldElement {
                value: self.field.modulus() - &self.value,
                field: self.field.clone(),
            }
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

impl AddAssign<&FieldElement> for FieldElement {
    fn add_assign(&mut self, rhs: &FieldElement) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&FieldElement> for FieldElement {
    fn sub_assign(&mut self, rhs: &FieldElement) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&FieldElement> for FieldElement {
    fn mul_assign(&mut self, rhs: &FieldElement) {
        *self = &*self * rhs;
    }
}

/// Miller–Rabin primality. Deterministic witness set below 2^64, the same
/// witnesses plus derived pseudo-random ones above.
pub fn is_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    let small: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &small {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    // n - 1 = d * 2^s with d odd
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let mut witnesses: Vec<BigUint> = small.iter().map(|&w| BigUint::from(w)).collect();
    if n.bits() > 64 {
        // deterministic extra witnesses derived from n itself
        let mut w = BigUint::from(41u32);
        for _ in 0..20 {
            witnesses.push(&w % (n - 3u32) + 2u32);
            w = &w * &w + 1u32;
        }
    }

    'next: for a in witnesses {
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'next;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f17() -> Field {
        Field::custom(17).unwrap()
    }

    #[test]
    fn add_wraps_mod_17() {
        let f = f17();
        assert_eq!(f.from_u64(5) + f.from_u64(13), f.from_u64(1));
    }

    #[test]
    fn mul_wraps_mod_17() {
        let f = f17();
        assert_eq!(f.from_u64(5) * f.from_u64(7), f.from_u64(1));
    }

    #[test]
    fn zero_has_no_inverse() {
        let f = f17();
        assert_eq!(f.zero().inverse(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn composite_modulus_rejected() {
        assert_eq!(
            Field::new(BigUint::from(15u32), ProfileTag::Custom).unwrap_err(),
            FieldError::NotPrime
        );
    }

    #[test]
    fn oracle_floor_enforced() {
        assert_eq!(
            Field::new(BigUint::from(97u32), ProfileTag::Oracle).unwrap_err(),
            FieldError::BelowProfileFloor { floor_bits: 7 }
        );
    }

    #[test]
    fn signed_reduction() {
        let f = f17();
        assert_eq!(f.from_i64(-1), f.from_u64(16));
        assert_eq!(f.from_i64(-17), f.zero());
        assert_eq!(f.from_i64(20), f.from_u64(3));
    }

    #[test]
    fn random_draws_in_range() {
        let f = f17();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut seen = [false; 17];
        for _ in 0..1000 {
            let e = f.random(&mut rng);
            let v: u64 = e.value().try_into().unwrap();
            assert!(v < 17);
            seen[v as usize] = true;
        }
        // 1000 draws from 17 values: all hit with overwhelming probability
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn random_is_seed_deterministic() {
        let f = f17();
        let a: Vec<_> = {
            let mut rng = ChaCha20Rng::seed_from_u64(99);
            (0..32).map(|_| f.random(&mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha20Rng::seed_from_u64(99);
            (0..32).map(|_| f.random(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn encoding_round_trip_and_canonical_rejection() {
        let f = f17();
        for v in 0..17u64 {
            let e = f.from_u64(v);
            let bytes = e.to_bytes();
            assert_eq!(bytes.len(), 1);
            assert_eq!(f.element_from_bytes(&bytes).unwrap(), e);
        }
        assert_eq!(f.element_from_bytes(&[17]), Err(FieldError::NonCanonical));
        assert_eq!(f.element_from_bytes(&[0, 1]), Err(FieldError::NonCanonical));
    }

    #[test]
    fn primality_known_values() {
        assert!(is_prime(&BigUint::from(2u32)));
        assert!(is_prime(&BigUint::from(101u32)));
        assert!(is_prime(&BigUint::from(9223372036854782171u64)));
        assert!(!is_prime(&BigUint::from(1u32)));
        assert!(!is_prime(&BigUint::from(9223372036854782173u64)));
    }

    proptest! {
        #[test]
        fn field_axioms_mod_small_prime(a in 0u64..101, b in 0u64..101, c in 0u64..101) {
            let f = Field::custom(101).unwrap();
            let (a, b, c) = (f.from_u64(a), f.from_u64(b), f.from_u64(c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
            prop_assert_eq!(&a - &a, f.zero());
            prop_assert_eq!(&a + (-&a), f.zero());
            if !a.is_zero() {
                prop_assert_eq!(&a * &a.inverse().unwrap(), f.one());
            }
        }

        #[test]
        fn pow_matches_repeated_multiplication(a in 0u64..101, e in 0u32..24) {
            let f = Field::custom(101).unwrap();
            let base = f.from_u64(a);
            let mut acc = f.one();
            for _ in 0..e {
                acc = &acc * &base;
            }
            prop_assert_eq!(base.pow(&BigUint::from(e)), acc);
        }
    }
}
