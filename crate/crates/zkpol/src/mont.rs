//! Fixed-width Montgomery arithmetic for hot inner loops.
//!
//! Both profile moduli fit four 64-bit limbs, so the scalar-multiplication
//! ladder and the interpolation kernels can run on stack arrays instead of
//! heap big integers. Values are kept in Montgomery form `a·R mod n` with
//! `R = 2^256`; conversion in and out happens only at loop boundaries.

use num_bigint::BigUint;

pub const LIMBS: usize = 4;

/// A residue in Montgomery form. Plain `[u64; 4]`, little-endian limbs.
pub type Residue = [u64; LIMBS];

/// Precomputed parameters for one odd modulus `n < 2^256`.
#[derive(Debug, Clone)]
pub struct MontCtx {
    n: Residue,
    /// `-n^{-1} mod 2^64`, the CIOS folding constant.
    n0_inv: u64,
    /// `R^2 mod n`, for conversion into Montgomery form.
    r2: Residue,
    /// `1` in Montgomery form (`R mod n`).
    one: Residue,
}

impl MontCtx {
    /// None if the modulus is even or does not fit four limbs.
    pub fn new(modulus: &BigUint) -> Option<MontCtx> {
        if modulus.bits() > 64 * LIMBS as u64 {
            return None;
        }
        let n = to_limbs(modulus);
        if n[0] & 1 == 0 {
            return None;
        }
        // Newton iteration doubles the valid low bits each round:
        // inv ← inv·(2 - n·inv) converges to n^{-1} mod 2^64 in 6 steps.
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n[0].wrapping_mul(inv)));
        }
        let n0_inv = inv.wrapping_neg();
        let r2 = to_limbs(&((BigUint::from(1u8) << (2 * 64 * LIMBS)) % modulus));
        let mut ctx = MontCtx { n, n0_inv, r2, one: [0; LIMBS] };
        ctx.one = ctx.mul(&ctx.r2, &[1, 0, 0, 0]);
        Some(ctx)
    }

    pub fn zero(&self) -> Residue {
        [0; LIMBS]
    }

    pub fn one(&self) -> Residue {
        self.one
    }

    pub fn is_zero(&self, a: &Residue) -> bool {
        a.iter().all(|&w| w == 0)
    }

    pub fn to_mont(&self, value: &BigUint) -> Residue {
        debug_assert!(value.bits() <= 64 * LIMBS as u64);
        self.mul(&to_limbs(value), &self.r2)
    }

    pub fn from_mont(&self, a: &Residue) -> BigUint {
        // dedicated REDC: fold one limb per round instead of a full product
        let mut t = [a[0], a[1], a[2], a[3], 0u64];
        for _ in 0..LIMBS {
            let m = t[0].wrapping_mul(self.n0_inv);
            let v = t[0] as u128 + m as u128 * self.n[0] as u128;
            let mut carry = v >> 64;
            for j in 1..LIMBS {
                let v = t[j] as u128 + m as u128 * self.n[j] as u128 + carry;
                t[j - 1] = v as u64;
                carry = v >> 64;
            }
            let v = t[LIMBS] as u128 + carry;
            t[LIMBS - 1] = v as u64;
            t[LIMBS] = (v >> 64) as u64;
        }
        let mut out = [t[0], t[1], t[2], t[3]];
        if t[LIMBS] != 0 || !lt(&out, &self.n) {
            sub_borrow(&mut out, &self.n);
        }
        from_limbs(&out)
    }

    /// CIOS Montgomery multiplication: `a·b·R^{-1} mod n`.
    pub fn mul(&self, a: &Residue, b: &Residue) -> Residue {
        let mut t = [0u64; LIMBS + 2];
        for &ai in a.iter().take(LIMBS) {
            // t += ai · b
            let mut carry = 0u128;
            for j in 0..LIMBS {
                let v = t[j] as u128 + ai as u128 * b[j] as u128 + carry;
                t[j] = v as u64;
                carry = v >> 64;
            }
            let v = t[LIMBS] as u128 + carry;
            t[LIMBS] = v as u64;
            t[LIMBS + 1] = (v >> 64) as u64;

            // fold the low limb away: t = (t + m·n) / 2^64
            let m = t[0].wrapping_mul(self.n0_inv);
            let v = t[0] as u128 + m as u128 * self.n[0] as u128;
            let mut carry = v >> 64;
            for j in 1..LIMBS {
                let v = t[j] as u128 + m as u128 * self.n[j] as u128 + carry;
                t[j - 1] = v as u64;
                carry = v >> 64;
            }
            let v = t[LIMBS] as u128 + carry;
            t[LIMBS - 1] = v as u64;
            t[LIMBS] = t[LIMBS + 1] + (v >> 64) as u64;
            t[LIMBS + 1] = 0;
        }
        let mut out = [t[0], t[1], t[2], t[3]];
        if t[LIMBS] != 0 || !lt(&out, &self.n) {
            sub_borrow(&mut out, &self.n);
        }
        out
    }

    pub fn square(&self, a: &Residue) -> Residue {
        self.mul(a, a)
    }

    pub fn add(&self, a: &Residue, b: &Residue) -> Residue {
        let mut out = [0u64; LIMBS];
        let mut carry = 0u128;
        for i in 0..LIMBS {
            let v = a[i] as u128 + b[i] as u128 + carry;
            out[i] = v as u64;
            carry = v >> 64;
        }
        if carry != 0 || !lt(&out, &self.n) {
            sub_borrow(&mut out, &self.n);
        }
        out
    }

    pub fn sub(&self, a: &Residue, b: &Residue) -> Residue {
        let mut out = *a;
        if lt(a, b) {
            // a - b + n, staged to stay non-negative
            let mut borrow = 0i128;
            for i in 0..LIMBS {
                let v = a[i] as i128 + self.n[i] as i128 - b[i] as i128 + borrow;
                out[i] = v as u64;
                borrow = v >> 64;
            }
        } else {
            let mut borrow = 0i128;
            for i in 0..LIMBS {
                let v = a[i] as i128 - b[i] as i128 + borrow;
                out[i] = v as u64;
                borrow = v >> 64;
            }
        }
        out
    }

    pub fn double_el(&self, a: &Residue) -> Residue {
        self.add(a, a)
    }

    /// Square-and-multiply exponentiation by a plain (non-Montgomery) exponent.
    pub fn pow(&self, a: &Residue, e: &BigUint) -> Residue {
        let mut acc = self.one;
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }
}

/// `a < b` on little-endian limb arrays.
fn lt(a: &Residue, b: &Residue) -> bool {
    for i in (0..LIMBS).rev() {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// `a -= b`, wrapping; callers guarantee the true difference fits.
fn sub_borrow(a: &mut Residue, b: &Residue) {
    let mut borrow = 0i128;
    for i in 0..LIMBS {
        let v = a[i] as i128 - b[i] as i128 + borrow;
        a[i] = v as u64;
        borrow = v >> 64;
    }
}

pub fn to_limbs(value: &BigUint) -> Residue {
    let mut out = [0u64; LIMBS];
    for (i, digit) in value.iter_u64_digits().enumerate().take(LIMBS) {
        out[i] = digit;
    }
    out
}

pub fn from_limbs(limbs: &Residue) -> BigUint {
    let mut digits = [0u32; 2 * LIMBS];
    for (i, limb) in limbs.iter().enumerate() {
        digits[2 * i] = *limb as u32;
        digits[2 * i + 1] = (limb >> 32) as u32;
    }
    BigUint::from_slice(&digits)
}
