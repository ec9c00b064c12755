//! Symmetric bilinear pairing over a supersingular curve.
//!
//! The curve is `y^2 = x^3 + x` over `F_q` with `q ≡ 3 (mod 4)` and
//! `q = 4r - 1`, so the group order is `q + 1 = 4r` with `r` prime. Proof
//! and key material lives in the prime-order-`r` subgroup; exponents live in
//! the scalar field `F_r` from [`crate::field`]. The pairing is the reduced
//! Tate pairing composed with the distortion map `φ(x, y) = (-x, iy)`
//! (`i^2 = -1` in `F_{q^2}`), which makes it symmetric: both arguments come
//! from the same source group.

use std::fmt;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{Field, FieldElement, ProfileTag};
use crate::mont::{MontCtx, Residue};

/// Prime order of the source-group subgroup, oracle profile (64-bit).
pub const ORACLE_SUBGROUP_ORDER: &str = "9223372036854782171";
/// Prime order of the source-group subgroup, realistic profile (254-bit).
/// Smallest prime above 2^253 whose base prime 4r − 1 is also prime.
pub const REALISTIC_SUBGROUP_ORDER: &str =
    "14474011154664524427946373126085988481658748083205070504932198000989141247241";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error("curve parameters rejected: {0}")]
    BadParams(String),
    #[error("point encoding is not canonical or not on the curve")]
    InvalidPoint,
    #[error("point is not in the prime-order subgroup")]
    NotInSubgroup,
}

// ── quadratic extension F_{q^2} = F_q[i] / (i^2 + 1) ──

/// Element `re + im·i` of the quadratic extension of the base field.
#[derive(Clone, PartialEq, Eq)]
pub struct Fq2 {
    pub re: FieldElement,
    pub im: FieldElement,
}

impl fmt::Debug for Fq2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)", self.re, self.im)
    }
}

impl Fq2 {
    pub fn new(re: FieldElement, im: FieldElement) -> Self {
        Fq2 { re, im }
    }

    pub fn one(base: &Field) -> Self {
        Fq2 { re: base.one(), im: base.zero() }
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn mul(&self, other: &Fq2) -> Fq2 {
        // (a + bi)(c + di) = (ac - bd) + (ad + bc)i
        let ac = &self.re * &other.re;
        let bd = &self.im * &other.im;
        let ad_bc = &(&self.re * &other.im) + &(&self.im * &other.re);
        Fq2 { re: &ac - &bd, im: ad_bc }
    }

    pub fn square(&self) -> Fq2 {
        self.mul(self)
    }

    pub fn pow(&self, exponent: &BigUint) -> Fq2 {
        let mut acc = Fq2::one(self.re.field());
        for i in (0..exponent.bits()).rev() {
            acc = acc.square();
            if exponent.bit(i) {
                acc = acc.mul(self);
            }
        }
        acc
    }

    pub fn inverse(&self) -> Option<Fq2> {
        // (a + bi)^-1 = (a - bi) / (a^2 + b^2)
        let norm = &self.re.square() + &self.im.square();
        let ninv = norm.inverse().ok()?;
        Some(Fq2 { re: &self.re * &ninv, im: -&self.im * &ninv })
    }
}

// ── source group ──

/// Affine point on the source curve, or the identity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GroupElement {
    Identity,
    Point { x: FieldElement, y: FieldElement },
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        matches!(self, GroupElement::Identity)
    }

    /// Canonical encoding: one tag byte (0x00 identity, 0x04 affine), then
    /// x and y as fixed-width big-endian coordinates. Always the same width.
    pub fn to_bytes(&self, base: &Field) -> Vec<u8> {
        let w = base.byte_len();
        let mut out = vec![0u8; 1 + 2 * w];
        match self {
            GroupElement::Identity => {}
            GroupElement::Point { x, y } => {
                out[0] = 0x04;
                out[1..1 + w].copy_from_slice(&x.to_bytes());
                out[1 + w..].copy_from_slice(&y.to_bytes());
            }
        }
        out
    }
}

/// Jacobian-coordinate point used internally for scalar multiplication.
/// Infinity is represented by z = 0.
#[derive(Clone)]
struct Jacobian {
    x: FieldElement,
    y: FieldElement,
    z: FieldElement,
}

/// Jacobian point with coordinates held as Montgomery residues. Mirror of
/// `Jacobian` for the fixed-width ladder; infinity is z = 0.
struct MJac {
    x: Residue,
    y: Residue,
    z: Residue,
}

fn mjac_identity(ctx: &MontCtx) -> MJac {
    MJac { x: ctx.one(), y: ctx.one(), z: ctx.zero() }
}

fn mjac_double(ctx: &MontCtx, p: &MJac) -> MJac {
    if ctx.is_zero(&p.z) || ctx.is_zero(&p.y) {
        return mjac_identity(ctx);
    }
    let xx = ctx.square(&p.x);
    let yy = ctx.square(&p.y);
    let yyyy = ctx.square(&yy);
    let zz = ctx.square(&p.z);
    let s = {
        let t = ctx.sub(&ctx.square(&ctx.add(&p.x, &yy)), &ctx.add(&xx, &yyyy));
        ctx.double_el(&t)
    };
    // M = 3·XX + a·ZZ^2 with a = 1
    let m = ctx.add(&ctx.add(&ctx.double_el(&xx), &xx), &ctx.square(&zz));
    let x3 = ctx.sub(&ctx.square(&m), &ctx.double_el(&s));
    let y3 = {
        let e8 = ctx.double_el(&ctx.double_el(&ctx.double_el(&yyyy)));
        ctx.sub(&ctx.mul(&m, &ctx.sub(&s, &x3)), &e8)
    };
    let z3 = ctx.sub(&ctx.square(&ctx.add(&p.y, &p.z)), &ctx.add(&yy, &zz));
    MJac { x: x3, y: y3, z: z3 }
}

fn mjac_add_affine(ctx: &MontCtx, p: &MJac, qx: &Residue, qy: &Residue) -> MJac {
    if ctx.is_zero(&p.z) {
        return MJac { x: *qx, y: *qy, z: ctx.one() };
    }
    let z1z1 = ctx.square(&p.z);
    let u2 = ctx.mul(qx, &z1z1);
    let s2 = ctx.mul(&ctx.mul(qy, &p.z), &z1z1);
    if u2 == p.x {
        if s2 == p.y {
            return mjac_double(ctx, p);
        }
        return mjac_identity(ctx);
    }
    let h = ctx.sub(&u2, &p.x);
    let hh = ctx.square(&h);
    let i = ctx.double_el(&ctx.double_el(&hh));
    let j = ctx.mul(&h, &i);
    let rr = ctx.double_el(&ctx.sub(&s2, &p.y));
    let v = ctx.mul(&p.x, &i);
    let x3 = ctx.sub(&ctx.sub(&ctx.square(&rr), &j), &ctx.double_el(&v));
    let y3 = {
        let yj = ctx.mul(&p.y, &j);
        ctx.sub(&ctx.mul(&rr, &ctx.sub(&v, &x3)), &ctx.double_el(&yj))
    };
    let z3 = ctx.sub(&ctx.sub(&ctx.square(&ctx.add(&p.z, &h)), &z1z1), &hh);
    MJac { x: x3, y: y3, z: z3 }
}

fn mjac_add(ctx: &MontCtx, p: &MJac, q: &MJac) -> MJac {
    if ctx.is_zero(&p.z) {
        return MJac { x: q.x, y: q.y, z: q.z };
    }
    if ctx.is_zero(&q.z) {
        return MJac { x: p.x, y: p.y, z: p.z };
    }
    let z1z1 = ctx.square(&p.z);
    let z2z2 = ctx.square(&q.z);
    let u1 = ctx.mul(&p.x, &z2z2);
    let u2 = ctx.mul(&q.x, &z1z1);
    let s1 = ctx.mul(&ctx.mul(&p.y, &q.z), &z2z2);
    let s2 = ctx.mul(&ctx.mul(&q.y, &p.z), &z1z1);
    if u1 == u2 {
        if s1 == s2 {
            return mjac_double(ctx, p);
        }
        return mjac_identity(ctx);
    }
    let h = ctx.sub(&u2, &u1);
    let i = ctx.square(&ctx.double_el(&h));
    let j = ctx.mul(&h, &i);
    let rr = ctx.double_el(&ctx.sub(&s2, &s1));
    let v = ctx.mul(&u1, &i);
    let x3 = ctx.sub(&ctx.sub(&ctx.square(&rr), &j), &ctx.double_el(&v));
    let y3 = {
        let sj = ctx.mul(&s1, &j);
        ctx.sub(&ctx.mul(&rr, &ctx.sub(&v, &x3)), &ctx.double_el(&sj))
    };
    let z3 = {
        let zs = ctx.sub(&ctx.square(&ctx.add(&p.z, &q.z)), &ctx.add(&z1z1, &z2z2));
        ctx.mul(&zs, &h)
    };
    MJac { x: x3, y: y3, z: z3 }
}

fn mjac_ladder(ctx: &MontCtx, qx: &Residue, qy: &Residue, k: &BigUint) -> MJac {
    let mut acc = mjac_identity(ctx);
    for i in (0..k.bits()).rev() {
        acc = mjac_double(ctx, &acc);
        if k.bit(i) {
            acc = mjac_add_affine(ctx, &acc, qx, qy);
        }
    }
    acc
}

/// Affine coordinates still in residue form; `None` for infinity. The
/// z-inversion runs through Fermat with exponent q - 2.
fn mjac_affine_residues(ctx: &MontCtx, p: &MJac, inv_exp: &BigUint) -> Option<(Residue, Residue)> {
    if ctx.is_zero(&p.z) {
        return None;
    }
    let zinv = ctx.pow(&p.z, inv_exp);
    let zinv2 = ctx.square(&zinv);
    let zinv3 = ctx.mul(&zinv2, &zinv);
    Some((ctx.mul(&p.x, &zinv2), ctx.mul(&p.y, &zinv3)))
}

// F_{q²} arithmetic on residue pairs (re, im) for the pairing hot path.

/// `(a + bi)²` as two base multiplications: (a+b)(a−b) + 2ab·i.
fn fq2m_square(ctx: &MontCtx, a: &(Residue, Residue)) -> (Residue, Residue) {
    let re = ctx.mul(&ctx.add(&a.0, &a.1), &ctx.sub(&a.0, &a.1));
    let im = ctx.double_el(&ctx.mul(&a.0, &a.1));
    (re, im)
}

/// `(a + bi)(c + di)` as three base multiplications (Karatsuba cross term).
fn fq2m_mul(ctx: &MontCtx, a: &(Residue, Residue), b: &(Residue, Residue)) -> (Residue, Residue) {
    let ac = ctx.mul(&a.0, &b.0);
    let bd = ctx.mul(&a.1, &b.1);
    let cross = ctx.mul(&ctx.add(&a.0, &a.1), &ctx.add(&b.0, &b.1));
    (ctx.sub(&ac, &bd), ctx.sub(&ctx.sub(&cross, &ac), &bd))
}

/// Element of the target group (subgroup of order r in F_{q^2}^*), already
/// run through the final exponentiation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TargetElement(pub Fq2);

impl TargetElement {
    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }

    pub fn mul(&self, other: &TargetElement) -> TargetElement {
        TargetElement(self.0.mul(&other.0))
    }

    pub fn pow(&self, exponent: &BigUint) -> TargetElement {
        TargetElement(self.0.pow(exponent))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.0.re.to_bytes();
        out.extend_from_slice(&self.0.im.to_bytes());
        out
    }
}

/// Curve, subgroup, and generator data for one parameter profile.
///
/// `base` is F_q (coordinates), `scalar` is F_r (exponents). `g` generates
/// the order-r subgroup used for proof material; `g_sig` is an independent
/// generator (separate derivation domain) used by the identity layer.
#[derive(Clone)]
pub struct PairingEngine {
    base: Field,
    scalar: Field,
    g: GroupElement,
    g_sig: GroupElement,
    sqrt_exp: BigUint,  // (q+1)/4, square root exponent for q ≡ 3 (mod 4)
    final_exp: BigUint, // (q^2-1)/r
}

impl fmt::Debug for PairingEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PairingEngine(r={}, q={})", self.scalar.modulus(), self.base.modulus())
    }
}

impl PairingEngine {
    /// Builds an engine from a subgroup order `r`; the base prime is
    /// `q = 4r - 1`. Rejects parameters that break the curve structure.
    pub fn from_subgroup_order(r: BigUint, tag: ProfileTag) -> Result<Self, PairingError> {
        let q = &r * 4u32 - 1u32;
        if &q % 4u32 != BigUint::from(3u32) {
            return Err(PairingError::BadParams("q mod 4 != 3".into()));
        }
        let scalar = Field::new(r.clone(), tag)
            .map_err(|e| PairingError::BadParams(format!("subgroup order: {e}")))?;
        let base = Field::new(q.clone(), ProfileTag::Custom)
            .map_err(|e| PairingError::BadParams(format!("base prime: {e}")))?;
        let sqrt_exp = (&q + 1u32) >> 2;
        let final_exp = (&q * &q - 1u32) / &r;
        let mut engine = PairingEngine {
            base,
            scalar,
            g: GroupElement::Identity,
            g_sig: GroupElement::Identity,
            sqrt_exp,
            final_exp,
        };
        engine.g = engine.hash_to_point(b"zkpol/gen/pairing/v1")?;
        engine.g_sig = engine.hash_to_point(b"zkpol/gen/sig/v1")?;
        Ok(engine)
    }

    /// Oracle profile: 64-bit subgroup order, brute-force checkable.
    pub fn oracle() -> Self {
        let r: BigUint = ORACLE_SUBGROUP_ORDER.parse().unwrap();
        Self::from_subgroup_order(r, ProfileTag::Oracle).expect("oracle params are valid")
    }

    /// Realistic profile: 254-bit subgroup order, sized for timing runs.
    pub fn realistic() -> Self {
        let r: BigUint = REALISTIC_SUBGROUP_ORDER.parse().unwrap();
        Self::from_subgroup_order(r, ProfileTag::Realistic).expect("realistic params are valid")
    }

    /// Tiny instance (r = 71, q = 283) for exhaustive unit tests.
    pub fn tiny() -> Self {
        Self::from_subgroup_order(BigUint::from(71u32), ProfileTag::Custom)
            .expect("tiny params are valid")
    }

    pub fn base_field(&self) -> &Field {
        &self.base
    }

    /// The scalar field F_r: the exponent domain, and the field all circuit
    /// and hash arithmetic is carried out in.
    pub fn scalar_field(&self) -> &Field {
        &self.scalar
    }

    pub fn generator(&self) -> &GroupElement {
        &self.g
    }

    /// Independent generator for signature keys (separate derivation domain).
    pub fn signature_generator(&self) -> &GroupElement {
        &self.g_sig
    }

    pub fn point_byte_len(&self) -> usize {
        1 + 2 * self.base.byte_len()
    }

    // ── affine group law ──

    pub fn add(&self, p: &GroupElement, q: &GroupElement) -> GroupElement {
        match (p, q) {
            (GroupElement::Identity, _) => q.clone(),
            (_, GroupElement::Identity) => p.clone(),
            (GroupElement::Point { x: x1, y: y1 }, GroupElement::Point { x: x2, y: y2 }) => {
                if x1 == x2 {
                    if (y1 + y2).is_zero() {
                        return GroupElement::Identity;
                    }
                    return self.double(p);
                }
                let lambda = (y2 - y1) * (x2 - x1).inverse().expect("x1 != x2");
                let x3 = &lambda.square() - &(x1 + x2);
                let y3 = &(&lambda * &(x1 - &x3)) - y1;
                GroupElement::Point { x: x3, y: y3 }
            }
        }
    }

    pub fn double(&self, p: &GroupElement) -> GroupElement {
        match p {
            GroupElement::Identity => GroupElement::Identity,
            GroupElement::Point { x, y } => {
                if y.is_zero() {
                    return GroupElement::Identity;
                }
                // λ = (3x^2 + 1) / 2y   (curve coefficient a = 1)
                let three = self.base.from_u64(3);
                let num = &(&three * &x.square()) + &self.base.one();
                let den = (y + y).inverse().expect("y != 0");
                let lambda = &num * &den;
                let x3 = &lambda.square() - &(x + x);
                let y3 = &(&lambda * &(x - &x3)) - y;
                GroupElement::Point { x: x3, y: y3 }
            }
        }
    }

    pub fn neg(&self, p: &GroupElement) -> GroupElement {
        match p {
            GroupElement::Identity => GroupElement::Identity,
            GroupElement::Point { x, y } => GroupElement::Point { x: x.clone(), y: -y },
        }
    }

    // ── scalar multiplication (Jacobian ladder) ──

    fn jac_identity(&self) -> Jacobian {
        Jacobian { x: self.base.one(), y: self.base.one(), z: self.base.zero() }
    }

    fn jac_double(&self, p: &Jacobian) -> Jacobian {
        if p.z.is_zero() || p.y.is_zero() {
            return self.jac_identity();
        }
        let xx = p.x.square();
        let yy = p.y.square();
        let yyyy = yy.square();
        let zz = p.z.square();
        let s = {
            let t = &(&p.x + &yy).square() - &(&xx + &yyyy);
            &t + &t
        };
        // M = 3·XX + a·ZZ^2 with a = 1
        let m = &(&(&xx + &xx) + &xx) + &zz.square();
        let x3 = &m.square() - &(&s + &s);
        let y3 = {
            let e8 = {
                let e2 = &yyyy + &yyyy;
                let e4 = &e2 + &e2;
                &e4 + &e4
            };
            &(&m * &(&s - &x3)) - &e8
        };
        let z3 = &(&p.y + &p.z).square() - &(&yy + &zz);
        Jacobian { x: x3, y: y3, z: z3 }
    }

    fn jac_add_affine(&self, p: &Jacobian, qx: &FieldElement, qy: &FieldElement) -> Jacobian {
        if p.z.is_zero() {
            return Jacobian { x: qx.clone(), y: qy.clone(), z: self.base.one() };
        }
        let z1z1 = p.z.square();
        let u2 = qx * &z1z1;
        let s2 = &(qy * &p.z) * &z1z1;
        if u2 == p.x {
            if s2 == p.y {
                return self.jac_double(p);
            }
            return self.jac_identity();
        }
        let h = &u2 - &p.x;
        let hh = h.square();
        let i = {
            let h2 = &hh + &hh;
            &h2 + &h2
        };
        let j = &h * &i;
        let rr = {
            let t = &s2 - &p.y;
            &t + &t
        };
        let v = &p.x * &i;
        let x3 = &(&rr.square() - &j) - &(&v + &v);
        let y3 = {
            let yj = &p.y * &j;
            &(&rr * &(&v - &x3)) - &(&yj + &yj)
        };
        let z3 = &(&(&p.z + &h).square() - &z1z1) - &hh;
        Jacobian { x: x3, y: y3, z: z3 }
    }

    fn jac_to_affine(&self, p: &Jacobian) -> GroupElement {
        if p.z.is_zero() {
            return GroupElement::Identity;
        }
        let zinv = p.z.inverse().expect("z != 0");
        let zinv2 = zinv.square();
        let zinv3 = &zinv2 * &zinv;
        GroupElement::Point { x: &p.x * &zinv2, y: &p.y * &zinv3 }
    }

    fn mjac_to_affine(&self, ctx: &MontCtx, p: &MJac) -> GroupElement {
        let inv_exp = self.base.modulus() - 2u32;
        match mjac_affine_residues(ctx, p, &inv_exp) {
            None => GroupElement::Identity,
            Some((x, y)) => GroupElement::Point {
                x: self.base.element_reduced(ctx.from_mont(&x)),
                y: self.base.element_reduced(ctx.from_mont(&y)),
            },
        }
    }

    /// `[k]P` by double-and-add. The exponent is reduced mod nothing: the
    /// caller passes canonical scalars (`FieldElement` values are < r).
    pub fn mul_scalar(&self, p: &GroupElement, k: &BigUint) -> GroupElement {
        let (px, py) = match p {
            GroupElement::Identity => return GroupElement::Identity,
            GroupElement::Point { x, y } => (x, y),
        };
        if let Some(ctx) = self.base.mont_ctx() {
            let qx = ctx.to_mont(px.value());
            let qy = ctx.to_mont(py.value());
            return self.mjac_to_affine(ctx, &mjac_ladder(ctx, &qx, &qy, k));
        }
        let mut acc = self.jac_identity();
        for i in (0..k.bits()).rev() {
            acc = self.jac_double(&acc);
            if k.bit(i) {
                acc = self.jac_add_affine(&acc, px, py);
            }
        }
        self.jac_to_affine(&acc)
    }

    /// `base^scalar` in multiplicative notation: the workhorse for key and
    /// proof material. The scalar is a field element of F_r.
    pub fn group_exp(&self, base: &GroupElement, scalar: &FieldElement) -> GroupElement {
        debug_assert!(scalar.field() == &self.scalar, "exponent from wrong field");
        self.mul_scalar(base, scalar.value())
    }

    /// `Π baseᵢ^scalarᵢ`, folded in Jacobian form so the whole sum pays one
    /// affine conversion instead of one field inversion per term. Identity
    /// bases and zero scalars contribute nothing and are skipped.
    pub fn multi_exp<'a, 'b, I>(&self, pairs: I) -> GroupElement
    where
        I: IntoIterator<Item = (&'a GroupElement, &'b FieldElement)>,
    {
        let ctx = match self.base.mont_ctx() {
            Some(ctx) => ctx,
            None => {
                let mut acc = GroupElement::Identity;
                for (base, scalar) in pairs {
                    acc = self.add(&acc, &self.group_exp(base, scalar));
                }
                return acc;
            }
        };
        let mut acc = mjac_identity(ctx);
        for (base, scalar) in pairs {
            debug_assert!(scalar.field() == &self.scalar, "exponent from wrong field");
            let (px, py) = match base {
                GroupElement::Identity => continue,
                GroupElement::Point { x, y } => (x, y),
            };
            if scalar.is_zero() {
                continue;
            }
            let qx = ctx.to_mont(px.value());
            let qy = ctx.to_mont(py.value());
            let term = mjac_ladder(ctx, &qx, &qy, scalar.value());
            acc = mjac_add(ctx, &acc, &term);
        }
        self.mjac_to_affine(ctx, &acc)
    }

    // ── pairing ──

    /// Reduced Tate pairing with the distortion map applied to the second
    /// argument. Symmetric, bilinear, non-degenerate on the order-r
    /// subgroup. Identity inputs map to the target identity.
    pub fn pairing(&self, p: &GroupElement, q: &GroupElement) -> TargetElement {
        let (px, py) = match p {
            GroupElement::Identity => return TargetElement(Fq2::one(&self.base)),
            GroupElement::Point { x, y } => (x.clone(), y.clone()),
        };
        let (qx, qy) = match q {
            GroupElement::Identity => return TargetElement(Fq2::one(&self.base)),
            GroupElement::Point { x, y } => (x.clone(), y.clone()),
        };
        // φ(Q) = (-x_Q, i·y_Q); for Q in the odd-order subgroup y_Q != 0,
        // so φ(Q) never meets any F_q-rational line support point.
        let phi_x = -&qx;
        if let Some(ctx) = self.base.mont_ctx() {
            return self.pairing_mont(ctx, &px, &py, &phi_x, &qy);
        }
        let f = self.miller_loop(&px, &py, &phi_x, &qy);
        TargetElement(f.pow(&self.final_exp))
    }

    /// Fixed-width pairing path. Lines are scaled by factors from F_q^*,
    /// which vanish under the final exponentiation because r | q + 1 makes
    /// q − 1 a divisor of (q² − 1)/r.
    fn pairing_mont(
        &self,
        ctx: &MontCtx,
        px: &FieldElement,
        py: &FieldElement,
        phi_x: &FieldElement,
        phi_y_im: &FieldElement,
    ) -> TargetElement {
        let f = self.miller_loop_mont(ctx, px, py, phi_x, phi_y_im);
        // (q² − 1)/r = (q − 1)·(q + 1)/r with f^(q−1) = f̄·f⁻¹ = f̄²/‖f‖,
        // so one base-field inversion and a short power replace the full
        // square-and-multiply ladder over the composite exponent
        let norm = ctx.add(&ctx.mul(&f.0, &f.0), &ctx.mul(&f.1, &f.1));
        debug_assert!(!ctx.is_zero(&norm), "miller output is nonzero");
        let ninv = ctx.pow(&norm, &(self.base.modulus() - 2u32));
        let conj = (f.0, ctx.sub(&ctx.zero(), &f.1));
        let c2 = fq2m_square(ctx, &conj);
        let g = (ctx.mul(&c2.0, &ninv), ctx.mul(&c2.1, &ninv));
        let cofactor = (self.base.modulus() + 1u32) / self.scalar.modulus();
        let mut acc = (ctx.one(), ctx.zero());
        for i in (0..cofactor.bits()).rev() {
            acc = fq2m_square(ctx, &acc);
            if cofactor.bit(i) {
                acc = fq2m_mul(ctx, &acc, &g);
            }
        }
        TargetElement(Fq2 {
            re: self.base.element_reduced(ctx.from_mont(&acc.0)),
            im: self.base.element_reduced(ctx.from_mont(&acc.1)),
        })
    }

    /// Miller loop on residues with T held in Jacobian coordinates, so no
    /// step pays a field inversion. Line values carry an extra F_q^* factor
    /// each (see [`Self::pairing_mont`]); only the F_{q²} direction counts.
    fn miller_loop_mont(
        &self,
        ctx: &MontCtx,
        px: &FieldElement,
        py: &FieldElement,
        phi_x: &FieldElement,
        phi_y_im: &FieldElement,
    ) -> (Residue, Residue) {
        let r = self.scalar.modulus();
        let pxm = ctx.to_mont(px.value());
        let pym = ctx.to_mont(py.value());
        let sx = ctx.to_mont(phi_x.value());
        let sy = ctx.to_mont(phi_y_im.value());
        let mut f = (ctx.one(), ctx.zero());
        let (mut x, mut y, mut z) = (pxm, pym, ctx.one());

        for i in (0..r.bits() - 1).rev() {
            // tangent at T scaled by 2Y·Z³:
            //   re = −(2Y² + M·(Z²·x_S − X)), im = Z₃·Z²·y_S, M = 3X² + Z⁴
            let xx = ctx.square(&x);
            let yy = ctx.square(&y);
            let yyyy = ctx.square(&yy);
            let zz = ctx.square(&z);
            let m = ctx.add(&ctx.add(&xx, &ctx.double_el(&xx)), &ctx.square(&zz));
            let s =
                ctx.double_el(&ctx.sub(&ctx.sub(&ctx.square(&ctx.add(&x, &yy)), &xx), &yyyy));
            let x3 = ctx.sub(&ctx.square(&m), &ctx.double_el(&s));
            let z3 = ctx.sub(&ctx.sub(&ctx.square(&ctx.add(&y, &z)), &yy), &zz);
            let y3 = ctx.sub(
                &ctx.mul(&m, &ctx.sub(&s, &x3)),
                &ctx.double_el(&ctx.double_el(&ctx.double_el(&yyyy))),
            );
            let l_re = ctx.sub(
                &ctx.zero(),
                &ctx.add(&ctx.double_el(&yy), &ctx.mul(&m, &ctx.sub(&ctx.mul(&zz, &sx), &x))),
            );
            let l_im = ctx.mul(&ctx.mul(&z3, &zz), &sy);
            f = fq2m_mul(ctx, &fq2m_square(ctx, &f), &(l_re, l_im));
            x = x3;
            y = y3;
            z = z3;

            if r.bit(i) {
                // chord through T and P anchored at P, scaled by Z₃:
                //   re = −(Z₃·y_P + rr·(x_S − x_P)), im = Z₃·y_S
                let zz = ctx.square(&z);
                let u2 = ctx.mul(&pxm, &zz);
                let s2 = ctx.mul(&pym, &ctx.mul(&z, &zz));
                let h = ctx.sub(&u2, &x);
                let rr = ctx.double_el(&ctx.sub(&s2, &y));
                if ctx.is_zero(&h) {
                    // T = -P: the chord degenerates to the vertical at x_P,
                    // a pure F_q value the final exponentiation erases, and
                    // T itself becomes the identity — nothing further can
                    // accumulate, which for an order-r point is the last bit
                    debug_assert!(!ctx.is_zero(&rr), "T = P inside an order-r loop");
                    debug_assert_eq!(i, 0);
                    break;
                }
                let hh = ctx.square(&h);
                let i4 = ctx.double_el(&ctx.double_el(&hh));
                let j = ctx.mul(&h, &i4);
                let v = ctx.mul(&x, &i4);
                let x3 = ctx.sub(&ctx.sub(&ctx.square(&rr), &j), &ctx.double_el(&v));
                let y3 =
                    ctx.sub(&ctx.mul(&rr, &ctx.sub(&v, &x3)), &ctx.double_el(&ctx.mul(&y, &j)));
                let z3 = ctx.mul(&ctx.double_el(&z), &h);
                let l_re = ctx.sub(
                    &ctx.zero(),
                    &ctx.add(&ctx.mul(&z3, &pym), &ctx.mul(&rr, &ctx.sub(&sx, &pxm))),
                );
                let l_im = ctx.mul(&z3, &sy);
                f = fq2m_mul(ctx, &f, &(l_re, l_im));
                x = x3;
                y = y3;
                z = z3;
            }
        }
        f
    }

    /// Miller loop for f_{r,P} evaluated at (phi_x, i·phi_y_im). Vertical
    /// lines evaluate inside F_q and are erased by the final exponentiation,
    /// so only tangent/chord numerators accumulate imaginary parts.
    fn miller_loop(
        &self,
        px: &FieldElement,
        py: &FieldElement,
        phi_x: &FieldElement,
        phi_y_im: &FieldElement,
    ) -> Fq2 {
        let r = self.scalar.modulus().clone();
        let mut f = Fq2::one(&self.base);
        let mut tx = px.clone();
        let mut ty = py.clone();
        let three = self.base.from_u64(3);

        for i in (0..r.bits() - 1).rev() {
            // tangent at T
            let lambda = {
                let num = &(&three * &tx.square()) + &self.base.one();
                let den = (&ty + &ty).inverse().expect("odd-order point has y != 0");
                &num * &den
            };
            let line = Fq2 {
                re: &(-&ty) - &(&lambda * &(phi_x - &tx)),
                im: phi_y_im.clone(),
            };
            f = f.square().mul(&line);
            // T = 2T
            let x3 = &lambda.square() - &(&tx + &tx);
            let y3 = &(&lambda * &(&tx - &x3)) - &ty;
            tx = x3;
            ty = y3;

            if r.bit(i) {
                if tx == *px && (&ty + py).is_zero() {
                    // chord through T = -P is the vertical at x_P: value in
                    // F_q, killed by the final exponentiation. For an
                    // order-r point this happens exactly at the last step.
                    debug_assert_eq!(i, 0);
                    let line = Fq2 { re: phi_x - px, im: self.base.zero() };
                    f = f.mul(&line);
                    break;
                } else {
                    let lambda = (py - &ty) * (px - &tx).inverse().expect("T != ±P");
                    let line = Fq2 {
                        re: &(-&ty) - &(&lambda * &(phi_x - &tx)),
                        im: phi_y_im.clone(),
                    };
                    f = f.mul(&line);
                    let x3 = &(&lambda.square() - &tx) - px;
                    let y3 = &(&lambda * &(&tx - &x3)) - &ty;
                    tx = x3;
                    ty = y3;
                }
            }
        }
        f
    }

    pub fn target_identity(&self) -> TargetElement {
        TargetElement(Fq2::one(&self.base))
    }

    // ── point derivation and decoding ──

    /// Deterministic hash-to-point: try-and-increment on
    /// SHA-256(domain ‖ counter), then cofactor clearing by 4.
    pub fn hash_to_point(&self, domain: &[u8]) -> Result<GroupElement, PairingError> {
        for counter in 0u32..=4096 {
            let mut hasher = Sha256::new();
            hasher.update(domain);
            hasher.update(counter.to_be_bytes());
            let digest = hasher.finalize();
            let x = self.base.element(BigUint::from_bytes_be(&digest));
            let rhs = &(&x.square() * &x) + &x; // x^3 + x
            if rhs.is_zero() {
                continue;
            }
            let y = rhs.pow(&self.sqrt_exp);
            if y.square() != rhs {
                continue;
            }
            let p = GroupElement::Point { x, y };
            let g = self.mul_scalar(&p, &BigUint::from(4u32));
            if g.is_identity() {
                continue;
            }
            debug_assert!(self.mul_scalar(&g, self.scalar.modulus()).is_identity());
            return Ok(g);
        }
        Err(PairingError::BadParams("hash-to-point exhausted counters".into()))
    }

    /// Decodes a canonical point encoding and checks the curve equation.
    pub fn point_from_bytes(&self, bytes: &[u8]) -> Result<GroupElement, PairingError> {
        let w = self.base.byte_len();
        if bytes.len() != 1 + 2 * w {
            return Err(PairingError::InvalidPoint);
        }
        match bytes[0] {
            0x00 => {
                if bytes[1..].iter().any(|&b| b != 0) {
                    return Err(PairingError::InvalidPoint);
                }
                Ok(GroupElement::Identity)
            }
            0x04 => {
                let x = self
                    .base
                    .element_from_bytes(&bytes[1..1 + w])
                    .map_err(|_| PairingError::InvalidPoint)?;
                let y = self
                    .base
                    .element_from_bytes(&bytes[1 + w..])
                    .map_err(|_| PairingError::InvalidPoint)?;
                let rhs = &(&x.square() * &x) + &x;
                if y.square() != rhs {
                    return Err(PairingError::InvalidPoint);
                }
                Ok(GroupElement::Point { x, y })
            }
            _ => Err(PairingError::InvalidPoint),
        }
    }

    /// Full subgroup membership check: `[r]P = O`. Used on proof elements.
    pub fn check_subgroup(&self, p: &GroupElement) -> Result<(), PairingError> {
        if self.mul_scalar(p, self.scalar.modulus()).is_identity() {
            Ok(())
        } else {
            Err(PairingError::NotInSubgroup)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn oracle_generator_has_prime_order() {
        let e = PairingEngine::oracle();
        let g = e.generator();
        assert!(!g.is_identity());
        assert!(e.mul_scalar(g, e.scalar_field().modulus()).is_identity());
    }

    #[test]
    fn generators_are_distinct() {
        let e = PairingEngine::oracle();
        assert_ne!(e.generator(), e.signature_generator());
    }

    #[test]
    fn group_exp_respects_scalar_field_addition() {
        let e = PairingEngine::oracle();
        let f = e.scalar_field();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = f.random(&mut rng);
            let b = f.random(&mut rng);
            let lhs = e.group_exp(e.generator(), &(&a + &b));
            let rhs = e.add(&e.group_exp(e.generator(), &a), &e.group_exp(e.generator(), &b));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn pairing_is_nondegenerate_and_symmetric() {
        let e = PairingEngine::oracle();
        let g = e.generator();
        let egg = e.pairing(g, g);
        assert!(!egg.is_identity());
        assert!(egg.pow(e.scalar_field().modulus()).is_identity());
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = e.scalar_field().random(&mut rng);
        let ga = e.group_exp(g, &a);
        assert_eq!(e.pairing(&ga, g), e.pairing(g, &ga));
    }

    #[test]
    fn pairing_bilinearity_against_exponent_arithmetic() {
        // cross-check: e(g^a, g^b) must equal e(g,g)^(a·b mod r)
        let e = PairingEngine::oracle();
        let g = e.generator();
        let f = e.scalar_field();
        let egg = e.pairing(g, g);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = f.random(&mut rng);
            let b = f.random(&mut rng);
            let lhs = e.pairing(&e.group_exp(g, &a), &e.group_exp(g, &b));
            let rhs = egg.pow((&a * &b).value());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn pairing_kernels_agree() {
        // the inversion-free fixed-width loop must land on the same target
        // element as the affine reference loop after final exponentiation
        for (seed, e) in [(31u64, PairingEngine::tiny()), (32, PairingEngine::oracle())] {
            let f = e.scalar_field().clone();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut done = 0;
            while done < 12 {
                let a = f.random(&mut rng);
                let b = f.random(&mut rng);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                let p = e.group_exp(e.generator(), &a);
                let q = e.group_exp(e.generator(), &b);
                let (px, py, qx, qy) = match (&p, &q) {
                    (
                        GroupElement::Point { x: px, y: py },
                        GroupElement::Point { x: qx, y: qy },
                    ) => (px, py, qx, qy),
                    _ => unreachable!("nonzero exponents of a generator"),
                };
                let phi_x = -qx;
                let reference =
                    TargetElement(e.miller_loop(px, py, &phi_x, qy).pow(&e.final_exp));
                let ctx = e.base_field().mont_ctx().unwrap();
                assert_eq!(e.pairing_mont(ctx, px, py, &phi_x, qy), reference);
                done += 1;
            }
        }
    }

    #[test]
    fn pairing_identity_edges() {
        let e = PairingEngine::oracle();
        let g = e.generator();
        assert!(e.pairing(&GroupElement::Identity, g).is_identity());
        assert!(e.pairing(g, &GroupElement::Identity).is_identity());
    }

    #[test]
    fn tiny_engine_exhaustive_group_and_pairing() {
        let e = PairingEngine::tiny();
        let g = e.generator();
        let r: u64 = e.scalar_field().modulus().try_into().unwrap();
        assert_eq!(r, 71);
        // all multiples distinct => order exactly r
        let mut seen = Vec::new();
        let mut acc = GroupElement::Identity;
        for _ in 0..r {
            acc = e.add(&acc, g);
            assert!(!seen.contains(&acc));
            seen.push(acc.clone());
        }
        assert!(seen[r as usize - 1].is_identity());
        // exhaustive bilinearity on a grid
        let egg = e.pairing(g, g);
        for a in 0..8u64 {
            for b in 0..8u64 {
                let lhs = e.pairing(
                    &e.mul_scalar(g, &BigUint::from(a)),
                    &e.mul_scalar(g, &BigUint::from(b)),
                );
                assert_eq!(lhs, egg.pow(&BigUint::from(a * b % r)));
            }
        }
    }

    #[test]
    fn point_encoding_round_trip() {
        let e = PairingEngine::oracle();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let k = e.scalar_field().random(&mut rng);
        let p = e.group_exp(e.generator(), &k);
        let bytes = p.to_bytes(e.base_field());
        assert_eq!(bytes.len(), e.point_byte_len());
        assert_eq!(e.point_from_bytes(&bytes).unwrap(), p);

        let id_bytes = GroupElement::Identity.to_bytes(e.base_field());
        assert_eq!(id_bytes.len(), e.point_byte_len());
        assert!(e.point_from_bytes(&id_bytes).unwrap().is_identity());
    }

    #[test]
    fn off_curve_encoding_rejected() {
        let e = PairingEngine::oracle();
        let mut bytes = e.generator().to_bytes(e.base_field());
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert_eq!(e.point_from_bytes(&bytes).unwrap_err(), PairingError::InvalidPoint);
        // bad tag
        let mut bytes2 = e.generator().to_bytes(e.base_field());
        bytes2[0] = 0x02;
        assert_eq!(e.point_from_bytes(&bytes2).unwrap_err(), PairingError::InvalidPoint);
    }

    #[test]
    fn mul_scalar_matches_repeated_addition() {
        let e = PairingEngine::tiny();
        let g = e.generator();
        let mut acc = GroupElement::Identity;
        for k in 0..20u64 {
            assert_eq!(e.mul_scalar(g, &BigUint::from(k)), acc);
            acc = e.add(&acc, g);
        }
    }

    #[test]
    fn multi_exp_matches_term_by_term_fold() {
        for e in [PairingEngine::oracle(), PairingEngine::tiny()] {
            let mut rng = ChaCha20Rng::seed_from_u64(41);
            let g = e.generator();
            let mut bases = Vec::new();
            let mut scalars = Vec::new();
            for _ in 0..12 {
                let b = e.scalar_field().random(&mut rng);
                bases.push(e.group_exp(g, &b));
                scalars.push(e.scalar_field().random(&mut rng));
            }
            // degenerate terms must drop out
            bases.push(GroupElement::Identity);
            scalars.push(e.scalar_field().random(&mut rng));
            bases.push(e.group_exp(g, &e.scalar_field().from_u64(5)));
            scalars.push(e.scalar_field().zero());

            let mut expect = GroupElement::Identity;
            for (b, s) in bases.iter().zip(&scalars) {
                expect = e.add(&expect, &e.group_exp(b, s));
            }
            assert_eq!(e.multi_exp(bases.iter().zip(&scalars)), expect);
            assert!(e.multi_exp(std::iter::empty()).is_identity());
        }
    }

    #[test]
    fn subgroup_check_accepts_generator_multiples() {
        let e = PairingEngine::oracle();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let k = e.scalar_field().random(&mut rng);
        let p = e.group_exp(e.generator(), &k);
        assert!(e.check_subgroup(&p).is_ok());
    }
}
