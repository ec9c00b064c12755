//! Pairing-based proof system over the quadratic program.
//!
//! Trusted setup samples a secret evaluation point and restriction/shift
//! scalars (the toxic waste), publishes group encodings of the wire
//! polynomials evaluated there, and discards the scalars. A proof is eight
//! source-group elements; verification runs three pairing-check families:
//!
//! 1. **alpha restriction** — each committed combination was formed from
//!    the published key material (checked separately for L, R, O);
//! 2. **consistency** — the same witness values were used across the three
//!    combinations (the β/γ cross term);
//! 3. **divisibility** — `t | L·R − O`, i.e. the witness satisfies the
//!    program.
//!
//! Proofs are deterministic: no blinding shift is added, so hiding holds
//! against honest verifiers only (hash preimages, exponent hiding), not
//! against arbitrary distinguishers. That matches the protocol's threat
//! model, where proofs accompany already-public digest values.

use std::io::{self, Read, Write};

use num_bigint::BigUint;
use rand::RngCore;
use thiserror::Error;

use crate::field::FieldElement;
use crate::pairing::{GroupElement, PairingEngine, PairingError};
use crate::qap::QapInstance;

const CRS_MAGIC: &[u8; 8] = b"ZKPOLCRS";
const PROOF_MAGIC: &[u8; 8] = b"ZKPOLPRF";
const FORMAT_VERSION: u8 = 1;
const KIND_PROVING: u8 = 1;
const KIND_VERIFICATION: u8 = 2;

#[derive(Debug, Error)]
pub enum SnarkError {
    #[error("witness does not satisfy the constraint system")]
    UnsatisfiedWitness,
    #[error("artifact was generated for a different circuit")]
    KeyMismatch,
    #[error("expected {expected} public inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("proof element rejected: {0}")]
    MalformedProof(#[from] PairingError),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which pairing-check family a proof failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckFamily {
    AlphaL,
    AlphaR,
    AlphaO,
    Consistency,
    Divisibility,
}

impl CheckFamily {
    pub fn family_name(self) -> &'static str {
        match self {
            CheckFamily::AlphaL | CheckFamily::AlphaR | CheckFamily::AlphaO => {
                "alpha-restriction"
            }
            CheckFamily::Consistency => "consistency",
            CheckFamily::Divisibility => "divisibility",
        }
    }
}

/// Verification outcome: accepted, or rejected with the failing family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(CheckFamily),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// The setup secrets. Published nowhere; the test-only hook returns them so
/// oracles can recompute key material independently. Dropping overwrites
/// the values (best effort — rotated buffers are not scrubbed).
pub struct ToxicWaste {
    s: FieldElement,
    rho_l: FieldElement,
    rho_r: FieldElement,
    alpha_l: FieldElement,
    alpha_r: FieldElement,
    alpha_o: FieldElement,
    beta: FieldElement,
    gamma: FieldElement,
}

impl ToxicWaste {
    pub fn s(&self) -> &FieldElement {
        &self.s
    }
    pub fn rho_l(&self) -> &FieldElement {
        &self.rho_l
    }
    pub fn rho_r(&self) -> &FieldElement {
        &self.rho_r
    }
    pub fn alpha_l(&self) -> &FieldElement {
        &self.alpha_l
    }
    pub fn alpha_r(&self) -> &FieldElement {
        &self.alpha_r
    }
    pub fn alpha_o(&self) -> &FieldElement {
        &self.alpha_o
    }
    pub fn beta(&self) -> &FieldElement {
        &self.beta
    }
    pub fn gamma(&self) -> &FieldElement {
        &self.gamma
    }
}

impl Drop for ToxicWaste {
    fn drop(&mut self) {
        let zero = self.s.field().zero();
        for slot in [
            &mut self.s,
            &mut self.rho_l,
            &mut self.rho_r,
            &mut self.alpha_l,
            &mut self.alpha_r,
            &mut self.alpha_o,
            &mut self.beta,
            &mut self.gamma,
        ] {
            *slot = zero.clone();
        }
    }
}

/// Prover-side key: powers of the secret point and per-private-wire
/// encodings (plain, alpha-shifted, and beta-combined).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvingKey {
    pub circuit_id: [u8; 32],
    pub num_wires: usize,
    pub num_public: usize,
    pub degree: usize,
    /// g^(s^i) for i = 0..=degree.
    pub s_powers: Vec<GroupElement>,
    /// Indexed by private wire offset (wire m+1 is index 0).
    pub l_query: Vec<GroupElement>,
    pub r_query: Vec<GroupElement>,
    pub o_query: Vec<GroupElement>,
    pub l_alpha: Vec<GroupElement>,
    pub r_alpha: Vec<GroupElement>,
    pub o_alpha: Vec<GroupElement>,
    pub k_query: Vec<GroupElement>,
}

/// Verifier-side key: generator multiples for the checks plus the public
/// wire encodings (indices 0..=m, wire 0 included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationKey {
    pub circuit_id: [u8; 32],
    pub num_public: usize,
    pub g: GroupElement,
    pub g_alpha_l: GroupElement,
    pub g_alpha_r: GroupElement,
    pub g_alpha_o: GroupElement,
    pub g_gamma: GroupElement,
    pub g_beta_gamma: GroupElement,
    pub g_o_t: GroupElement,
    pub l_public: Vec<GroupElement>,
    pub r_public: Vec<GroupElement>,
    pub o_public: Vec<GroupElement>,
}

/// Eight source-group elements plus the circuit binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub circuit_id: [u8; 32],
    pub l: GroupElement,
    pub l_alpha: GroupElement,
    pub r: GroupElement,
    pub r_alpha: GroupElement,
    pub o: GroupElement,
    pub o_alpha: GroupElement,
    pub z: GroupElement,
    pub h: GroupElement,
}

impl Proof {
    pub fn elements(&self) -> [&GroupElement; 8] {
        [
            &self.l,
            &self.l_alpha,
            &self.r,
            &self.r_alpha,
            &self.o,
            &self.o_alpha,
            &self.z,
            &self.h,
        ]
    }

    /// Fixed-width encoding: the eight points back to back.
    pub fn to_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * engine.point_byte_len());
        for e in self.elements() {
            out.extend_from_slice(&e.to_bytes(engine.base_field()));
        }
        out
    }
}

/// Runs the trusted setup and returns the keys and the secrets.
///
/// Test-oracle hook only: production callers use [`setup`], which drops the
/// waste before returning.
pub fn setup_with_trapdoor(
    engine: &PairingEngine,
    qap: &QapInstance,
    rng: &mut impl RngCore,
) -> (ProvingKey, VerificationKey, ToxicWaste) {
    let field = engine.scalar_field();
    debug_assert!(field == qap.field(), "QAP must live in the engine's scalar field");
    let d = qap.degree();

    // secret point outside the evaluation set {1..d}, everything nonzero
    let d_big = BigUint::from(d);
    let s = loop {
        let cand = field.random_nonzero(rng);
        if *cand.value() > d_big {
            break cand;
        }
    };
    let waste = ToxicWaste {
        s,
        rho_l: field.random_nonzero(rng),
        rho_r: field.random_nonzero(rng),
        alpha_l: field.random_nonzero(rng),
        alpha_r: field.random_nonzero(rng),
        alpha_o: field.random_nonzero(rng),
        beta: field.random_nonzero(rng),
        gamma: field.random_nonzero(rng),
    };

    let g = engine.generator();
    let g_l = engine.group_exp(g, &waste.rho_l);
    let g_r = engine.group_exp(g, &waste.rho_r);
    let g_o = engine.group_exp(g, &(&waste.rho_l * &waste.rho_r));

    // g^(s^i), i = 0..=d
    let mut s_powers = Vec::with_capacity(d + 1);
    let mut s_pow = field.one();
    for _ in 0..=d {
        s_powers.push(engine.group_exp(g, &s_pow));
        s_pow = &s_pow * &waste.s;
    }

    let m = qap.num_public();
    let n = qap.num_wires();
    let evals = |i: usize| {
        (
            qap.l_poly(i).eval(&waste.s),
            qap.r_poly(i).eval(&waste.s),
            qap.o_poly(i).eval(&waste.s),
        )
    };

    let mut l_query = Vec::with_capacity(n - m - 1);
    let mut r_query = Vec::with_capacity(n - m - 1);
    let mut o_query = Vec::with_capacity(n - m - 1);
    let mut l_alpha = Vec::with_capacity(n - m - 1);
    let mut r_alpha = Vec::with_capacity(n - m - 1);
    let mut o_alpha = Vec::with_capacity(n - m - 1);
    let mut k_query = Vec::with_capacity(n - m - 1);
    for j in (m + 1)..n {
        let (lj, rj, oj) = evals(j);
        l_query.push(engine.group_exp(&g_l, &lj));
        r_query.push(engine.group_exp(&g_r, &rj));
        o_query.push(engine.group_exp(&g_o, &oj));
        l_alpha.push(engine.group_exp(&g_l, &(&waste.alpha_l * &lj)));
        r_alpha.push(engine.group_exp(&g_r, &(&waste.alpha_r * &rj)));
        o_alpha.push(engine.group_exp(&g_o, &(&waste.alpha_o * &oj)));
        // K_j = g_l^(β·l_j) · g_r^(β·r_j) · g_o^(β·o_j)
        let mut k = engine.group_exp(&g_l, &(&waste.beta * &lj));
        k = engine.add(&k, &engine.group_exp(&g_r, &(&waste.beta * &rj)));
        k = engine.add(&k, &engine.group_exp(&g_o, &(&waste.beta * &oj)));
        k_query.push(k);
    }

    let mut l_public = Vec::with_capacity(m + 1);
    let mut r_public = Vec::with_capacity(m + 1);
    let mut o_public = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let (li, ri, oi) = evals(i);
        l_public.push(engine.group_exp(&g_l, &li));
        r_public.push(engine.group_exp(&g_r, &ri));
        o_public.push(engine.group_exp(&g_o, &oi));
    }

    let pk = ProvingKey {
        circuit_id: *qap.circuit_id(),
        num_wires: n,
        num_public: m,
        degree: d,
        s_powers,
        l_query,
        r_query,
        o_query,
        l_alpha,
        r_alpha,
        o_alpha,
        k_query,
    };
    let vk = VerificationKey {
        circuit_id: *qap.circuit_id(),
        num_public: m,
        g: g.clone(),
        g_alpha_l: engine.group_exp(g, &waste.alpha_l),
        g_alpha_r: engine.group_exp(g, &waste.alpha_r),
        g_alpha_o: engine.group_exp(g, &waste.alpha_o),
        g_gamma: engine.group_exp(g, &waste.gamma),
        g_beta_gamma: engine.group_exp(g, &(&waste.beta * &waste.gamma)),
        g_o_t: engine.group_exp(&g_o, &qap.target().eval(&waste.s)),
        l_public,
        r_public,
        o_public,
    };
    (pk, vk, waste)
}

/// Trusted setup; the toxic waste is dropped (zeroed) before returning.
pub fn setup(
    engine: &PairingEngine,
    qap: &QapInstance,
    rng: &mut impl RngCore,
) -> (ProvingKey, VerificationKey) {
    let (pk, vk, waste) = setup_with_trapdoor(engine, qap, rng);
    drop(waste);
    (pk, vk)
}

/// Produces the eight-element proof for a satisfying witness. Deterministic
/// in (key, witness).
pub fn prove(
    engine: &PairingEngine,
    qap: &QapInstance,
    pk: &ProvingKey,
    witness: &crate::circuit::Witness,
) -> Result<Proof, SnarkError> {
    if pk.circuit_id != *qap.circuit_id() {
        return Err(SnarkError::KeyMismatch);
    }
    let values = witness.values();
    if values.len() != qap.num_wires() || witness.num_public() != qap.num_public() {
        return Err(SnarkError::KeyMismatch);
    }
    let asm = qap.assemble(values);
    if !asm.is_satisfied() {
        return Err(SnarkError::UnsatisfiedWitness);
    }

    let m = qap.num_public();
    // Π query_j^(v_j) over the private wires
    let multi = |query: &[GroupElement]| engine.multi_exp(query.iter().zip(&values[m + 1..]));
    let l = multi(&pk.l_query);
    let l_alpha = multi(&pk.l_alpha);
    let r = multi(&pk.r_query);
    let r_alpha = multi(&pk.r_alpha);
    let o = multi(&pk.o_query);
    let o_alpha = multi(&pk.o_alpha);
    let z = multi(&pk.k_query);

    // g^h(s) from the quotient coefficients and the published powers
    let h = engine.multi_exp(pk.s_powers.iter().zip(asm.h.coeffs()));

    Ok(Proof {
        circuit_id: pk.circuit_id,
        l,
        l_alpha,
        r,
        r_alpha,
        o,
        o_alpha,
        z,
        h,
    })
}

/// Checks a proof against the public inputs (wires 1..=m, in wire order).
///
/// Returns `Verdict::Reject` with the first failing check family;
/// structural problems (arity, circuit binding, bad points) surface as
/// errors instead.
pub fn verify(
    engine: &PairingEngine,
    vk: &VerificationKey,
    public_inputs: &[FieldElement],
    proof: &Proof,
) -> Result<Verdict, SnarkError> {
    if proof.circuit_id != vk.circuit_id {
        return Err(SnarkError::KeyMismatch);
    }
    if public_inputs.len() != vk.num_public {
        return Err(SnarkError::ArityMismatch {
            expected: vk.num_public,
            got: public_inputs.len(),
        });
    }
    for e in proof.elements() {
        engine.check_subgroup(e)?;
    }

    // alpha restriction: e(π, g^α) = e(π', g) for each of L, R, O
    let alpha_ok = |pi: &GroupElement, pi_alpha: &GroupElement, g_alpha: &GroupElement| {
        engine.pairing(pi, g_alpha) == engine.pairing(pi_alpha, &vk.g)
    };
    if !alpha_ok(&proof.l, &proof.l_alpha, &vk.g_alpha_l) {
        return Ok(Verdict::Reject(CheckFamily::AlphaL));
    }
    if !alpha_ok(&proof.r, &proof.r_alpha, &vk.g_alpha_r) {
        return Ok(Verdict::Reject(CheckFamily::AlphaR));
    }
    if !alpha_ok(&proof.o, &proof.o_alpha, &vk.g_alpha_o) {
        return Ok(Verdict::Reject(CheckFamily::AlphaO));
    }

    // consistency: e(π_L·π_R·π_O, g^(βγ)) = e(π_Z, g^γ)
    let lro = engine.add(&engine.add(&proof.l, &proof.r), &proof.o);
    if engine.pairing(&lro, &vk.g_beta_gamma) != engine.pairing(&proof.z, &vk.g_gamma) {
        return Ok(Verdict::Reject(CheckFamily::Consistency));
    }

    // public-input combinations: g_x^(X_v(s)) = X_0 · Π X_i^(v_i)
    let fold = |table: &[GroupElement]| {
        engine.add(&table[0], &engine.multi_exp(table[1..].iter().zip(public_inputs)))
    };
    let l_v = fold(&vk.l_public);
    let r_v = fold(&vk.r_public);
    let o_v = fold(&vk.o_public);

    // divisibility: e(L_v+p, R_v+p) = e(g_o^t, π_H) · e(O_v+p, g)
    let l_full = engine.add(&l_v, &proof.l);
    let r_full = engine.add(&r_v, &proof.r);
    let o_full = engine.add(&o_v, &proof.o);
    let lhs = engine.pairing(&l_full, &r_full);
    let rhs = engine
        .pairing(&vk.g_o_t, &proof.h)
        .mul(&engine.pairing(&o_full, &vk.g));
    if lhs != rhs {
        return Ok(Verdict::Reject(CheckFamily::Divisibility));
    }
    Ok(Verdict::Accept)
}

// ── framed binary files ──

fn write_point(out: &mut Vec<u8>, p: &GroupElement, engine: &PairingEngine) {
    out.extend_from_slice(&p.to_bytes(engine.base_field()));
}

fn write_section(out: &mut Vec<u8>, points: &[GroupElement], engine: &PairingEngine) {
    out.extend_from_slice(&(points.len() as u32).to_be_bytes());
    for p in points {
        write_point(out, p, engine);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnarkError> {
        if self.pos + n > self.buf.len() {
            return Err(SnarkError::Format("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SnarkError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, SnarkError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, SnarkError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn point(&mut self, engine: &PairingEngine) -> Result<GroupElement, SnarkError> {
        let bytes = self.take(engine.point_byte_len())?;
        Ok(engine.point_from_bytes(bytes)?)
    }

    fn section(&mut self, engine: &PairingEngine) -> Result<Vec<GroupElement>, SnarkError> {
        let count = self.u32()? as usize;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.point(engine)?);
        }
        Ok(out)
    }

    fn finish(self) -> Result<(), SnarkError> {
        if self.pos != self.buf.len() {
            return Err(SnarkError::Format("trailing bytes".into()));
        }
        Ok(())
    }
}

fn header(kind: u8, circuit_id: &[u8; 32], engine: &PairingEngine) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CRS_MAGIC);
    out.push(FORMAT_VERSION);
    out.push(kind);
    out.extend_from_slice(circuit_id);
    let r_bytes = engine.scalar_field().modulus().to_bytes_be();
    out.extend_from_slice(&(r_bytes.len() as u16).to_be_bytes());
    out.extend_from_slice(&r_bytes);
    out
}

fn check_header(
    rd: &mut Reader<'_>,
    expect_kind: u8,
    engine: &PairingEngine,
) -> Result<[u8; 32], SnarkError> {
    if rd.take(8)? != CRS_MAGIC {
        return Err(SnarkError::Format("bad magic".into()));
    }
    if rd.u8()? != FORMAT_VERSION {
        return Err(SnarkError::Format("unsupported version".into()));
    }
    if rd.u8()? != expect_kind {
        return Err(SnarkError::Format("wrong key kind".into()));
    }
    let circuit_id: [u8; 32] = rd.take(32)?.try_into().unwrap();
    let r_len = rd.u16()? as usize;
    let r = BigUint::from_bytes_be(rd.take(r_len)?);
    if r != *engine.scalar_field().modulus() {
        return Err(SnarkError::Format("key was generated for different parameters".into()));
    }
    Ok(circuit_id)
}

impl ProvingKey {
    pub fn to_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        let mut out = header(KIND_PROVING, &self.circuit_id, engine);
        out.extend_from_slice(&(self.num_wires as u32).to_be_bytes());
        out.extend_from_slice(&(self.num_public as u32).to_be_bytes());
        out.extend_from_slice(&(self.degree as u32).to_be_bytes());
        for section in [
            &self.s_powers,
            &self.l_query,
            &self.r_query,
            &self.o_query,
            &self.l_alpha,
            &self.r_alpha,
            &self.o_alpha,
            &self.k_query,
        ] {
            write_section(&mut out, section, engine);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], engine: &PairingEngine) -> Result<Self, SnarkError> {
        let mut rd = Reader { buf: bytes, pos: 0 };
        let circuit_id = check_header(&mut rd, KIND_PROVING, engine)?;
        let num_wires = rd.u32()? as usize;
        let num_public = rd.u32()? as usize;
        let degree = rd.u32()? as usize;
        let s_powers = rd.section(engine)?;
        let l_query = rd.section(engine)?;
        let r_query = rd.section(engine)?;
        let o_query = rd.section(engine)?;
        let l_alpha = rd.section(engine)?;
        let r_alpha = rd.section(engine)?;
        let o_alpha = rd.section(engine)?;
        let k_query = rd.section(engine)?;
        rd.finish()?;
        let pk = ProvingKey {
            circuit_id,
            num_wires,
            num_public,
            degree,
            s_powers,
            l_query,
            r_query,
            o_query,
            l_alpha,
            r_alpha,
            o_alpha,
            k_query,
        };
        let private = num_wires - num_public - 1;
        if pk.s_powers.len() != degree + 1
            || [
                &pk.l_query,
                &pk.r_query,
                &pk.o_query,
                &pk.l_alpha,
                &pk.r_alpha,
                &pk.o_alpha,
                &pk.k_query,
            ]
            .iter()
            .any(|s| s.len() != private)
        {
            return Err(SnarkError::Format("section sizes disagree with header".into()));
        }
        Ok(pk)
    }

    pub fn write_to(&self, path: &std::path::Path, engine: &PairingEngine) -> Result<(), SnarkError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes(engine))?;
        Ok(())
    }

    pub fn read_from(path: &std::path::Path, engine: &PairingEngine) -> Result<Self, SnarkError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf, engine)
    }
}

impl VerificationKey {
    pub fn to_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        let mut out = header(KIND_VERIFICATION, &self.circuit_id, engine);
        out.extend_from_slice(&(self.num_public as u32).to_be_bytes());
        for p in [
            &self.g,
            &self.g_alpha_l,
            &self.g_alpha_r,
            &self.g_alpha_o,
            &self.g_gamma,
            &self.g_beta_gamma,
            &self.g_o_t,
        ] {
            write_point(&mut out, p, engine);
        }
        for section in [&self.l_public, &self.r_public, &self.o_public] {
            write_section(&mut out, section, engine);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], engine: &PairingEngine) -> Result<Self, SnarkError> {
        let mut rd = Reader { buf: bytes, pos: 0 };
        let circuit_id = check_header(&mut rd, KIND_VERIFICATION, engine)?;
        let num_public = rd.u32()? as usize;
        let g = rd.point(engine)?;
        let g_alpha_l = rd.point(engine)?;
        let g_alpha_r = rd.point(engine)?;
        let g_alpha_o = rd.point(engine)?;
        let g_gamma = rd.point(engine)?;
        let g_beta_gamma = rd.point(engine)?;
        let g_o_t = rd.point(engine)?;
        let l_public = rd.section(engine)?;
        let r_public = rd.section(engine)?;
        let o_public = rd.section(engine)?;
        rd.finish()?;
        if l_public.len() != num_public + 1
            || r_public.len() != num_public + 1
            || o_public.len() != num_public + 1
        {
            return Err(SnarkError::Format("section sizes disagree with header".into()));
        }
        Ok(VerificationKey {
            circuit_id,
            num_public,
            g,
            g_alpha_l,
            g_alpha_r,
            g_alpha_o,
            g_gamma,
            g_beta_gamma,
            g_o_t,
            l_public,
            r_public,
            o_public,
        })
    }

    pub fn write_to(&self, path: &std::path::Path, engine: &PairingEngine) -> Result<(), SnarkError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes(engine))?;
        Ok(())
    }

    pub fn read_from(path: &std::path::Path, engine: &PairingEngine) -> Result<Self, SnarkError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf, engine)
    }
}

impl Proof {
    /// Framed file form: magic, version, circuit id, then the eight points.
    pub fn to_file_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(PROOF_MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&self.circuit_id);
        out.extend_from_slice(&self.to_bytes(engine));
        out
    }

    pub fn from_file_bytes(bytes: &[u8], engine: &PairingEngine) -> Result<Self, SnarkError> {
        let mut rd = Reader { buf: bytes, pos: 0 };
        if rd.take(8)? != PROOF_MAGIC {
            return Err(SnarkError::Format("bad magic".into()));
        }
        if rd.u8()? != FORMAT_VERSION {
            return Err(SnarkError::Format("unsupported version".into()));
        }
        let circuit_id: [u8; 32] = rd.take(32)?.try_into().unwrap();
        let l = rd.point(engine)?;
        let l_alpha = rd.point(engine)?;
        let r = rd.point(engine)?;
        let r_alpha = rd.point(engine)?;
        let o = rd.point(engine)?;
        let o_alpha = rd.point(engine)?;
        let z = rd.point(engine)?;
        let h = rd.point(engine)?;
        rd.finish()?;
        Ok(Proof { circuit_id, l, l_alpha, r, r_alpha, o, o_alpha, z, h })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, LinearCombination, Witness};
    use crate::qap::circuit_to_qap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// x (public) · w (private) = out, over the oracle engine's field.
    fn tiny_qap(engine: &PairingEngine) -> (crate::circuit::Circuit, QapInstance) {
        let field = engine.scalar_field();
        let mut b = CircuitBuilder::new(field);
        let x = b.add_public("x", crate::circuit::WireRole::PublicInput);
        let w = b.add_private_input("w");
        b.mul(
            LinearCombination::wire(x, field),
            LinearCombination::wire(w, field),
            "out",
        );
        let c = b.build();
        let qap = circuit_to_qap(&c).unwrap();
        (c, qap)
    }

    fn tiny_witness(c: &crate::circuit::Circuit, x: u64, w: u64) -> Witness {
        let f = c.field();
        c.compute_witness(&[(1, f.from_u64(x)), (2, f.from_u64(w))]).unwrap()
    }

    #[test]
    fn honest_proof_accepts() {
        let engine = PairingEngine::oracle();
        let (c, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (pk, vk) = setup(&engine, &qap, &mut rng);
        let w = tiny_witness(&c, 3, 5);
        let proof = prove(&engine, &qap, &pk, &w).unwrap();
        let verdict = verify(&engine, &vk, w.public_inputs(), &proof).unwrap();
        assert_eq!(verdict, Verdict::Accept);
    }

    #[test]
    fn unsatisfied_witness_refused_at_proving_time() {
        let engine = PairingEngine::oracle();
        let (c, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (pk, _) = setup(&engine, &qap, &mut rng);
        let w = tiny_witness(&c, 3, 5);
        // forge the output wire
        let f = c.field();
        let mut vals: Vec<_> = w.values().to_vec();
        vals[3] = f.from_u64(16);
        let forged = c
            .compute_witness(&[(1, vals[1].clone()), (2, vals[2].clone())])
            .unwrap();
        // recomputation fixes the output; instead assemble raw values via a
        // hand-built witness using the public helper path
        drop(forged);
        let qap2 = &qap;
        let asm = qap2.assemble(&vals);
        assert!(!asm.is_satisfied());
        // prove() must reject the same values when smuggled in
        let bad = hand_witness(&c, vals);
        assert!(matches!(
            prove(&engine, &qap, &pk, &bad),
            Err(SnarkError::UnsatisfiedWitness)
        ));
    }

    /// Builds a Witness with arbitrary values by round-tripping through a
    /// permissive circuit evaluation (test helper).
    fn hand_witness(c: &crate::circuit::Circuit, values: Vec<FieldElement>) -> Witness {
        // compute_witness would fix outputs; reconstruct through the public
        // constructor path instead
        Witness::from_values_for_tests(values, c.num_public())
    }

    #[test]
    fn wrong_public_input_fails_divisibility() {
        let engine = PairingEngine::oracle();
        let (c, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (pk, vk) = setup(&engine, &qap, &mut rng);
        let w = tiny_witness(&c, 3, 5);
        let proof = prove(&engine, &qap, &pk, &w).unwrap();
        let f = c.field();
        let verdict = verify(&engine, &vk, &[f.from_u64(4)], &proof).unwrap();
        assert_eq!(verdict, Verdict::Reject(CheckFamily::Divisibility));
    }

    #[test]
    fn arity_mismatch_is_an_error_not_a_rejection() {
        let engine = PairingEngine::oracle();
        let (c, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (pk, vk) = setup(&engine, &qap, &mut rng);
        let w = tiny_witness(&c, 3, 5);
        let proof = prove(&engine, &qap, &pk, &w).unwrap();
        assert!(matches!(
            verify(&engine, &vk, &[], &proof),
            Err(SnarkError::ArityMismatch { expected: 1, got: 0 })
        ));
    }

    /// out = w^4 via two squarings, with w private and out public. All
    /// eight proof elements are nonzero here (the quotient polynomial has a
    /// genuine quadratic term), so mutations are never no-ops.
    fn quartic_qap(engine: &PairingEngine) -> (crate::circuit::Circuit, QapInstance) {
        let field = engine.scalar_field();
        let mut b = CircuitBuilder::new(field);
        let out = b.add_public("out", crate::circuit::WireRole::PublicOutput);
        let w = b.add_private_input("w");
        let sq = b.mul(
            LinearCombination::wire(w, field),
            LinearCombination::wire(w, field),
            "sq",
        );
        b.mul_into(
            LinearCombination::wire(sq, field),
            LinearCombination::wire(sq, field),
            out,
        );
        let c = b.build();
        let qap = circuit_to_qap(&c).unwrap();
        (c, qap)
    }

    #[test]
    fn mutated_elements_fail_their_check_family() {
        let engine = PairingEngine::oracle();
        let (c, qap) = quartic_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (pk, vk) = setup(&engine, &qap, &mut rng);
        let f = c.field();
        let w = c
            .compute_witness(&[(2, f.from_u64(3))])
            .unwrap();
        let proof = prove(&engine, &qap, &pk, &w).unwrap();
        for e in proof.elements() {
            assert_ne!(*e, GroupElement::Identity, "fixture must exercise every element");
        }
        let random_pt = engine.group_exp(
            engine.generator(),
            &engine.scalar_field().random_nonzero(&mut rng),
        );

        type Slot = (&'static str, fn(&mut Proof) -> &mut GroupElement, CheckFamily);
        let slots: [Slot; 8] = [
            ("l", |p| &mut p.l, CheckFamily::AlphaL),
            ("l_alpha", |p| &mut p.l_alpha, CheckFamily::AlphaL),
            ("r", |p| &mut p.r, CheckFamily::AlphaR),
            ("r_alpha", |p| &mut p.r_alpha, CheckFamily::AlphaR),
            ("o", |p| &mut p.o, CheckFamily::AlphaO),
            ("o_alpha", |p| &mut p.o_alpha, CheckFamily::AlphaO),
            ("z", |p| &mut p.z, CheckFamily::Consistency),
            ("h", |p| &mut p.h, CheckFamily::Divisibility),
        ];
        for (name, slot, family) in slots {
            for replacement in [GroupElement::Identity, random_pt.clone()] {
                let mut bad = proof.clone();
                let target = slot(&mut bad);
                assert_ne!(*target, replacement, "mutation must change {name}");
                *target = replacement;
                let verdict = verify(&engine, &vk, w.public_inputs(), &bad).unwrap();
                assert_eq!(verdict, Verdict::Reject(family), "element {name}");
            }
        }
    }

    #[test]
    fn setup_is_seed_deterministic() {
        let engine = PairingEngine::oracle();
        let (_, qap) = tiny_qap(&engine);
        let run = |seed: u64| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (pk, vk) = setup(&engine, &qap, &mut rng);
            (pk.to_bytes(&engine), vk.to_bytes(&engine))
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn trapdoor_reconstructs_vk_element() {
        // g_o^(t(s)) must equal group_exp(g_o, s - 1) for the 1-op program
        let engine = PairingEngine::oracle();
        let (_, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let (_, vk, waste) = setup_with_trapdoor(&engine, &qap, &mut rng);
        let f = engine.scalar_field();
        let g_o = engine.group_exp(
            engine.generator(),
            &(waste.rho_l() * waste.rho_r()),
        );
        let expect = engine.group_exp(&g_o, &(waste.s() - &f.one()));
        assert_eq!(vk.g_o_t, expect);
    }

    #[test]
    fn proof_is_deterministic_and_fixed_size() {
        let engine = PairingEngine::oracle();
        let (c, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (pk, _) = setup(&engine, &qap, &mut rng);
        let w = tiny_witness(&c, 3, 5);
        let p1 = prove(&engine, &qap, &pk, &w).unwrap();
        let p2 = prove(&engine, &qap, &pk, &w).unwrap();
        assert_eq!(p1.to_bytes(&engine), p2.to_bytes(&engine));
        assert_eq!(p1.to_bytes(&engine).len(), 8 * engine.point_byte_len());
    }

    #[test]
    fn key_and_proof_files_round_trip() {
        let engine = PairingEngine::oracle();
        let (c, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (pk, vk) = setup(&engine, &qap, &mut rng);
        let w = tiny_witness(&c, 2, 9);
        let proof = prove(&engine, &qap, &pk, &w).unwrap();

        let pk2 = ProvingKey::from_bytes(&pk.to_bytes(&engine), &engine).unwrap();
        assert_eq!(pk, pk2);
        let vk2 = VerificationKey::from_bytes(&vk.to_bytes(&engine), &engine).unwrap();
        assert_eq!(vk, vk2);
        let proof2 = Proof::from_file_bytes(&proof.to_file_bytes(&engine), &engine).unwrap();
        assert_eq!(proof, proof2);
        // proofs re-verify after the round trip
        assert_eq!(
            verify(&engine, &vk2, w.public_inputs(), &proof2).unwrap(),
            Verdict::Accept
        );
    }

    #[test]
    fn corrupted_files_rejected() {
        let engine = PairingEngine::oracle();
        let (_, qap) = tiny_qap(&engine);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (pk, vk) = setup(&engine, &qap, &mut rng);
        let mut pk_bytes = pk.to_bytes(&engine);
        pk_bytes[0] ^= 0xff;
        assert!(matches!(
            ProvingKey::from_bytes(&pk_bytes, &engine),
            Err(SnarkError::Format(_))
        ));
        // vk bytes fed to the pk loader: wrong kind
        assert!(matches!(
            ProvingKey::from_bytes(&vk.to_bytes(&engine), &engine),
            Err(SnarkError::Format(_))
        ));
        let mut vk_bytes = vk.to_bytes(&engine);
        let len = vk_bytes.len();
        vk_bytes.truncate(len - 3);
        assert!(matches!(
            VerificationKey::from_bytes(&vk_bytes, &engine),
            Err(SnarkError::Format(_))
        ));
    }

    #[test]
    fn cross_circuit_key_rejected() {
        let engine = PairingEngine::oracle();
        let field = engine.scalar_field();
        let (c, qap) = tiny_qap(&engine);
        // a different program: x·x = out
        let mut b = CircuitBuilder::new(field);
        let x = b.add_public("x", crate::circuit::WireRole::PublicInput);
        let _sq = b.mul(
            LinearCombination::wire(x, field),
            LinearCombination::wire(x, field),
            "sq",
        );
        let c2 = b.build();
        let qap2 = circuit_to_qap(&c2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let (pk2, vk2) = setup(&engine, &qap2, &mut rng);
        let w = tiny_witness(&c, 3, 5);
        assert!(matches!(
            prove(&engine, &qap, &pk2, &w),
            Err(SnarkError::KeyMismatch)
        ));
        let (pk, _) = setup(&engine, &qap, &mut rng);
        let proof = prove(&engine, &qap, &pk, &w).unwrap();
        assert!(matches!(
            verify(&engine, &vk2, &[field.from_u64(3)], &proof),
            Err(SnarkError::KeyMismatch)
        ));
    }

    #[test]
    fn random_small_circuits_prove_and_verify() {
        let engine = PairingEngine::oracle();
        let field = engine.scalar_field().clone();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..10 {
            let c = crate::circuit::random_circuit(&field, &mut rng, 6);
            let qap = circuit_to_qap(&c).unwrap();
            let inputs: Vec<(usize, FieldElement)> = (1..c.num_wires())
                .filter(|&i| {
                    matches!(
                        c.wire_role(i),
                        crate::circuit::WireRole::PublicInput
                            | crate::circuit::WireRole::PrivateInput
                    )
                })
                .map(|i| (i, field.random(&mut rng)))
                .collect();
            let w = c.compute_witness(&inputs).unwrap();
            let (pk, vk, waste) = setup_with_trapdoor(&engine, &qap, &mut rng);
            let proof = prove(&engine, &qap, &pk, &w).unwrap();
            assert_eq!(
                verify(&engine, &vk, w.public_inputs(), &proof).unwrap(),
                Verdict::Accept
            );
            // Flip one public input if any exist, then predict the verdict
            // by direct evaluation at the trapdoor point: the divisibility
            // check holds iff L'(s)·R'(s) − O'(s) = t(s)·h(s) where the
            // primed sums use the tampered statement and h stays honest.
            // (A flipped wire that appears in no constraint still accepts.)
            if w.public_inputs().is_empty() {
                continue;
            }
            let mut values = w.values().to_vec();
            let k = rng.gen_range(1..=qap.num_public());
            values[k] = &values[k] + &field.one();
            let s = waste.s();
            let eval_sum = |poly: fn(&QapInstance, usize) -> &crate::poly::Polynomial| {
                let mut acc = field.zero();
                for (i, v) in values.iter().enumerate() {
                    acc = &acc + &(v * &poly(&qap, i).eval(s));
                }
                acc
            };
            let l_s = eval_sum(QapInstance::l_poly);
            let r_s = eval_sum(QapInstance::r_poly);
            let o_s = eval_sum(QapInstance::o_poly);
            let honest_h_s = qap.assemble(w.values()).h.eval(s);
            let expected = if &(&l_s * &r_s) - &o_s == &qap.target().eval(s) * &honest_h_s {
                Verdict::Accept
            } else {
                Verdict::Reject(CheckFamily::Divisibility)
            };
            let pubs = &values[1..=qap.num_public()];
            assert_eq!(verify(&engine, &vk, pubs, &proof).unwrap(), expected);
        }
    }
}
