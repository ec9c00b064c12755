//! Flattened arithmetic circuits and witness computation.
//!
//! A circuit is a list of multiplication constraints
//! `⟨left⟩ · ⟨right⟩ = out` where each side is a linear combination of
//! wires and `out` is a single wire. Wire 0 is the constant-one
//! pseudo-variable; wires `1..=m` are public; everything above is private.
//! Additions never cost a constraint — they fold into the combinations.
//!
//! [`build_location_circuit`] produces the statement proven by the
//! protocol: knowledge of certificate fields `(pk, lon, lat, rand, time)`
//! such that `hr = H(rand)` and `dig = H(pk, lon, lat, rand, time)`,
//! with a privacy level selecting which of the fields are public wires.

use std::fmt::Write as _;

use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::hash::{bytes_to_elements, AlgebraicHashParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("privacy level must be 1..=4, got {0}")]
    InvalidLevel(u8),
    #[error("input wire {index} ({name}) has no assigned value")]
    MissingInput { index: usize, name: String },
    #[error("constraint {constraint} violated while evaluating the circuit")]
    InternalInconsistency { constraint: usize },
    #[error("wire {index} read before assignment at constraint {constraint}")]
    UnassignedWire { index: usize, constraint: usize },
    #[error("field too small: need more than {needed} distinct evaluation points")]
    FieldTooSmall { needed: usize },
    #[error("public parameter set does not match the privacy level")]
    PublicParamMismatch,
}

/// `Σ coeff_i · wire_i`, kept sorted by wire index with merged terms so the
/// text export (and therefore the circuit identifier) is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearCombination {
    terms: Vec<(usize, FieldElement)>,
}

impl LinearCombination {
    pub fn new() -> Self {
        LinearCombination { terms: Vec::new() }
    }

    pub fn wire(index: usize, field: &Field) -> Self {
        LinearCombination { terms: vec![(index, field.one())] }
    }

    pub fn constant(value: FieldElement) -> Self {
        LinearCombination { terms: vec![(0, value)] }.normalized()
    }

    pub fn terms(&self) -> &[(usize, FieldElement)] {
        &self.terms
    }

    pub fn plus(&self, other: &LinearCombination) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        LinearCombination { terms }.normalized()
    }

    pub fn plus_term(&self, index: usize, coeff: FieldElement) -> Self {
        let mut terms = self.terms.clone();
        terms.push((index, coeff));
        LinearCombination { terms }.normalized()
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, FieldElement)> = Vec::with_capacity(self.terms.len());
        for (i, c) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc = &*acc + &c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        LinearCombination { terms: merged }
    }

    pub fn eval(&self, values: &[FieldElement], field: &Field) -> FieldElement {
        let mut acc = field.zero();
        for (i, c) in &self.terms {
            acc = &acc + &(c * &values[*i]);
        }
        acc
    }

    fn eval_partial(
        &self,
        values: &[Option<FieldElement>],
        field: &Field,
        constraint: usize,
    ) -> Result<FieldElement, CircuitError> {
        let mut acc = field.zero();
        for (i, c) in &self.terms {
            let v = values[*i]
                .as_ref()
                .ok_or(CircuitError::UnassignedWire { index: *i, constraint })?;
            acc = &acc + &(c * v);
        }
        Ok(acc)
    }
}

/// One multiplication constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub left: LinearCombination,
    pub right: LinearCombination,
    pub out: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireRole {
    One,
    PublicInput,
    PublicOutput,
    PrivateInput,
    Intermediate,
}

impl WireRole {
    fn label(self) -> &'static str {
        match self {
            WireRole::One => "one",
            WireRole::PublicInput => "pub-in",
            WireRole::PublicOutput => "pub-out",
            WireRole::PrivateInput => "priv-in",
            WireRole::Intermediate => "wire",
        }
    }
}

#[derive(Debug, Clone)]
struct WireInfo {
    name: String,
    role: WireRole,
}

/// A flattened circuit with a fixed public/private wire split.
#[derive(Debug, Clone)]
pub struct Circuit {
    field: Field,
    wires: Vec<WireInfo>,
    num_public: usize,
    ops: Vec<Operation>,
}

impl Circuit {
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Total wire count, including the constant-one wire 0.
    pub fn num_wires(&self) -> usize {
        self.wires.len()
    }

    /// Number of public wires (indices `1..=m`).
    pub fn num_public(&self) -> usize {
        self.num_public
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn num_constraints(&self) -> usize {
        self.ops.len()
    }

    pub fn wire_name(&self, index: usize) -> &str {
        &self.wires[index].name
    }

    pub fn wire_role(&self, index: usize) -> WireRole {
        self.wires[index].role
    }

    /// Evaluates the circuit forward from the given input assignments.
    /// Every input wire must be covered; constraint outputs that land on
    /// already-assigned wires must agree with the assigned value.
    pub fn compute_witness(
        &self,
        assignments: &[(usize, FieldElement)],
    ) -> Result<Witness, CircuitError> {
        let mut values: Vec<Option<FieldElement>> = vec![None; self.wires.len()];
        values[0] = Some(self.field.one());
        for (i, v) in assignments {
            values[*i] = Some(v.clone());
        }
        for (i, w) in self.wires.iter().enumerate() {
            let is_input =
                matches!(w.role, WireRole::PublicInput | WireRole::PrivateInput);
            if is_input && values[i].is_none() {
                return Err(CircuitError::MissingInput { index: i, name: w.name.clone() });
            }
        }
        for (k, op) in self.ops.iter().enumerate() {
            let l = op.left.eval_partial(&values, &self.field, k)?;
            let r = op.right.eval_partial(&values, &self.field, k)?;
            let out = &l * &r;
            match &values[op.out] {
                None => values[op.out] = Some(out),
                Some(existing) => {
                    if *existing != out {
                        return Err(CircuitError::InternalInconsistency { constraint: k });
                    }
                }
            }
        }
        let mut flat = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            match v {
                Some(v) => flat.push(v),
                None => {
                    return Err(CircuitError::MissingInput {
                        index: i,
                        name: self.wires[i].name.clone(),
                    })
                }
            }
        }
        Ok(Witness { values: flat, num_public: self.num_public })
    }

    /// Brute-force satisfaction check: the index of the first violated
    /// constraint under a full assignment, or None if all hold.
    pub fn first_violated(&self, values: &[FieldElement]) -> Option<usize> {
        for (k, op) in self.ops.iter().enumerate() {
            let l = op.left.eval(values, &self.field);
            let r = op.right.eval(values, &self.field);
            if &l * &r != values[op.out] {
                return Some(k);
            }
        }
        None
    }

    /// Line-oriented text export: header, wire table, then one constraint
    /// per line with left/right/output coefficient lists. Canonical, so its
    /// hash identifies the circuit.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "zkpol-circuit v1");
        let _ = writeln!(out, "field {}", self.field.modulus());
        let _ = writeln!(out, "wires {} public {}", self.wires.len(), self.num_public);
        for (i, w) in self.wires.iter().enumerate() {
            let _ = writeln!(out, "wire {} {} {}", i, w.role.label(), w.name);
        }
        for (k, op) in self.ops.iter().enumerate() {
            let fmt_lc = |lc: &LinearCombination| {
                if lc.terms.is_empty() {
                    return "0".to_string();
                }
                lc.terms
                    .iter()
                    .map(|(i, c)| format!("{i}:{c}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(
                out,
                "op {} | {} | {} | {}",
                k,
                fmt_lc(&op.left),
                fmt_lc(&op.right),
                op.out
            );
        }
        out
    }
}

/// Full wire assignment satisfying a circuit, `values[0] = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    values: Vec<FieldElement>,
    num_public: usize,
}

impl Witness {
    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn num_public(&self) -> usize {
        self.num_public
    }

    /// Values of wires `1..=m`, the verifier-visible statement.
    pub fn public_inputs(&self) -> &[FieldElement] {
        &self.values[1..=self.num_public]
    }

    pub fn value(&self, index: usize) -> &FieldElement {
        &self.values[index]
    }

    /// Wraps raw wire values without evaluating any constraints, so test
    /// harnesses can feed deliberately inconsistent assignments downstream.
    #[doc(hidden)]
    pub fn from_values_for_tests(values: Vec<FieldElement>, num_public: usize) -> Self {
        Witness { values, num_public }
    }
}

// ── incremental construction ──

/// Builds circuits wire by wire. Public wires must all be declared before
/// any private wire so the index split stays `1..=m` public.
pub struct CircuitBuilder {
    field: Field,
    wires: Vec<WireInfo>,
    num_public: usize,
    ops: Vec<Operation>,
    private_started: bool,
}

impl CircuitBuilder {
    pub fn new(field: &Field) -> Self {
        CircuitBuilder {
            field: field.clone(),
            wires: vec![WireInfo { name: "one".into(), role: WireRole::One }],
            num_public: 0,
            ops: Vec::new(),
            private_started: false,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn add_public(&mut self, name: &str, role: WireRole) -> usize {
        assert!(
            !self.private_started,
            "public wires must be declared before private ones"
        );
        assert!(matches!(role, WireRole::PublicInput | WireRole::PublicOutput));
        self.wires.push(WireInfo { name: name.into(), role });
        self.num_public += 1;
        self.wires.len() - 1
    }

    pub fn add_private_input(&mut self, name: &str) -> usize {
        self.private_started = true;
        self.wires.push(WireInfo { name: name.into(), role: WireRole::PrivateInput });
        self.wires.len() - 1
    }

    fn fresh(&mut self, name: String) -> usize {
        self.private_started = true;
        self.wires.push(WireInfo { name, role: WireRole::Intermediate });
        self.wires.len() - 1
    }

    /// `⟨left⟩·⟨right⟩ = fresh wire`; returns the output wire index.
    pub fn mul(
        &mut self,
        left: LinearCombination,
        right: LinearCombination,
        name: &str,
    ) -> usize {
        let out = self.fresh(name.into());
        self.ops.push(Operation { left, right, out });
        out
    }

    /// `⟨left⟩·⟨right⟩ = existing wire`: binds a computed value to a
    /// declared wire (used to surface hash outputs as public wires).
    pub fn mul_into(&mut self, left: LinearCombination, right: LinearCombination, out: usize) {
        self.ops.push(Operation { left, right, out });
    }

    pub fn build(self) -> Circuit {
        Circuit {
            field: self.field,
            wires: self.wires,
            num_public: self.num_public,
            ops: self.ops,
        }
    }
}

// ── the proof-of-location statement ──

/// Which certificate fields are published alongside a service request.
/// Higher levels disclose more; the blinding scalar never leaves the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrivacyLevel {
    L1,
    L2,
    L3,
    L4,
}

impl PrivacyLevel {
    pub fn all() -> [PrivacyLevel; 4] {
        [PrivacyLevel::L1, PrivacyLevel::L2, PrivacyLevel::L3, PrivacyLevel::L4]
    }

    pub fn from_number(n: u8) -> Result<Self, CircuitError> {
        match n {
            1 => Ok(PrivacyLevel::L1),
            2 => Ok(PrivacyLevel::L2),
            3 => Ok(PrivacyLevel::L3),
            4 => Ok(PrivacyLevel::L4),
            other => Err(CircuitError::InvalidLevel(other)),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            PrivacyLevel::L1 => 1,
            PrivacyLevel::L2 => 2,
            PrivacyLevel::L3 => 3,
            PrivacyLevel::L4 => 4,
        }
    }

    /// Coordinates are public from level 2 up.
    pub fn reveals_coordinates(self) -> bool {
        self >= PrivacyLevel::L2
    }

    /// The certificate timestamp is public from level 3 up.
    pub fn reveals_time(self) -> bool {
        self >= PrivacyLevel::L3
    }

    /// The user public key is public only at level 4.
    pub fn reveals_pk(self) -> bool {
        self == PrivacyLevel::L4
    }
}

/// Wire map of a location circuit: where each certificate field lives.
#[derive(Debug, Clone)]
pub struct CircuitLayout {
    pub level: PrivacyLevel,
    pub pk_byte_len: usize,
    pub pk_wires: Vec<usize>,
    pub lon_wires: Vec<usize>,
    pub lat_wires: Vec<usize>,
    pub time_wires: Vec<usize>,
    pub rand_wire: usize,
    pub rand_chunk_wires: Vec<usize>,
    pub hr_wire: usize,
    pub dig_wire: usize,
}

/// Certificate fields in native form, for witness assignment.
#[derive(Debug, Clone)]
pub struct CertificateValues<'a> {
    pub pk_bytes: &'a [u8],
    pub lon_microdeg: i64,
    pub lat_microdeg: i64,
    pub rand: &'a FieldElement,
    pub time: u64,
}

/// The level-dependent public parameters carried by a service request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PublicParams {
    pub pk_bytes: Option<Vec<u8>>,
    pub lon_microdeg: Option<i64>,
    pub lat_microdeg: Option<i64>,
    pub time: Option<u64>,
}

impl CircuitLayout {
    /// Wire assignments for every circuit input, derived from certificate
    /// fields by the same canonical byte mapping the access point hashes.
    pub fn assignments(
        &self,
        field: &Field,
        cert: &CertificateValues<'_>,
    ) -> Vec<(usize, FieldElement)> {
        let mut out = Vec::new();
        let mut bind = |wires: &[usize], elems: Vec<FieldElement>| {
            debug_assert_eq!(wires.len(), elems.len());
            out.extend(wires.iter().copied().zip(elems));
        };
        bind(&self.pk_wires, bytes_to_elements(field, cert.pk_bytes));
        bind(&self.lon_wires, bytes_to_elements(field, &cert.lon_microdeg.to_be_bytes()));
        bind(&self.lat_wires, bytes_to_elements(field, &cert.lat_microdeg.to_be_bytes()));
        bind(&self.time_wires, bytes_to_elements(field, &cert.time.to_be_bytes()));
        bind(&self.rand_chunk_wires, bytes_to_elements(field, &cert.rand.to_bytes()));
        out.push((self.rand_wire, cert.rand.clone()));
        out
    }

    /// The verifier-side public input vector `[params…, hr, dig]`, ordered
    /// by wire index. Fails if the supplied parameters don't match the
    /// level's disclosure set.
    pub fn public_values(
        &self,
        field: &Field,
        params: &PublicParams,
        hr: &FieldElement,
        dig: &FieldElement,
    ) -> Result<Vec<FieldElement>, CircuitError> {
        let mut pairs: Vec<(usize, FieldElement)> = Vec::new();
        if self.level.reveals_pk() {
            let pk = params.pk_bytes.as_ref().ok_or(CircuitError::PublicParamMismatch)?;
            if pk.len() != self.pk_byte_len {
                return Err(CircuitError::PublicParamMismatch);
            }
            pairs.extend(self.pk_wires.iter().copied().zip(bytes_to_elements(field, pk)));
        } else if params.pk_bytes.is_some() {
            return Err(CircuitError::PublicParamMismatch);
        }
        if self.level.reveals_coordinates() {
            let lon = params.lon_microdeg.ok_or(CircuitError::PublicParamMismatch)?;
            let lat = params.lat_microdeg.ok_or(CircuitError::PublicParamMismatch)?;
            pairs.extend(
                self.lon_wires.iter().copied().zip(bytes_to_elements(field, &lon.to_be_bytes())),
            );
            pairs.extend(
                self.lat_wires.iter().copied().zip(bytes_to_elements(field, &lat.to_be_bytes())),
            );
        } else if params.lon_microdeg.is_some() || params.lat_microdeg.is_some() {
            return Err(CircuitError::PublicParamMismatch);
        }
        if self.level.reveals_time() {
            let time = params.time.ok_or(CircuitError::PublicParamMismatch)?;
            pairs.extend(
                self.time_wires.iter().copied().zip(bytes_to_elements(field, &time.to_be_bytes())),
            );
        } else if params.time.is_some() {
            return Err(CircuitError::PublicParamMismatch);
        }
        pairs.push((self.hr_wire, hr.clone()));
        pairs.push((self.dig_wire, dig.clone()));
        pairs.sort_by_key(|(i, _)| *i);
        Ok(pairs.into_iter().map(|(_, v)| v).collect())
    }

    /// Hash-input order of the digest tuple: pk ‖ lon ‖ lat ‖ rand ‖ time.
    pub fn digest_wire_order(&self) -> Vec<usize> {
        let mut order = Vec::new();
        order.extend(&self.pk_wires);
        order.extend(&self.lon_wires);
        order.extend(&self.lat_wires);
        order.extend(&self.rand_chunk_wires);
        order.extend(&self.time_wires);
        order
    }
}

/// Samples a small random circuit: a few input wires, then a chain of
/// constraints whose sides are random linear combinations over everything
/// allocated so far. Harness support for cross-checking the constraint
/// system against brute-force evaluation.
pub fn random_circuit(field: &Field, rng: &mut impl rand::Rng, max_ops: usize) -> Circuit {
    let mut b = CircuitBuilder::new(field);
    let num_public = rng.gen_range(0..=2);
    let num_private = rng.gen_range(1..=3);
    let mut wires = vec![0usize];
    for i in 0..num_public {
        wires.push(b.add_public(&format!("p{i}"), WireRole::PublicInput));
    }
    for i in 0..num_private {
        wires.push(b.add_private_input(&format!("x{i}")));
    }
    let num_ops = rng.gen_range(1..=max_ops.max(1));
    for k in 0..num_ops {
        let mut side = || {
            let mut lc = LinearCombination::new();
            for _ in 0..rng.gen_range(1..=3) {
                let w = wires[rng.gen_range(0..wires.len())];
                lc = lc.plus_term(w, field.random(rng));
            }
            lc
        };
        let left = side();
        let right = side();
        let out = b.mul(left, right, &format!("t{k}"));
        wires.push(out);
    }
    b.build()
}

/// Multiplication-constraint count the location circuit must have:
/// two per hash round (square, cube) for each permutation call, plus the
/// three binding constraints (hr, dig, rand-chunk consistency).
pub fn expected_constraint_count(hash: &AlgebraicHashParams, pk_byte_len: usize) -> usize {
    let field = hash.field();
    let chunks = |len: usize| len.div_ceil(field.chunk_len());
    let dig_inputs = chunks(pk_byte_len) + 2 * chunks(8) + chunks(field.byte_len()) + chunks(8);
    let permutations = 1 + dig_inputs;
    permutations * 2 * hash.rounds() + 3
}

/// Builds the proof-of-location circuit for one privacy level.
///
/// Statement: for private (or level-disclosed) certificate fields,
/// `hr = H(rand)` and `dig = H(pk ‖ lon ‖ lat ‖ rand ‖ time)` where the
/// tuple fields enter as canonical byte chunks; a linear constraint ties
/// the raw `rand` wire to its chunks.
pub fn build_location_circuit(
    level: PrivacyLevel,
    hash: &AlgebraicHashParams,
    pk_byte_len: usize,
) -> (Circuit, CircuitLayout) {
    let field = hash.field().clone();
    let mut b = CircuitBuilder::new(&field);
    let chunks = |len: usize| len.div_ceil(field.chunk_len());

    let alloc = |b: &mut CircuitBuilder, public: bool, name: &str, n: usize| -> Vec<usize> {
        (0..n)
            .map(|i| {
                let wire_name = format!("{name}[{i}]");
                if public {
                    b.add_public(&wire_name, WireRole::PublicInput)
                } else {
                    b.add_private_input(&wire_name)
                }
            })
            .collect()
    };

    // public wires first, in disclosure order, then the two hash outputs
    let mut pk_wires = Vec::new();
    let mut lon_wires = Vec::new();
    let mut lat_wires = Vec::new();
    let mut time_wires = Vec::new();
    if level.reveals_pk() {
        pk_wires = alloc(&mut b, true, "pk", chunks(pk_byte_len));
    }
    if level.reveals_coordinates() {
        lon_wires = alloc(&mut b, true, "lon", chunks(8));
        lat_wires = alloc(&mut b, true, "lat", chunks(8));
    }
    if level.reveals_time() {
        time_wires = alloc(&mut b, true, "time", chunks(8));
    }
    let hr_wire = b.add_public("hr", WireRole::PublicOutput);
    let dig_wire = b.add_public("dig", WireRole::PublicOutput);

    // private inputs in the same canonical order
    if !level.reveals_pk() {
        pk_wires = alloc(&mut b, false, "pk", chunks(pk_byte_len));
    }
    if !level.reveals_coordinates() {
        lon_wires = alloc(&mut b, false, "lon", chunks(8));
        lat_wires = alloc(&mut b, false, "lat", chunks(8));
    }
    if !level.reveals_time() {
        time_wires = alloc(&mut b, false, "time", chunks(8));
    }
    let rand_wire = b.add_private_input("rand");
    let rand_chunk_wires = alloc(&mut b, false, "rand_chunk", chunks(field.byte_len()));

    let layout = CircuitLayout {
        level,
        pk_byte_len,
        pk_wires,
        lon_wires,
        lat_wires,
        time_wires,
        rand_wire,
        rand_chunk_wires,
        hr_wire,
        dig_wire,
    };

    // in-circuit permutation: R rounds of x ← (x + c_i)^3 as two
    // multiplications each, then the feedforward fold
    let permute = |b: &mut CircuitBuilder, input: &LinearCombination, tag: &str| {
        let mut state = input.clone();
        for (i, c) in hash.constants().iter().enumerate() {
            let a = state.plus_term(0, c.clone());
            let sq = b.mul(a.clone(), a.clone(), &format!("{tag}_r{i}_sq"));
            let cube = b.mul(
                LinearCombination::wire(sq, &field),
                a,
                &format!("{tag}_r{i}_cube"),
            );
            state = LinearCombination::wire(cube, &field);
        }
        state.plus(input)
    };

    // hr = H(rand): single absorption
    let hr_state = permute(&mut b, &LinearCombination::wire(layout.rand_wire, &field), "hr_p0");
    b.mul_into(hr_state, LinearCombination::wire(0, &field), layout.hr_wire);

    // rand = Σ chunk_i · 256^(bytes to its right): ties the raw rand wire
    // to the chunked form hashed into the digest
    {
        let total = field.byte_len();
        let chunk_len = field.chunk_len();
        let mut lc = LinearCombination::new();
        let mut consumed = 0usize;
        for &w in &layout.rand_chunk_wires {
            let this_len = chunk_len.min(total - consumed);
            consumed += this_len;
            let shift = 8 * (total - consumed) as u64;
            let weight = field.from_u64(2).pow(&shift.into());
            lc = lc.plus_term(w, weight);
        }
        b.mul_into(lc, LinearCombination::wire(0, &field), layout.rand_wire);
    }

    // dig = H(pk ‖ lon ‖ lat ‖ rand-chunks ‖ time)
    let mut state = LinearCombination::new();
    for (i, w) in layout.digest_wire_order().into_iter().enumerate() {
        state = state.plus(&LinearCombination::wire(w, &field));
        state = permute(&mut b, &state, &format!("dig_p{i}"));
    }
    b.mul_into(state, LinearCombination::wire(0, &field), layout.dig_wire);

    (b.build(), layout)
}
