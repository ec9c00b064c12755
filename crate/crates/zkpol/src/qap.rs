//! Circuit → quadratic-program conversion.
//!
//! Constraint `k` of a circuit is attached to evaluation point `k + 1`.
//! For every wire `i`, three polynomials `l_i, r_i, o_i` interpolate that
//! wire's coefficient in the left/right/output slots across all points.
//! With a full assignment `v`, the combinations
//! `L = Σ v_i·l_i`, `R = Σ v_i·r_i`, `O = Σ v_i·o_i`
//! satisfy every constraint exactly when `t(x) = ∏(x - k)` divides
//! `L·R - O`; the quotient `h` is what the prover commits to.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::circuit::{Circuit, CircuitError};
use crate::field::{Field, FieldElement};
use crate::hash::hash_bytes;
use crate::mont::{MontCtx, Residue};
use crate::poly::Polynomial;

/// The interpolated program plus the metadata verification needs.
#[derive(Debug, Clone)]
pub struct QapInstance {
    field: Field,
    num_wires: usize,
    num_public: usize,
    degree: usize,
    l: Vec<Polynomial>,
    r: Vec<Polynomial>,
    o: Vec<Polynomial>,
    t: Polynomial,
    circuit_id: [u8; 32],
}

/// Assembled witness polynomials and the divisibility outcome.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub l: Polynomial,
    pub r: Polynomial,
    pub o: Polynomial,
    pub h: Polynomial,
    pub remainder: Polynomial,
}

impl Assembly {
    pub fn is_satisfied(&self) -> bool {
        self.remainder.is_zero()
    }
}

impl QapInstance {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn num_public(&self) -> usize {
        self.num_public
    }

    /// Number of constraints = number of evaluation points = deg t.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn l_poly(&self, i: usize) -> &Polynomial {
        &self.l[i]
    }

    pub fn r_poly(&self, i: usize) -> &Polynomial {
        &self.r[i]
    }

    pub fn o_poly(&self, i: usize) -> &Polynomial {
        &self.o[i]
    }

    pub fn target(&self) -> &Polynomial {
        &self.t
    }

    /// SHA-256 of the source circuit's canonical text export; keys and
    /// proofs carry it so mismatched artifacts are rejected early.
    pub fn circuit_id(&self) -> &[u8; 32] {
        &self.circuit_id
    }

    /// Combines witness values into `L, R, O`, divides `L·R - O` by `t`.
    ///
    /// The three combinations accumulate as raw column sums across all wires
    /// and are reduced once per coefficient, so the cost is one big-integer
    /// product per (wire, coefficient) pair.
    pub fn assemble(&self, values: &[FieldElement]) -> Assembly {
        debug_assert_eq!(values.len(), self.num_wires);
        debug_assert!(values[0].is_one(), "wire 0 must carry the constant one");
        let mut acc_l = vec![BigUint::zero(); self.degree];
        let mut acc_r = vec![BigUint::zero(); self.degree];
        let mut acc_o = vec![BigUint::zero(); self.degree];
        for (i, v) in values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let v_raw = v.value();
            for (acc, poly) in
                [(&mut acc_l, &self.l[i]), (&mut acc_r, &self.r[i]), (&mut acc_o, &self.o[i])]
            {
                for (j, c) in poly.coeffs().iter().enumerate() {
                    acc[j] += c.value() * v_raw;
                }
            }
        }
        let l = Polynomial::from_raw_columns(&self.field, acc_l);
        let r = Polynomial::from_raw_columns(&self.field, acc_r);
        let o = Polynomial::from_raw_columns(&self.field, acc_o);
        let p = l.mul(&r).sub(&o);
        let (h, remainder) = p.divide(&self.t).expect("t is nonzero");
        Assembly { l, r, o, h, remainder }
    }

    /// Per-wire line-oriented dump: `t`, then `l/r/o` coefficient lists.
    pub fn export_text(&self) -> String {
        let fmt_poly = |p: &Polynomial| {
            if p.is_zero() {
                return "0".to_string();
            }
            p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "zkpol-qap v1");
        let _ = writeln!(out, "field {}", self.field.modulus());
        let _ = writeln!(
            out,
            "wires {} public {} degree {}",
            self.num_wires, self.num_public, self.degree
        );
        let _ = writeln!(out, "circuit {}", hex::encode(self.circuit_id));
        let _ = writeln!(out, "t {}", fmt_poly(&self.t));
        for i in 0..self.num_wires {
            let _ = writeln!(out, "l {} {}", i, fmt_poly(&self.l[i]));
            let _ = writeln!(out, "r {} {}", i, fmt_poly(&self.r[i]));
            let _ = writeln!(out, "o {} {}", i, fmt_poly(&self.o[i]));
        }
        out
    }
}

/// Interpolates a circuit into a [`QapInstance`].
///
/// Uses the factorial form of the Lagrange denominators
/// `∏_{j≠k}(k - j) = (k-1)!·(d-k)!·(-1)^(d-k)` and synthetic division for
/// the numerators, so construction is quadratic in the constraint count
/// rather than cubic.
pub fn circuit_to_qap(circuit: &Circuit) -> Result<QapInstance, CircuitError> {
    let field = circuit.field().clone();
    let d = circuit.num_constraints();
    if BigUint::from(d) >= *field.modulus() {
        return Err(CircuitError::FieldTooSmall { needed: d });
    }
    let n = circuit.num_wires();
    let t = Polynomial::vanishing(&field, d);

    let (l, r, o) = match field.mont_ctx() {
        Some(ctx) => interpolate_mont(circuit, &field, &t, ctx),
        None => interpolate_generic(circuit, &field, &t),
    };

    let circuit_id = hash_bytes(circuit.export_text().as_bytes());
    Ok(QapInstance {
        field,
        num_wires: n,
        num_public: circuit.num_public(),
        degree: d,
        l,
        r,
        o,
        t,
        circuit_id,
    })
}

type WirePolys = (Vec<Polynomial>, Vec<Polynomial>, Vec<Polynomial>);

/// Portable big-integer interpolation walk; serves any field size.
fn interpolate_generic(circuit: &Circuit, field: &Field, t: &Polynomial) -> WirePolys {
    let d = circuit.num_constraints();
    let n = circuit.num_wires();

    // factorials 0!..d!
    let mut fact = Vec::with_capacity(d + 1);
    fact.push(field.one());
    for k in 1..=d {
        let prev = fact[k - 1].clone();
        fact.push(&prev * &field.from_u64(k as u64));
    }

    let mut l = vec![Polynomial::zero(field); n];
    let mut r = vec![Polynomial::zero(field); n];
    let mut o = vec![Polynomial::zero(field); n];

    for (k0, op) in circuit.ops().iter().enumerate() {
        let k = k0 + 1;
        let point = field.from_u64(k as u64);
        // Lagrange basis L_k = (t / (x - k)) / ∏_{j≠k}(k - j); the division
        // by the denominator rides along in each accumulation scale instead
        // of materializing the scaled basis
        let (numer, rem) = t.div_by_root(&point);
        debug_assert!(rem.is_zero());
        let mut den = &fact[k - 1] * &fact[d - k];
        if (d - k) % 2 == 1 {
            den = -den;
        }
        let den_inv = den.inverse().expect("nonzero denominator");
        for (i, c) in op.left.terms() {
            l[*i].add_scaled(&numer, &(c * &den_inv));
        }
        for (i, c) in op.right.terms() {
            r[*i].add_scaled(&numer, &(c * &den_inv));
        }
        o[op.out].add_scaled(&numer, &den_inv);
    }
    (l, r, o)
}

/// The same walk as [`interpolate_generic`], run in fixed-width Montgomery
/// residues and materialized into field elements once at the end. Inverse
/// factorials come from a single Fermat inversion of d!.
fn interpolate_mont(circuit: &Circuit, field: &Field, t: &Polynomial, ctx: &MontCtx) -> WirePolys {
    let d = circuit.num_constraints();
    let n = circuit.num_wires();
    let t_m: Vec<Residue> = t.coeffs().iter().map(|c| ctx.to_mont(c.value())).collect();
    let point = |k: usize| ctx.to_mont(&BigUint::from(k as u64));

    let mut fact = Vec::with_capacity(d + 1);
    fact.push(ctx.one());
    for k in 1..=d {
        fact.push(ctx.mul(&fact[k - 1], &point(k)));
    }
    let mut inv_fact = vec![ctx.one(); d + 1];
    inv_fact[d] = ctx.pow(&fact[d], &(field.modulus() - 2u32));
    for k in (1..=d).rev() {
        inv_fact[k - 1] = ctx.mul(&inv_fact[k], &point(k));
    }

    let mut acc_l: Vec<Vec<Residue>> = vec![Vec::new(); n];
    let mut acc_r: Vec<Vec<Residue>> = vec![Vec::new(); n];
    let mut acc_o: Vec<Vec<Residue>> = vec![Vec::new(); n];
    let mut numer = vec![ctx.zero(); d];

    for (k0, op) in circuit.ops().iter().enumerate() {
        let k = k0 + 1;
        let a = point(k);
        // numer = t / (x - k) by synthetic division, exact by construction
        numer[d - 1] = t_m[d];
        for j in (0..d - 1).rev() {
            numer[j] = ctx.add(&t_m[j + 1], &ctx.mul(&a, &numer[j + 1]));
        }
        let mut den_inv = ctx.mul(&inv_fact[k - 1], &inv_fact[d - k]);
        if (d - k) % 2 == 1 {
            den_inv = ctx.sub(&ctx.zero(), &den_inv);
        }
        let bump = |acc: &mut Vec<Residue>, scale: &Residue| {
            if acc.is_empty() {
                acc.resize(d, ctx.zero());
            }
            for (slot, nj) in acc.iter_mut().zip(&numer) {
                *slot = ctx.add(slot, &ctx.mul(scale, nj));
            }
        };
        for (i, c) in op.left.terms() {
            bump(&mut acc_l[*i], &ctx.mul(&ctx.to_mont(c.value()), &den_inv));
        }
        for (i, c) in op.right.terms() {
            bump(&mut acc_r[*i], &ctx.mul(&ctx.to_mont(c.value()), &den_inv));
        }
        bump(&mut acc_o[op.out], &den_inv);
    }

    let materialize = |cols: Vec<Vec<Residue>>| {
        cols.into_iter()
            .map(|acc| {
                let elems =
                    acc.iter().map(|a| field.element_reduced(ctx.from_mont(a))).collect();
                Polynomial::new(field, elems)
            })
            .collect()
    };
    (materialize(acc_l), materialize(acc_r), materialize(acc_o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, LinearCombination};
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn f101() -> Field {
        Field::custom(101).unwrap()
    }

    fn lc(i: usize, field: &Field) -> LinearCombination {
        LinearCombination::wire(i, field)
    }

    /// x·y = z with x, y private inputs.
    fn single_op() -> Circuit {
        let field = f101();
        let mut b = CircuitBuilder::new(&field);
        let x = b.add_private_input("x");
        let y = b.add_private_input("y");
        b.mul(lc(x, &field), lc(y, &field), "z");
        b.build()
    }

    /// a·a = b, then b·a = c.
    fn square_then_mul() -> Circuit {
        let field = f101();
        let mut b = CircuitBuilder::new(&field);
        let a = b.add_private_input("a");
        let sq = b.mul(lc(a, &field), lc(a, &field), "b");
        b.mul(lc(sq, &field), lc(a, &field), "c");
        b.build()
    }

    #[test]
    fn single_op_target_and_constant_polys() {
        let field = f101();
        let qap = circuit_to_qap(&single_op()).unwrap();
        assert_eq!(qap.degree(), 1);
        // t(x) = x - 1
        assert_eq!(qap.target().coeffs(), &[field.from_i64(-1), field.one()]);
        // wire polynomials are constants: l_x = 1, r_y = 1, o_z = 1, rest 0
        assert_eq!(qap.l_poly(1).coeffs(), &[field.one()]);
        assert!(qap.l_poly(2).is_zero());
        assert_eq!(qap.r_poly(2).coeffs(), &[field.one()]);
        assert_eq!(qap.o_poly(3).coeffs(), &[field.one()]);
        assert!(qap.o_poly(1).is_zero());
    }

    #[test]
    fn square_then_mul_interpolation_hand_check() {
        let field = f101();
        let qap = circuit_to_qap(&square_then_mul()).unwrap();
        assert_eq!(qap.degree(), 2);
        // a appears on the left only in constraint 1: l_a(1) = 1, l_a(2) = 0
        // => l_a(x) = 2 - x
        assert_eq!(qap.l_poly(1).coeffs(), &[field.from_u64(2), field.from_i64(-1)]);
        // a is on the right of both constraints => r_a = 1
        assert_eq!(qap.r_poly(1).coeffs(), &[field.one()]);
        // b: out of constraint 1, left of constraint 2
        assert_eq!(qap.o_poly(2).coeffs(), &[field.from_u64(2), field.from_i64(-1)]);
        assert_eq!(qap.l_poly(2).coeffs(), &[field.from_i64(-1), field.one()]);
    }

    #[test]
    fn honest_witness_divides_corrupted_does_not() {
        let field = f101();
        let circuit = square_then_mul();
        let qap = circuit_to_qap(&circuit).unwrap();
        let w = circuit.compute_witness(&[(1, field.from_u64(3))]).unwrap();
        // a=3 => b=9, c=27
        assert_eq!(w.values()[3], field.from_u64(27));
        let asm = qap.assemble(w.values());
        assert!(asm.is_satisfied());
        assert_eq!(asm.l.mul(&asm.r).sub(&asm.o), asm.h.mul(qap.target()));

        let mut bad = w.values().to_vec();
        bad[3] = field.from_u64(28);
        let asm = qap.assemble(&bad);
        assert!(!asm.is_satisfied());
        assert_eq!(circuit.first_violated(&bad), Some(1));
    }

    #[test]
    fn wire_polynomials_interpolate_circuit_coefficients() {
        // l_i(k+1) must reproduce wire i's coefficient in constraint k
        let field = f101();
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for _ in 0..25 {
            let circuit = crate::circuit::random_circuit(&field, &mut rng, 8);
            let qap = circuit_to_qap(&circuit).unwrap();
            for (k0, op) in circuit.ops().iter().enumerate() {
                let x = field.from_u64(k0 as u64 + 1);
                for i in 0..circuit.num_wires() {
                    let coeff_of = |terms: &LinearCombination| {
                        terms
                            .terms()
                            .iter()
                            .find(|(j, _)| *j == i)
                            .map(|(_, c)| c.clone())
                            .unwrap_or_else(|| field.zero())
                    };
                    assert_eq!(qap.l_poly(i).eval(&x), coeff_of(&op.left));
                    assert_eq!(qap.r_poly(i).eval(&x), coeff_of(&op.right));
                    let out_coeff =
                        if op.out == i { field.one() } else { field.zero() };
                    assert_eq!(qap.o_poly(i).eval(&x), out_coeff);
                }
            }
        }
    }

    #[test]
    fn interpolation_kernels_agree() {
        // the fixed-width walk must match the portable one coefficient for
        // coefficient; fields of several widths exercise different carries
        use crate::field::ProfileTag;
        use crate::pairing::{ORACLE_SUBGROUP_ORDER, REALISTIC_SUBGROUP_ORDER};
        let fields = [
            f101(),
            Field::new(ORACLE_SUBGROUP_ORDER.parse().unwrap(), ProfileTag::Oracle).unwrap(),
            Field::new(REALISTIC_SUBGROUP_ORDER.parse().unwrap(), ProfileTag::Realistic).unwrap(),
        ];
        for (fi, field) in fields.iter().enumerate() {
            let mut rng = ChaCha20Rng::seed_from_u64(77 + fi as u64);
            for _ in 0..8 {
                let circuit = crate::circuit::random_circuit(field, &mut rng, 9);
                let t = Polynomial::vanishing(field, circuit.num_constraints());
                let ctx = MontCtx::new(field.modulus()).unwrap();
                let (gl, gr, go) = interpolate_generic(&circuit, field, &t);
                let (ml, mr, mo) = interpolate_mont(&circuit, field, &t, &ctx);
                assert_eq!(gl, ml);
                assert_eq!(gr, mr);
                assert_eq!(go, mo);
            }
        }
    }

    #[test]
    fn divisibility_iff_constraints_hold() {
        let field = f101();
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let mut saw_satisfied = false;
        let mut saw_violated = false;
        for _ in 0..40 {
            let circuit = crate::circuit::random_circuit(&field, &mut rng, 8);
            let qap = circuit_to_qap(&circuit).unwrap();
            let inputs: Vec<(usize, FieldElement)> = (1..circuit.num_wires())
                .filter(|&i| {
                    matches!(
                        circuit.wire_role(i),
                        crate::circuit::WireRole::PublicInput
                            | crate::circuit::WireRole::PrivateInput
                    )
                })
                .map(|i| (i, field.random(&mut rng)))
                .collect();
            let mut values = circuit.compute_witness(&inputs).unwrap().values().to_vec();
            if rng.gen_bool(0.5) && !circuit.ops().is_empty() {
                // corrupt one constraint output
                let k = (rng.next_u32() as usize) % circuit.ops().len();
                let out = circuit.ops()[k].out;
                values[out] = &values[out] + &field.one();
            }
            let brute = circuit.first_violated(&values).is_none();
            let divisible = qap.assemble(&values).is_satisfied();
            assert_eq!(brute, divisible);
            saw_satisfied |= brute;
            saw_violated |= !brute;
        }
        assert!(saw_satisfied && saw_violated, "population must cover both outcomes");
    }

    #[test]
    fn degree_at_or_above_modulus_rejected() {
        let field = Field::custom(11).unwrap();
        let mut b = CircuitBuilder::new(&field);
        let x = b.add_private_input("x");
        let mut cur = lc(x, &field);
        for i in 0..11 {
            let w = b.mul(cur.clone(), cur.clone(), &format!("w{i}"));
            cur = lc(w, &field);
        }
        let circuit = b.build();
        assert_eq!(
            circuit_to_qap(&circuit).unwrap_err(),
            CircuitError::FieldTooSmall { needed: 11 }
        );
    }

    #[test]
    fn qap_export_mentions_circuit_id() {
        let qap = circuit_to_qap(&single_op()).unwrap();
        let text = qap.export_text();
        assert!(text.starts_with("zkpol-qap v1\n"));
        assert!(text.contains(&hex::encode(qap.circuit_id())));
    }
}
