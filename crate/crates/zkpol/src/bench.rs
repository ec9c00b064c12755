//! Wall-clock timing of the proof pipeline, phase by phase.
//!
//! Each iteration runs the five phases in dependency order on the
//! proof-of-location circuit for one privacy level: flatten the
//! computation into a quadratic program, run the trusted setup, evaluate
//! the witness, generate the proof, verify it. Means are reported per
//! phase together with each phase's share of the total.

use std::time::Instant;

use rand::RngCore;

use crate::circuit::{build_location_circuit, CertificateValues, PrivacyLevel};
use crate::hash::AlgebraicHashParams;
use crate::pairing::PairingEngine;
use crate::protocol::certificate_outputs;
use crate::qap::circuit_to_qap;
use crate::snark::{self, Verdict};

pub const PHASE_NAMES: [&str; 5] = [
    "Computation-to-QAP",
    "Setup",
    "Calculate-witness",
    "Generate-proof",
    "Verify-proof",
];

#[derive(Debug, Clone)]
pub struct PhaseTiming {
    pub name: &'static str,
    pub mean_ms: f64,
    /// Fraction of the per-iteration total, in [0, 1].
    pub share: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub level: PrivacyLevel,
    pub iterations: usize,
    pub constraints: usize,
    pub wires: usize,
    pub phases: Vec<PhaseTiming>,
    pub total_ms: f64,
}

impl BenchReport {
    pub fn phase(&self, name: &str) -> &PhaseTiming {
        self.phases
            .iter()
            .find(|p| p.name == name)
            .expect("phase names are fixed")
    }
}

/// Runs `iterations` full pipeline passes and averages each phase.
pub fn run_bench(
    engine: &PairingEngine,
    hash: &AlgebraicHashParams,
    level: PrivacyLevel,
    iterations: usize,
    rng: &mut impl RngCore,
) -> BenchReport {
    assert!(iterations > 0, "at least one iteration");
    let field = engine.scalar_field();
    let pk_len = engine.point_byte_len();
    let mut sums = [0f64; 5];
    let mut constraints = 0usize;
    let mut wires = 0usize;

    for _ in 0..iterations {
        let t0 = Instant::now();
        let (circuit, layout) = build_location_circuit(level, hash, pk_len);
        let qap = circuit_to_qap(&circuit).expect("field fits the location circuit");
        sums[0] += ms_since(t0);
        constraints = qap.degree();
        wires = qap.num_wires();

        let t1 = Instant::now();
        let (pk, vk) = snark::setup(engine, &qap, rng);
        sums[1] += ms_since(t1);

        // fixed representative certificate; the blinding scalar varies
        let mut pk_bytes = vec![0u8; pk_len];
        rng.fill_bytes(&mut pk_bytes);
        let rand = field.random(rng);
        let cert = CertificateValues {
            pk_bytes: &pk_bytes,
            lon_microdeg: 13_404_954,
            lat_microdeg: 52_520_008,
            rand: &rand,
            time: 1_700_000_000,
        };
        let t2 = Instant::now();
        let witness = circuit
            .compute_witness(&layout.assignments(field, &cert))
            .expect("certificate assignment satisfies the circuit");
        sums[2] += ms_since(t2);

        let t3 = Instant::now();
        let proof = snark::prove(engine, &qap, &pk, &witness).expect("witness satisfies");
        sums[3] += ms_since(t3);

        let (hr, dig) = certificate_outputs(hash, &cert);
        let mut params = crate::circuit::PublicParams::default();
        if level.reveals_pk() {
            params.pk_bytes = Some(pk_bytes.clone());
        }
        if level.reveals_coordinates() {
            params.lon_microdeg = Some(cert.lon_microdeg);
            params.lat_microdeg = Some(cert.lat_microdeg);
        }
        if level.reveals_time() {
            params.time = Some(cert.time);
        }
        let publics = layout
            .public_values(field, &params, &hr, &dig)
            .expect("params match level");
        let t4 = Instant::now();
        let verdict = snark::verify(engine, &vk, &publics, &proof).expect("well-formed proof");
        sums[4] += ms_since(t4);
        assert_eq!(verdict, Verdict::Accept, "benchmark proof must verify");
    }

    let means: Vec<f64> = sums.iter().map(|s| s / iterations as f64).collect();
    let total: f64 = means.iter().sum();
    let phases = PHASE_NAMES
        .iter()
        .zip(&means)
        .map(|(name, mean)| PhaseTiming {
            name,
            mean_ms: *mean,
            share: if total > 0.0 { mean / total } else { 0.0 },
        })
        .collect();
    BenchReport { level, iterations, constraints, wires, phases, total_ms: total }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Human-readable table.
pub fn render_report(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "level {} | {} constraints, {} wires | {} iteration(s)\n",
        report.level.number(),
        report.constraints,
        report.wires,
        report.iterations
    ));
    out.push_str(&format!("{:<22}{:>12}{:>9}\n", "phase", "mean (ms)", "share"));
    for p in &report.phases {
        out.push_str(&format!(
            "{:<22}{:>12.3}{:>8.1}%\n",
            p.name,
            p.mean_ms,
            p.share * 100.0
        ));
    }
    out.push_str(&format!("{:<22}{:>12.3}{:>9}\n", "total", report.total_ms, ""));
    out
}

/// Machine-readable lines: `level  phase  mean_ms  share`.
pub fn render_tsv(report: &BenchReport) -> String {
    let mut out = String::from("level\tphase\tmean_ms\tshare\n");
    for p in &report.phases {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\n",
            report.level.number(),
            p.name,
            p.mean_ms,
            p.share
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn oracle_bench_reports_all_phases() {
        let engine = PairingEngine::oracle();
        let field = engine.scalar_field().clone();
        let hash = AlgebraicHashParams::derive(&field, 4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let report = run_bench(&engine, &hash, PrivacyLevel::L2, 1, &mut rng);
        assert_eq!(report.phases.len(), 5);
        assert_eq!(report.constraints, 99);
        let share_sum: f64 = report.phases.iter().map(|p| p.share).sum();
        assert!((share_sum - 1.0).abs() < 1e-9);
        assert!(report.phases.iter().all(|p| p.mean_ms >= 0.0));
        assert!(report.total_ms > 0.0);
        // rendering includes every phase name
        let table = render_report(&report);
        let tsv = render_tsv(&report);
        for name in PHASE_NAMES {
            assert!(table.contains(name), "table missing {name}");
            assert!(tsv.contains(name), "tsv missing {name}");
        }
    }
}
