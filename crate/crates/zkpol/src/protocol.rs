//! Certificate issuance and privacy-graded service verification.
//!
//! Three actor kinds cooperate over the ledger:
//!
//! * a **user** asks a nearby access point for a location certificate,
//!   sending a signed, sealed request with their claimed coordinates;
//! * the **access point** checks the signature and the distance to its own
//!   position, then returns a signed certificate carrying a fresh blinding
//!   scalar and posts the certificate digest to the ledger;
//! * a **server** grants a service when the user presents a proof that the
//!   hashes in their request open to a certificate digest confirmed on the
//!   ledger, disclosing only the fields their chosen privacy level allows.
//!
//! Every rejection maps to a stable wire code (`Rejection::code`) so
//! scripted scenarios can assert exact outcomes.

use rand::RngCore;
use thiserror::Error;

use crate::circuit::{
    build_location_circuit, CertificateValues, Circuit, CircuitLayout, PrivacyLevel,
    PublicParams,
};
use crate::field::{Field, FieldElement};
use crate::hash::{bytes_to_elements, AlgebraicHashParams};
use crate::identity::{seal, verify_signature, KeyPair, Signature};
use crate::ledger::{Entry, Ledger};
use crate::pairing::{GroupElement, PairingEngine};
use crate::qap::{circuit_to_qap, QapInstance};
use crate::snark::{self, CheckFamily, Proof, ProvingKey, SnarkError, Verdict, VerificationKey};

/// Metres per degree of latitude, and per degree of longitude at the
/// equator, for the flat-local distance approximation.
const LAT_METERS_PER_DEG: f64 = 110_540.0;
const LON_METERS_PER_DEG: f64 = 111_320.0;

const REQUEST_VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Rejection {
    #[error("envelope could not be opened")]
    OpenFailed,
    #[error("request signature does not verify under the embedded key")]
    TamperedRequest,
    #[error("claimed position outside the access point's coverage")]
    OutOfRange,
    #[error("certificate response failed authentication")]
    TamperedResponse,
    #[error("certificate already spent for this service")]
    AlreadyServed,
    #[error("certificate digest is not confirmed on the ledger")]
    UnknownDigest,
    #[error("proof failed the {} checks", .0.family_name())]
    InvalidProof(CheckFamily),
    #[error("request shape does not match the privacy level's statement")]
    ArityMismatch,
}

impl Rejection {
    /// Stable code for event logs and scenario expectations.
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::OpenFailed => "OPEN_FAILED",
            Rejection::TamperedRequest => "TAMPERED_REQUEST",
            Rejection::OutOfRange => "OUT_OF_RANGE",
            Rejection::TamperedResponse => "TAMPERED_RESPONSE",
            Rejection::AlreadyServed => "ALREADY_SERVED",
            Rejection::UnknownDigest => "UNKNOWN_DIGEST",
            Rejection::InvalidProof(_) => "INVALID_PROOF",
            Rejection::ArityMismatch => "ARITY_MISMATCH",
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("latitude must lie in ±90°, longitude in ±180° (microdegrees)")]
    InvalidCoordinate,
    #[error("artifact set does not cover privacy level {0:?}")]
    MissingLevel(PrivacyLevel),
    #[error("keys belong to a different circuit than this level's layout")]
    MismatchedKeys,
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Snark(#[from] SnarkError),
}

// ── geometry ──

/// Position in integer microdegrees (1 µdeg ≈ 0.11 m of latitude).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeoCoordinate {
    pub lat_microdeg: i64,
    pub lon_microdeg: i64,
}

impl GeoCoordinate {
    pub fn new(lat_microdeg: i64, lon_microdeg: i64) -> Result<Self, ProtocolError> {
        if lat_microdeg.abs() > 90_000_000 || lon_microdeg.abs() > 180_000_000 {
            return Err(ProtocolError::InvalidCoordinate);
        }
        Ok(GeoCoordinate { lat_microdeg, lon_microdeg })
    }

    pub fn from_degrees(lat: f64, lon: f64) -> Result<Self, ProtocolError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(ProtocolError::InvalidCoordinate);
        }
        Self::new((lat * 1e6).round() as i64, (lon * 1e6).round() as i64)
    }
}

/// Equirectangular distance in metres, using `reference`'s latitude for
/// the longitude scale. Good to well under a metre at access-point ranges.
pub fn distance_meters(reference: &GeoCoordinate, other: &GeoCoordinate) -> f64 {
    let lat_ref_rad = reference.lat_microdeg as f64 * 1e-6 * std::f64::consts::PI / 180.0;
    let dx = (other.lon_microdeg - reference.lon_microdeg) as f64
        * 1e-6
        * lat_ref_rad.cos()
        * LON_METERS_PER_DEG;
    let dy = (other.lat_microdeg - reference.lat_microdeg) as f64 * 1e-6 * LAT_METERS_PER_DEG;
    (dx * dx + dy * dy).sqrt()
}

// ── per-level proving artifacts ──

#[derive(Debug, Clone)]
pub struct LevelArtifacts {
    pub circuit: Circuit,
    pub layout: CircuitLayout,
    pub qap: QapInstance,
    pub proving_key: ProvingKey,
    pub verification_key: VerificationKey,
}

/// Everything shared by all actors: the pairing engine, the hash, and one
/// circuit + key pair per privacy level.
#[derive(Debug, Clone)]
pub struct ProtocolSuite {
    engine: PairingEngine,
    hash: AlgebraicHashParams,
    levels: Vec<LevelArtifacts>,
}

impl ProtocolSuite {
    /// Builds circuits for all four levels and runs their trusted setups.
    pub fn generate(
        engine: PairingEngine,
        hash: AlgebraicHashParams,
        rng: &mut impl RngCore,
    ) -> Result<ProtocolSuite, ProtocolError> {
        let pk_len = engine.point_byte_len();
        let mut levels = Vec::with_capacity(4);
        for level in PrivacyLevel::all() {
            let (circuit, layout) = build_location_circuit(level, &hash, pk_len);
            let qap = circuit_to_qap(&circuit)?;
            let (proving_key, verification_key) = snark::setup(&engine, &qap, rng);
            levels.push(LevelArtifacts { circuit, layout, qap, proving_key, verification_key });
        }
        Ok(ProtocolSuite { engine, hash, levels })
    }

    /// Rebuilds the circuits and attaches externally stored keys (must
    /// match the freshly derived circuit ids).
    pub fn with_keys(
        engine: PairingEngine,
        hash: AlgebraicHashParams,
        keys: Vec<(ProvingKey, VerificationKey)>,
    ) -> Result<ProtocolSuite, ProtocolError> {
        if keys.len() != 4 {
            return Err(ProtocolError::MismatchedKeys);
        }
        let pk_len = engine.point_byte_len();
        let mut levels = Vec::with_capacity(4);
        for (level, (proving_key, verification_key)) in PrivacyLevel::all().into_iter().zip(keys)
        {
            let (circuit, layout) = build_location_circuit(level, &hash, pk_len);
            let qap = circuit_to_qap(&circuit)?;
            if proving_key.circuit_id != *qap.circuit_id()
                || verification_key.circuit_id != *qap.circuit_id()
            {
                return Err(ProtocolError::MismatchedKeys);
            }
            levels.push(LevelArtifacts { circuit, layout, qap, proving_key, verification_key });
        }
        Ok(ProtocolSuite { engine, hash, levels })
    }

    pub fn engine(&self) -> &PairingEngine {
        &self.engine
    }

    pub fn hash(&self) -> &AlgebraicHashParams {
        &self.hash
    }

    pub fn field(&self) -> &Field {
        self.engine.scalar_field()
    }

    pub fn level(&self, level: PrivacyLevel) -> &LevelArtifacts {
        &self.levels[(level.number() - 1) as usize]
    }
}

/// The two hash outputs every certificate commits to: `hr = H(rand)` and
/// the digest over the canonical field tuple.
pub fn certificate_outputs(
    hash: &AlgebraicHashParams,
    cert: &CertificateValues<'_>,
) -> (FieldElement, FieldElement) {
    let field = hash.field();
    let hr = hash.hash_field(std::slice::from_ref(cert.rand));
    let mut tuple = bytes_to_elements(field, cert.pk_bytes);
    tuple.extend(bytes_to_elements(field, &cert.lon_microdeg.to_be_bytes()));
    tuple.extend(bytes_to_elements(field, &cert.lat_microdeg.to_be_bytes()));
    tuple.extend(bytes_to_elements(field, &cert.rand.to_bytes()));
    tuple.extend(bytes_to_elements(field, &cert.time.to_be_bytes()));
    (hr, hash.hash_field(&tuple))
}

// ── certificate request (user → access point) ──

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertRequestBody {
    pub pk_user: Vec<u8>,
    pub lon_microdeg: i64,
    pub lat_microdeg: i64,
}

impl CertRequestBody {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.pk_user.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.pk_user);
        out.extend_from_slice(&self.lon_microdeg.to_be_bytes());
        out.extend_from_slice(&self.lat_microdeg.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<(CertRequestBody, usize)> {
        if bytes.len() < 2 {
            return None;
        }
        let pk_len = u16::from_be_bytes(bytes[..2].try_into().unwrap()) as usize;
        let need = 2 + pk_len + 16;
        if bytes.len() < need {
            return None;
        }
        let pk_user = bytes[2..2 + pk_len].to_vec();
        let lon = i64::from_be_bytes(bytes[2 + pk_len..2 + pk_len + 8].try_into().unwrap());
        let lat = i64::from_be_bytes(bytes[2 + pk_len + 8..need].try_into().unwrap());
        Some((CertRequestBody { pk_user, lon_microdeg: lon, lat_microdeg: lat }, need))
    }
}

/// Signs `body` with `signer` and seals body‖signature to the access
/// point. Attack harnesses can pass a body that does not belong to the
/// signer; honest callers use [`UserAgent::request_certificate`].
pub fn seal_cert_request(
    engine: &PairingEngine,
    signer: &KeyPair,
    body: &CertRequestBody,
    ap_pk: &GroupElement,
    rng: &mut impl RngCore,
) -> Vec<u8> {
    let body_bytes = body.to_bytes();
    let sig = signer.sign(engine, &body_bytes);
    let mut plaintext = body_bytes;
    plaintext.extend_from_slice(&sig.to_bytes());
    seal(engine, ap_pk, &plaintext, rng)
}

// ── the certificate itself (access point → user) ──

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub pk_user: Vec<u8>,
    pub position: GeoCoordinate,
    pub rand: FieldElement,
    pub time: u64,
    pub dig: FieldElement,
}

impl Certificate {
    pub fn values(&self) -> CertificateValues<'_> {
        CertificateValues {
            pk_bytes: &self.pk_user,
            lon_microdeg: self.position.lon_microdeg,
            lat_microdeg: self.position.lat_microdeg,
            rand: &self.rand,
            time: self.time,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.pk_user.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.pk_user);
        out.extend_from_slice(&self.position.lon_microdeg.to_be_bytes());
        out.extend_from_slice(&self.position.lat_microdeg.to_be_bytes());
        out.extend_from_slice(&self.rand.to_bytes());
        out.extend_from_slice(&self.time.to_be_bytes());
        out.extend_from_slice(&self.dig.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], field: &Field) -> Option<(Certificate, usize)> {
        if bytes.len() < 2 {
            return None;
        }
        let w = field.byte_len();
        let pk_len = u16::from_be_bytes(bytes[..2].try_into().unwrap()) as usize;
        let need = 2 + pk_len + 8 + 8 + w + 8 + w;
        if bytes.len() < need {
            return None;
        }
        let mut pos = 2;
        let pk_user = bytes[pos..pos + pk_len].to_vec();
        pos += pk_len;
        let lon = i64::from_be_bytes(bytes[pos..pos + 8].try_into().unwrap());
        pos += 8;
        let lat = i64::from_be_bytes(bytes[pos..pos + 8].try_into().unwrap());
        pos += 8;
        let rand = field.element_from_bytes(&bytes[pos..pos + w]).ok()?;
        pos += w;
        let time = u64::from_be_bytes(bytes[pos..pos + 8].try_into().unwrap());
        pos += 8;
        let dig = field.element_from_bytes(&bytes[pos..pos + w]).ok()?;
        pos += w;
        let position = GeoCoordinate { lat_microdeg: lat, lon_microdeg: lon };
        Some((Certificate { pk_user, position, rand, time, dig }, pos))
    }
}

// ── service request (user → server, in the clear) ──

/// What the server sees. Public parameters are carried as their canonical
/// byte encodings, so a transcript of this message is exactly the privacy
/// surface of the chosen level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceRequest {
    pub level: PrivacyLevel,
    pub ind: u64,
    pub hr: FieldElement,
    pub dig: FieldElement,
    pub params: PublicParams,
    pub proof: Proof,
}

impl ServiceRequest {
    pub fn to_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        let mut out = vec![REQUEST_VERSION, self.level.number()];
        out.extend_from_slice(&self.ind.to_be_bytes());
        out.extend_from_slice(&self.hr.to_bytes());
        out.extend_from_slice(&self.dig.to_bytes());
        let mut mask = 0u8;
        if self.params.pk_bytes.is_some() {
            mask |= 1;
        }
        if self.params.lon_microdeg.is_some() {
            mask |= 2;
        }
        if self.params.lat_microdeg.is_some() {
            mask |= 4;
        }
        if self.params.time.is_some() {
            mask |= 8;
        }
        out.push(mask);
        if let Some(pk) = &self.params.pk_bytes {
            out.extend_from_slice(&(pk.len() as u16).to_be_bytes());
            out.extend_from_slice(pk);
        }
        if let Some(lon) = self.params.lon_microdeg {
            out.extend_from_slice(&lon.to_be_bytes());
        }
        if let Some(lat) = self.params.lat_microdeg {
            out.extend_from_slice(&lat.to_be_bytes());
        }
        if let Some(time) = self.params.time {
            out.extend_from_slice(&time.to_be_bytes());
        }
        out.extend_from_slice(&self.proof.circuit_id);
        out.extend_from_slice(&self.proof.to_bytes(engine));
        out
    }

    pub fn from_bytes(bytes: &[u8], engine: &PairingEngine) -> Option<ServiceRequest> {
        let field = engine.scalar_field();
        let w = field.byte_len();
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Option<&[u8]> {
            if *pos + n > bytes.len() {
                return None;
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Some(s)
        };
        if take(&mut pos, 1)?[0] != REQUEST_VERSION {
            return None;
        }
        let level = PrivacyLevel::from_number(take(&mut pos, 1)?[0]).ok()?;
        let ind = u64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let hr = field.element_from_bytes(take(&mut pos, w)?).ok()?;
        let dig = field.element_from_bytes(take(&mut pos, w)?).ok()?;
        let mask = take(&mut pos, 1)?[0];
        let mut params = PublicParams::default();
        if mask & 1 != 0 {
            let len = u16::from_be_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
            params.pk_bytes = Some(take(&mut pos, len)?.to_vec());
        }
        if mask & 2 != 0 {
            params.lon_microdeg =
                Some(i64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        if mask & 4 != 0 {
            params.lat_microdeg =
                Some(i64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        if mask & 8 != 0 {
            params.time = Some(u64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        let circuit_id: [u8; 32] = take(&mut pos, 32)?.try_into().unwrap();
        let point_len = engine.point_byte_len();
        let mut points = Vec::with_capacity(8);
        for _ in 0..8 {
            points.push(engine.point_from_bytes(take(&mut pos, point_len)?).ok()?);
        }
        if pos != bytes.len() {
            return None;
        }
        let proof = Proof {
            circuit_id,
            l: points[0].clone(),
            l_alpha: points[1].clone(),
            r: points[2].clone(),
            r_alpha: points[3].clone(),
            o: points[4].clone(),
            o_alpha: points[5].clone(),
            z: points[6].clone(),
            h: points[7].clone(),
        };
        Some(ServiceRequest { level, ind, hr, dig, params, proof })
    }
}

/// Issued when the server accepts a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grant {
    pub ind: u64,
    pub level: PrivacyLevel,
}

// ── actors ──

#[derive(Debug, Clone)]
pub struct UserAgent {
    pub name: String,
    keys: KeyPair,
}

impl UserAgent {
    /// Deterministic identity derived from the name, so scripted runs are
    /// reproducible byte for byte.
    pub fn new(engine: &PairingEngine, name: &str) -> UserAgent {
        let keys = crate::identity::keypair_from_tag(engine, format!("user:{name}").as_bytes());
        UserAgent { name: name.to_string(), keys }
    }

    pub fn public_key_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        self.keys.public_key_bytes(engine)
    }

    pub fn keys(&self) -> &KeyPair {
        &self.keys
    }

    /// Builds the sealed, signed certificate request for a claimed
    /// position.
    pub fn request_certificate(
        &self,
        engine: &PairingEngine,
        ap_pk: &GroupElement,
        claimed: GeoCoordinate,
        rng: &mut impl RngCore,
    ) -> Vec<u8> {
        let body = CertRequestBody {
            pk_user: self.public_key_bytes(engine),
            lon_microdeg: claimed.lon_microdeg,
            lat_microdeg: claimed.lat_microdeg,
        };
        seal_cert_request(engine, &self.keys, &body, ap_pk, rng)
    }

    /// Opens and authenticates the access point's response. Every failure
    /// collapses to `TamperedResponse`.
    pub fn accept_certificate(
        &self,
        suite: &ProtocolSuite,
        ap_pk: &GroupElement,
        envelope: &[u8],
    ) -> Result<Certificate, Rejection> {
        let engine = suite.engine();
        let plaintext = self
            .keys
            .open(engine, envelope)
            .map_err(|_| Rejection::TamperedResponse)?;
        let (cert, used) = Certificate::from_bytes(&plaintext, suite.field())
            .ok_or(Rejection::TamperedResponse)?;
        let sig = Signature::from_bytes(engine, &plaintext[used..])
            .map_err(|_| Rejection::TamperedResponse)?;
        if !verify_signature(engine, ap_pk, &plaintext[..used], &sig) {
            return Err(Rejection::TamperedResponse);
        }
        if cert.pk_user != self.public_key_bytes(engine) {
            return Err(Rejection::TamperedResponse);
        }
        // the digest must open to the certified tuple
        let (_, dig) = certificate_outputs(suite.hash(), &cert.values());
        if dig != cert.dig {
            return Err(Rejection::TamperedResponse);
        }
        Ok(cert)
    }

    /// Produces the level-`level` service request: witness, proof, and the
    /// disclosed parameters. Deterministic in (certificate, level, ind).
    pub fn request_service(
        &self,
        suite: &ProtocolSuite,
        cert: &Certificate,
        level: PrivacyLevel,
        ind: u64,
    ) -> Result<ServiceRequest, ProtocolError> {
        let art = suite.level(level);
        let field = suite.field();
        let witness = art
            .circuit
            .compute_witness(&art.layout.assignments(field, &cert.values()))?;
        let hr = witness.value(art.layout.hr_wire).clone();
        let dig = witness.value(art.layout.dig_wire).clone();
        let proof = snark::prove(suite.engine(), &art.qap, &art.proving_key, &witness)?;
        let mut params = PublicParams::default();
        if level.reveals_pk() {
            params.pk_bytes = Some(cert.pk_user.clone());
        }
        if level.reveals_coordinates() {
            params.lon_microdeg = Some(cert.position.lon_microdeg);
            params.lat_microdeg = Some(cert.position.lat_microdeg);
        }
        if level.reveals_time() {
            params.time = Some(cert.time);
        }
        Ok(ServiceRequest { level, ind, hr, dig, params, proof })
    }
}

#[derive(Debug, Clone)]
pub struct AccessPoint {
    pub name: String,
    pub position: GeoCoordinate,
    pub range_m: f64,
    keys: KeyPair,
}

impl AccessPoint {
    pub fn new(
        engine: &PairingEngine,
        name: &str,
        position: GeoCoordinate,
        range_m: f64,
    ) -> AccessPoint {
        let keys = crate::identity::keypair_from_tag(engine, format!("ap:{name}").as_bytes());
        AccessPoint { name: name.to_string(), position, range_m, keys }
    }

    pub fn public_key(&self) -> &GroupElement {
        self.keys.public_key()
    }

    pub fn public_key_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        self.keys.public_key_bytes(engine)
    }

    /// Handles one sealed certificate request. On success the certificate
    /// digest is queued on the ledger and the sealed response returned.
    ///
    /// Check order: envelope, then signature under the embedded key, then
    /// the coverage distance (boundary inclusive).
    pub fn issue_certificate(
        &self,
        suite: &ProtocolSuite,
        ledger: &mut Ledger,
        envelope: &[u8],
        now: u64,
        rng: &mut impl RngCore,
    ) -> Result<Vec<u8>, Rejection> {
        let engine = suite.engine();
        let plaintext = self
            .keys
            .open(engine, envelope)
            .map_err(|_| Rejection::OpenFailed)?;
        let (body, used) =
            CertRequestBody::from_bytes(&plaintext).ok_or(Rejection::TamperedRequest)?;
        let sig = Signature::from_bytes(engine, &plaintext[used..])
            .map_err(|_| Rejection::TamperedRequest)?;
        let pk_user = engine
            .point_from_bytes(&body.pk_user)
            .map_err(|_| Rejection::TamperedRequest)?;
        if !verify_signature(engine, &pk_user, &plaintext[..used], &sig) {
            return Err(Rejection::TamperedRequest);
        }
        let claimed = GeoCoordinate::new(body.lat_microdeg, body.lon_microdeg)
            .map_err(|_| Rejection::TamperedRequest)?;
        if distance_meters(&self.position, &claimed) > self.range_m {
            return Err(Rejection::OutOfRange);
        }

        let rand = suite.field().random(rng);
        let cert_values = CertificateValues {
            pk_bytes: &body.pk_user,
            lon_microdeg: claimed.lon_microdeg,
            lat_microdeg: claimed.lat_microdeg,
            rand: &rand,
            time: now,
        };
        let (_, dig) = certificate_outputs(suite.hash(), &cert_values);
        let cert = Certificate {
            pk_user: body.pk_user.clone(),
            position: claimed,
            rand,
            time: now,
            dig: dig.clone(),
        };
        ledger
            .submit_entry(Entry::Digest(dig))
            .expect("digest entries are never refused");
        let cert_bytes = cert.to_bytes();
        let ap_sig = self.keys.sign(engine, &cert_bytes);
        let mut response = cert_bytes;
        response.extend_from_slice(&ap_sig.to_bytes());
        Ok(seal(engine, &pk_user, &response, rng))
    }

    /// Mines all pending ledger entries into a block.
    pub fn mine<'l>(
        &self,
        suite: &ProtocolSuite,
        ledger: &'l mut Ledger,
        now: u64,
        rng: &mut impl RngCore,
    ) -> &'l crate::ledger::Block {
        ledger.mine_block(&self.public_key_bytes(suite.engine()), rng, now)
    }
}

#[derive(Debug, Clone)]
pub struct Server {
    pub name: String,
    keys: KeyPair,
}

impl Server {
    pub fn new(engine: &PairingEngine, name: &str) -> Server {
        let keys = crate::identity::keypair_from_tag(engine, format!("server:{name}").as_bytes());
        Server { name: name.to_string(), keys }
    }

    pub fn public_key_bytes(&self, engine: &PairingEngine) -> Vec<u8> {
        self.keys.public_key_bytes(engine)
    }

    /// Decides one service request.
    ///
    /// Check order: spent certificate (pending or mined record), digest
    /// confirmation, then the proof. On acceptance the spend record is
    /// queued before the grant is returned, so an identical replay fails
    /// even before the record is mined.
    pub fn handle_request(
        &self,
        suite: &ProtocolSuite,
        ledger: &mut Ledger,
        request: &ServiceRequest,
    ) -> Result<Grant, Rejection> {
        let engine = suite.engine();
        let art = suite.level(request.level);
        let record = Entry::ServiceRecord {
            pk_server: self.public_key_bytes(engine),
            ind: request.ind,
            hr: request.hr.clone(),
        };
        if ledger.record_present(&record) {
            return Err(Rejection::AlreadyServed);
        }
        if !ledger.contains_digest(&request.dig) {
            return Err(Rejection::UnknownDigest);
        }
        let publics = art
            .layout
            .public_values(suite.field(), &request.params, &request.hr, &request.dig)
            .map_err(|_| Rejection::ArityMismatch)?;
        match snark::verify(engine, &art.verification_key, &publics, &request.proof) {
            Ok(Verdict::Accept) => {}
            Ok(Verdict::Reject(family)) => return Err(Rejection::InvalidProof(family)),
            // structural failures: wrong arity, foreign circuit id, or
            // out-of-subgroup points — the request doesn't fit the statement
            Err(_) => return Err(Rejection::ArityMismatch),
        }
        ledger
            .submit_entry(record)
            .map_err(|_| Rejection::AlreadyServed)?;
        Ok(Grant { ind: request.ind, level: request.level })
    }
}
