//! Line-oriented scenario scripts and their deterministic runner.
//!
//! A script declares actors, then replays timed events against a fresh
//! ledger. Every event appends one tab-separated log line; with a fixed
//! (script, seed, profile) triple the whole log is byte-identical across
//! runs, which makes transcripts diffable fixtures.
//!
//! ```text
//! AP      <name> <lon_deg> <lat_deg> <range_m>
//! USER    <name>
//! SERVER  <name>
//! AT <t> REQUEST_CERT <user> <ap> <lon_deg> <lat_deg> [TAMPER ENVELOPE | TAMPER SPOOF_PK <victim>] [EXPECT <code>]
//! AT <t> MINE <ap>
//! AT <t> FORGE_CERT <user> <lon_deg> <lat_deg>
//! AT <t> REQUEST_SERVICE <user> <server> <level 1-4> <ind> [TAMPER MUTATE_PROOF] [EXPECT <code>]
//! ```
//!
//! `EXPECT` compares against the outcome code (`OK` or a rejection code);
//! mismatches are counted, not fatal. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::circuit::PrivacyLevel;
use crate::ledger::Ledger;
use crate::protocol::{
    certificate_outputs, seal_cert_request, AccessPoint, CertRequestBody, Certificate,
    GeoCoordinate, ProtocolSuite, Rejection, Server, UserAgent,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum CertTamper {
    None,
    Envelope,
    SpoofPk(String),
}

#[derive(Debug, Clone, PartialEq)]
enum EventKind {
    RequestCert {
        user: String,
        ap: String,
        position: GeoCoordinate,
        tamper: CertTamper,
    },
    Mine {
        ap: String,
    },
    ForgeCert {
        user: String,
        position: GeoCoordinate,
    },
    RequestService {
        user: String,
        server: String,
        level: PrivacyLevel,
        ind: u64,
        mutate_proof: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Event {
    line: usize,
    time: u64,
    kind: EventKind,
    expect: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct Script {
    aps: Vec<(String, GeoCoordinate, f64)>,
    users: Vec<String>,
    servers: Vec<String>,
    events: Vec<Event>,
}

fn parse_coordinate(line: usize, lon: &str, lat: &str) -> Result<GeoCoordinate, ScenarioError> {
    let lon: f64 = lon
        .parse()
        .map_err(|_| parse_err(line, format!("bad longitude {lon:?}")))?;
    let lat: f64 = lat
        .parse()
        .map_err(|_| parse_err(line, format!("bad latitude {lat:?}")))?;
    GeoCoordinate::from_degrees(lat, lon)
        .map_err(|e| parse_err(line, format!("coordinate out of bounds: {e}")))
}

fn parse_script(source: &str) -> Result<Script, ScenarioError> {
    let mut script = Script {
        aps: Vec::new(),
        users: Vec::new(),
        servers: Vec::new(),
        events: Vec::new(),
    };
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let tok: Vec<&str> = text.split_whitespace().collect();
        match tok[0] {
            "AP" => {
                if tok.len() != 5 {
                    return Err(parse_err(line, "AP takes: name lon lat range_m"));
                }
                let pos = parse_coordinate(line, tok[2], tok[3])?;
                let range: f64 = tok[4]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad range {:?}", tok[4])))?;
                if script.aps.iter().any(|(n, _, _)| n == tok[1]) {
                    return Err(parse_err(line, format!("duplicate AP {:?}", tok[1])));
                }
                script.aps.push((tok[1].to_string(), pos, range));
            }
            "USER" => {
                if tok.len() != 2 {
                    return Err(parse_err(line, "USER takes: name"));
                }
                if script.users.iter().any(|n| n == tok[1]) {
                    return Err(parse_err(line, format!("duplicate USER {:?}", tok[1])));
                }
                script.users.push(tok[1].to_string());
            }
            "SERVER" => {
                if tok.len() != 2 {
                    return Err(parse_err(line, "SERVER takes: name"));
                }
                if script.servers.iter().any(|n| n == tok[1]) {
                    return Err(parse_err(line, format!("duplicate SERVER {:?}", tok[1])));
                }
                script.servers.push(tok[1].to_string());
            }
            "AT" => {
                if tok.len() < 3 {
                    return Err(parse_err(line, "AT takes: time event …"));
                }
                let time: u64 = tok[1]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad time {:?}", tok[1])))?;
                let (kind, rest) = parse_event(line, &tok[2..])?;
                let expect = parse_expect(line, rest)?;
                script.events.push(Event { line, time, kind, expect });
            }
            other => return Err(parse_err(line, format!("unknown directive {other:?}"))),
        }
    }
    Ok(script)
}

/// Parses one event starting at its keyword; returns the trailing tokens
/// (either empty or an EXPECT clause).
fn parse_event<'a>(
    line: usize,
    tok: &'a [&'a str],
) -> Result<(EventKind, &'a [&'a str]), ScenarioError> {
    match tok[0] {
        "REQUEST_CERT" => {
            if tok.len() < 5 {
                return Err(parse_err(line, "REQUEST_CERT takes: user ap lon lat …"));
            }
            let position = parse_coordinate(line, tok[3], tok[4])?;
            let mut rest = &tok[5..];
            let mut tamper = CertTamper::None;
            if rest.first() == Some(&"TAMPER") {
                match rest.get(1) {
                    Some(&"ENVELOPE") => {
                        tamper = CertTamper::Envelope;
                        rest = &rest[2..];
                    }
                    Some(&"SPOOF_PK") => {
                        let victim = rest
                            .get(2)
                            .ok_or_else(|| parse_err(line, "SPOOF_PK takes a victim user"))?;
                        tamper = CertTamper::SpoofPk(victim.to_string());
                        rest = &rest[3..];
                    }
                    other => {
                        return Err(parse_err(line, format!("unknown tamper mode {other:?}")))
                    }
                }
            }
            Ok((
                EventKind::RequestCert {
                    user: tok[1].to_string(),
                    ap: tok[2].to_string(),
                    position,
                    tamper,
                },
                rest,
            ))
        }
        "MINE" => {
            if tok.len() < 2 {
                return Err(parse_err(line, "MINE takes: ap"));
            }
            Ok((EventKind::Mine { ap: tok[1].to_string() }, &tok[2..]))
        }
        "FORGE_CERT" => {
            if tok.len() < 4 {
                return Err(parse_err(line, "FORGE_CERT takes: user lon lat"));
            }
            let position = parse_coordinate(line, tok[2], tok[3])?;
            Ok((
                EventKind::ForgeCert { user: tok[1].to_string(), position },
                &tok[4..],
            ))
        }
        "REQUEST_SERVICE" => {
            if tok.len() < 5 {
                return Err(parse_err(
                    line,
                    "REQUEST_SERVICE takes: user server level ind …",
                ));
            }
            let level_txt = tok[3].trim_start_matches('L');
            let level_num: u8 = level_txt
                .parse()
                .map_err(|_| parse_err(line, format!("bad level {:?}", tok[3])))?;
            let level = PrivacyLevel::from_number(level_num)
                .map_err(|_| parse_err(line, format!("bad level {:?}", tok[3])))?;
            let ind: u64 = tok[4]
                .parse()
                .map_err(|_| parse_err(line, format!("bad service indicator {:?}", tok[4])))?;
            let mut rest = &tok[5..];
            let mut mutate_proof = false;
            if rest.first() == Some(&"TAMPER") {
                if rest.get(1) != Some(&"MUTATE_PROOF") {
                    return Err(parse_err(line, "service tamper mode must be MUTATE_PROOF"));
                }
                mutate_proof = true;
                rest = &rest[2..];
            }
            Ok((
                EventKind::RequestService {
                    user: tok[1].to_string(),
                    server: tok[2].to_string(),
                    level,
                    ind,
                    mutate_proof,
                },
                rest,
            ))
        }
        other => Err(parse_err(line, format!("unknown event {other:?}"))),
    }
}

const KNOWN_CODES: [&str; 9] = [
    "OK",
    "OPEN_FAILED",
    "TAMPERED_REQUEST",
    "OUT_OF_RANGE",
    "TAMPERED_RESPONSE",
    "ALREADY_SERVED",
    "UNKNOWN_DIGEST",
    "INVALID_PROOF",
    "ARITY_MISMATCH",
];

fn parse_expect(line: usize, rest: &[&str]) -> Result<Option<String>, ScenarioError> {
    match rest {
        [] => Ok(None),
        ["EXPECT", code] => {
            if !KNOWN_CODES.contains(code) {
                return Err(parse_err(line, format!("unknown expectation {code:?}")));
            }
            Ok(Some(code.to_string()))
        }
        other => Err(parse_err(line, format!("trailing tokens {other:?}"))),
    }
}

/// Result of a run: the full log, and how the outcomes compared with the
/// script's expectations.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub log: String,
    pub events: usize,
    pub checked: usize,
    pub mismatches: usize,
}

impl ScenarioOutcome {
    pub fn all_matched(&self) -> bool {
        self.mismatches == 0
    }
}

struct Runner<'a> {
    suite: &'a ProtocolSuite,
    ledger: Ledger,
    rng: ChaCha20Rng,
    users: BTreeMap<String, UserAgent>,
    certificates: BTreeMap<String, Certificate>,
    aps: BTreeMap<String, AccessPoint>,
    servers: BTreeMap<String, Server>,
}

impl Runner<'_> {
    fn exec(&mut self, ev: &Event) -> Result<(String, String), ScenarioError> {
        match &ev.kind {
            EventKind::RequestCert { user, ap, position, tamper } => {
                self.request_cert(ev, user, ap, *position, tamper)
            }
            EventKind::Mine { ap } => {
                let ap = self
                    .aps
                    .get(ap)
                    .ok_or_else(|| parse_err(ev.line, format!("unknown AP {ap:?}")))?;
                let block = ap.mine(self.suite, &mut self.ledger, ev.time, &mut self.rng);
                let detail = format!(
                    "block={} entries={} hash={}",
                    block.index,
                    block.entries.len(),
                    hex::encode(&block.hash[..8])
                );
                Ok(("OK".into(), detail))
            }
            EventKind::ForgeCert { user, position } => {
                let agent = self
                    .users
                    .get(user)
                    .ok_or_else(|| parse_err(ev.line, format!("unknown USER {user:?}")))?;
                let rand = self.suite.field().random(&mut self.rng);
                let pk_user = agent.public_key_bytes(self.suite.engine());
                let cert = Certificate {
                    pk_user: pk_user.clone(),
                    position: *position,
                    rand: rand.clone(),
                    time: ev.time,
                    dig: {
                        let values = crate::circuit::CertificateValues {
                            pk_bytes: &pk_user,
                            lon_microdeg: position.lon_microdeg,
                            lat_microdeg: position.lat_microdeg,
                            rand: &rand,
                            time: ev.time,
                        };
                        certificate_outputs(self.suite.hash(), &values).1
                    },
                };
                let detail = format!("dig={}", hex::encode(cert.dig.to_bytes()));
                self.certificates.insert(user.clone(), cert);
                Ok(("OK".into(), detail))
            }
            EventKind::RequestService { user, server, level, ind, mutate_proof } => {
                self.request_service(ev, user, server, *level, *ind, *mutate_proof)
            }
        }
    }

    fn request_cert(
        &mut self,
        ev: &Event,
        user: &str,
        ap: &str,
        position: GeoCoordinate,
        tamper: &CertTamper,
    ) -> Result<(String, String), ScenarioError> {
        let suite = self.suite;
        let engine = suite.engine();
        let agent = self
            .users
            .get(user)
            .ok_or_else(|| parse_err(ev.line, format!("unknown USER {user:?}")))?
            .clone();
        let ap = self
            .aps
            .get(ap)
            .ok_or_else(|| parse_err(ev.line, format!("unknown AP {ap:?}")))?
            .clone();

        let mut envelope = match tamper {
            CertTamper::SpoofPk(victim) => {
                let victim = self
                    .users
                    .get(victim)
                    .ok_or_else(|| parse_err(ev.line, format!("unknown USER {victim:?}")))?;
                let body = CertRequestBody {
                    pk_user: victim.public_key_bytes(engine),
                    lon_microdeg: position.lon_microdeg,
                    lat_microdeg: position.lat_microdeg,
                };
                seal_cert_request(engine, agent.keys(), &body, ap.public_key(), &mut self.rng)
            }
            _ => agent.request_certificate(engine, ap.public_key(), position, &mut self.rng),
        };
        if *tamper == CertTamper::Envelope {
            let mid = envelope.len() / 2;
            envelope[mid] ^= 0x20;
        }

        let response = match ap.issue_certificate(
            suite,
            &mut self.ledger,
            &envelope,
            ev.time,
            &mut self.rng,
        ) {
            Ok(resp) => resp,
            Err(rej) => return Ok((rej.code().into(), format!("{rej}"))),
        };
        match agent.accept_certificate(suite, ap.public_key(), &response) {
            Ok(cert) => {
                let detail = format!("dig={}", hex::encode(cert.dig.to_bytes()));
                self.certificates.insert(user.to_string(), cert);
                Ok(("OK".into(), detail))
            }
            Err(rej) => Ok((rej.code().into(), format!("{rej}"))),
        }
    }

    fn request_service(
        &mut self,
        ev: &Event,
        user: &str,
        server: &str,
        level: PrivacyLevel,
        ind: u64,
        mutate_proof: bool,
    ) -> Result<(String, String), ScenarioError> {
        let suite = self.suite;
        let agent = self
            .users
            .get(user)
            .ok_or_else(|| parse_err(ev.line, format!("unknown USER {user:?}")))?;
        let server = self
            .servers
            .get(server)
            .ok_or_else(|| parse_err(ev.line, format!("unknown SERVER {server:?}")))?
            .clone();
        let cert = self
            .certificates
            .get(user)
            .ok_or_else(|| parse_err(ev.line, format!("user {user:?} holds no certificate")))?;
        let mut request = agent
            .request_service(suite, cert, level, ind)
            .map_err(|e| parse_err(ev.line, format!("request construction failed: {e}")))?;
        if mutate_proof {
            request.proof.h = suite.engine().add(&request.proof.h, suite.engine().generator());
        }
        match server.handle_request(suite, &mut self.ledger, &request) {
            Ok(grant) => Ok((
                "OK".into(),
                format!("granted level={} ind={}", grant.level.number(), grant.ind),
            )),
            Err(rej) => {
                let detail = match &rej {
                    Rejection::InvalidProof(family) => format!("family={}", family.family_name()),
                    other => format!("{other}"),
                };
                Ok((rej.code().into(), detail))
            }
        }
    }
}

/// Parses and replays a script. `label` names the run in the log header.
pub fn run_scenario(
    suite: &ProtocolSuite,
    source: &str,
    label: &str,
    seed: u64,
    difficulty: u32,
) -> Result<ScenarioOutcome, ScenarioError> {
    let script = parse_script(source)?;
    let engine = suite.engine();
    let mut runner = Runner {
        suite,
        ledger: Ledger::new(suite.field(), difficulty),
        rng: ChaCha20Rng::seed_from_u64(seed),
        users: script
            .users
            .iter()
            .map(|n| (n.clone(), UserAgent::new(engine, n)))
            .collect(),
        certificates: BTreeMap::new(),
        aps: script
            .aps
            .iter()
            .map(|(n, pos, range)| (n.clone(), AccessPoint::new(engine, n, *pos, *range)))
            .collect(),
        servers: script
            .servers
            .iter()
            .map(|n| (n.clone(), Server::new(engine, n)))
            .collect(),
    };

    let mut log = String::new();
    writeln!(
        log,
        "# scenario={} seed={} profile={:?} difficulty={}",
        label,
        seed,
        suite.field().tag(),
        difficulty
    )
    .unwrap();
    writeln!(log, "time\tevent\tactor\tcode\tdetail").unwrap();

    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for ev in &script.events {
        let (code, mut detail) = runner.exec(ev)?;
        if let Some(expected) = &ev.expect {
            checked += 1;
            if *expected != code {
                mismatches += 1;
                write!(detail, " [expected {expected}]").unwrap();
            }
        }
        let (kind, actor) = match &ev.kind {
            EventKind::RequestCert { user, ap, .. } => ("REQUEST_CERT", format!("{user}->{ap}")),
            EventKind::Mine { ap } => ("MINE", ap.clone()),
            EventKind::ForgeCert { user, .. } => ("FORGE_CERT", user.clone()),
            EventKind::RequestService { user, server, .. } => {
                ("REQUEST_SERVICE", format!("{user}->{server}"))
            }
        };
        if detail.is_empty() {
            detail.push('-');
        }
        writeln!(log, "{}\t{}\t{}\t{}\t{}", ev.time, kind, actor, code, detail).unwrap();
    }
    // chain self-check closes every run
    let chain = match runner.ledger.validate_chain() {
        Ok(()) => ("OK", format!("blocks={}", runner.ledger.blocks().len())),
        Err(v) => ("VIOLATION", format!("index={} kind={:?}", v.index, v.kind)),
    };
    writeln!(log, "-\tVALIDATE_CHAIN\tledger\t{}\t{}", chain.0, chain.1).unwrap();

    Ok(ScenarioOutcome { log, events: script.events.len(), checked, mismatches })
}

/// The scripts shipped with the binary, by name.
pub fn bundled_scenarios() -> &'static [(&'static str, &'static str)] {
    &[
        ("honest_pcs", include_str!("../scenarios/honest_pcs.scn")),
        ("replay", include_str!("../scenarios/replay.scn")),
        ("tamper_request", include_str!("../scenarios/tamper_request.scn")),
        ("out_of_range", include_str!("../scenarios/out_of_range.scn")),
        ("forged_proof", include_str!("../scenarios/forged_proof.scn")),
        (
            "forged_certificate",
            include_str!("../scenarios/forged_certificate.scn"),
        ),
    ]
}

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    bundled_scenarios()
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
}
