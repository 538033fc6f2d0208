//! Single-field corruption table for the verifier.
//!
//! Each armored field is corrupted on the clearnet side, the onion side, or
//! both, either by editing the text in place (signature left alone) or by
//! re-signing the altered descriptor. The expected verdicts below were worked
//! out by hand from the check order and severity rules, not by running the
//! verifier.

use base64::Engine;
use chrono::Duration;
use onionbind::clock::{format_rfc3339, parse_rfc3339, FixedClock, Timestamp};
use onionbind::descriptor::{
    build_descriptor, sign_descriptor, BindingDescriptor, SignedBindingDescriptor, WELL_KNOWN_PATH,
};
use onionbind::onionid::{generate_identity, Fingerprint, ServiceIdentity};
use onionbind::simnet::{gateway_host, AdversaryHook, Channel, SimNet};
use onionbind::trust::{OwnerTrust, TrustStore};
use onionbind::verifier::{verify_pair, Verdict, VerificationReport, VerifyOptions};
use onionbind::Signer;
use sha2::{Digest, Sha256};
use std::sync::Arc;

pub const CLEARNET_HOST: &str = "site.example";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Version,
    Clearnet,
    Onion,
    Issued,
    Expires,
    Signer,
    TlsFingerprint,
    SignerKey,
    Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Clearnet,
    Onion,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Text edited, original signature kept.
    Edited,
    /// Altered descriptor signed again. Payload fields are re-signed by the
    /// legitimate signer, except `Signer`, `SignerKey` and `Signature`, which
    /// only an attacker would re-sign.
    Resigned,
}

use Verdict::{
    AddressKeyMismatch as Akm, Authentic as Auth, BadSignature as Bad, Expired as Exp, Mismatch as Mis,
    Missing as Gone, SelfConsistentUntrusted as Scu,
};

/// Columns: Edited on clearnet, onion, both; then Resigned on the same.
pub const EXPECTED: [(Field, [Verdict; 6]); 9] = [
    (Field::Version, [Gone, Gone, Gone, Gone, Gone, Gone]),
    (Field::Clearnet, [Bad, Bad, Bad, Mis, Mis, Mis]),
    (Field::Onion, [Gone, Bad, Gone, Gone, Mis, Gone]),
    (Field::Issued, [Bad, Bad, Bad, Mis, Mis, Exp]),
    (Field::Expires, [Bad, Bad, Bad, Mis, Mis, Exp]),
    (Field::Signer, [Bad, Bad, Bad, Mis, Mis, Scu]),
    (Field::TlsFingerprint, [Bad, Bad, Bad, Mis, Mis, Auth]),
    (Field::SignerKey, [Bad, Bad, Bad, Bad, Bad, Bad]),
    (Field::Signature, [Bad, Bad, Bad, Bad, Bad, Bad]),
];

const SIDES: [Side; 3] = [Side::Clearnet, Side::Onion, Side::Both];

pub struct World {
    pub net: SimNet,
    pub store: TrustStore,
    pub service: ServiceIdentity,
    pub signer: ServiceIdentity,
    pub attacker: ServiceIdentity,
    pub clock: FixedClock,
    pub t0: Timestamp,
    pub clearnet_host: String,
    pub honest: SignedBindingDescriptor,
}

impl World {
    pub fn clearnet_url(&self) -> String {
        format!("http://{}", self.clearnet_host)
    }

    pub fn onion_host(&self) -> String {
        self.service.onion_address().to_string()
    }

    pub fn verify(&self, entry: &str, channel: Channel) -> VerificationReport {
        let opts = VerifyOptions { onion_channel: channel, ..Default::default() };
        verify_pair(&self.net, &self.store, entry, &self.clock, &opts)
    }

    pub fn verify_clearnet(&self) -> VerificationReport {
        self.verify(&self.clearnet_url(), Channel::OnionCircuit)
    }

    /// Replaces what the clearnet side delivers, as an on-path attacker would.
    pub fn serve_clearnet(&self, body: Vec<u8>) {
        self.net.install_adversary(AdversaryHook::TamperInTransit(
            self.clearnet_host.clone(),
            Arc::new(move |_| body.clone()),
        ));
    }

    /// Replaces what the onion service itself publishes.
    pub fn serve_onion(&self, body: Vec<u8>) {
        self.net.register_site(&self.onion_host(), WELL_KNOWN_PATH, body, Some(&self.service)).unwrap();
    }
}

fn seeded(tag: &str, seed: u64) -> ServiceIdentity {
    let s: [u8; 32] = Sha256::new().chain_update(tag).chain_update(seed.to_be_bytes()).finalize().into();
    generate_identity(Some(&s)).unwrap()
}

/// An honest pair published on both sides, with the signer ultimately
/// trusted by the verifier.
pub fn world(seed: u64) -> World {
    let net = SimNet::new();
    let service = seeded("service", seed);
    let signer = seeded("signer", seed);
    let attacker = seeded("attacker", seed);
    let t0 = parse_rfc3339("2026-01-01T00:00:00Z").unwrap() + Duration::minutes((seed % 10_000) as i64);
    let clearnet_host = if seed == 0 { CLEARNET_HOST.to_owned() } else { format!("site-{seed}.example") };
    let d = build_descriptor(&format!("http://{clearnet_host}"), service.onion_address(), t0, Duration::days(90), None)
        .unwrap();
    let honest = sign_descriptor(d, &signer);
    let armored = honest.to_armored();
    net.register_site(&clearnet_host, WELL_KNOWN_PATH, armored.clone(), None).unwrap();
    net.register_site(&service.onion_address().to_string(), WELL_KNOWN_PATH, armored, Some(&service)).unwrap();
    let mut store = TrustStore::new();
    let f = store.add_key(signer.public_key());
    store.set_owner_trust(&f, OwnerTrust::Ultimate).unwrap();
    World {
        net,
        store,
        service,
        signer,
        attacker,
        clock: FixedClock(t0 + Duration::days(1)),
        t0,
        clearnet_host,
        honest,
    }
}

fn replace_line(armored: &str, field: &str, value: &str) -> String {
    let prefix = format!("{field}: ");
    let mut hit = false;
    let out: Vec<String> = armored
        .lines()
        .map(|l| {
            if l.starts_with(&prefix) {
                hit = true;
                format!("{prefix}{value}")
            } else {
                l.to_owned()
            }
        })
        .collect();
    assert!(hit, "no {field} line");
    out.join("\n") + "\n"
}

fn other_onion() -> ServiceIdentity {
    seeded("elsewhere", 0)
}

fn altered(w: &World, field: Field) -> BindingDescriptor {
    let mut d = w.honest.descriptor.clone();
    match field {
        Field::Version => d.version = 2,
        Field::Clearnet => {
            d = build_descriptor("http://evil.example", d.onion_address, d.issued_at, d.expires_at - d.issued_at, None)
                .unwrap()
        }
        Field::Onion => d.onion_address = other_onion().onion_address(),
        Field::Issued => d.issued_at = w.t0 + Duration::days(2),
        Field::Expires => d.expires_at = w.t0 + Duration::hours(12),
        Field::TlsFingerprint => d.tls_fingerprint = Some(Fingerprint::from_bytes([0xaa; 32])),
        Field::Signer | Field::SignerKey | Field::Signature => {}
    }
    d
}

/// The corrupted document for `field` under `mode`.
pub fn corrupted_document(w: &World, field: Field, mode: Mode) -> Vec<u8> {
    let b64 = base64::engine::general_purpose::STANDARD;
    let honest = w.honest.to_armored();
    let text = match (mode, field) {
        (Mode::Edited, Field::Version) => replace_line(&honest, "onion-binding-version", "2"),
        (Mode::Edited, Field::Clearnet) => replace_line(&honest, "clearnet", "http://evil.example"),
        (Mode::Edited, Field::Onion) => replace_line(&honest, "onion", &other_onion().onion_address().to_string()),
        (Mode::Edited, Field::Issued) => replace_line(&honest, "issued", &format_rfc3339(&(w.t0 + Duration::days(2)))),
        (Mode::Edited, Field::Expires) => {
            replace_line(&honest, "expires", &format_rfc3339(&(w.t0 + Duration::hours(12))))
        }
        (Mode::Edited, Field::Signer) => replace_line(&honest, "signer", &w.attacker.fingerprint().to_string()),
        (Mode::Edited, Field::TlsFingerprint) => {
            let signer_line = format!("signer: {}\n", w.signer.fingerprint());
            honest.replace(&signer_line, &format!("{signer_line}tls-fingerprint: {}\n", "aa".repeat(32)))
        }
        (Mode::Edited, Field::SignerKey) => {
            replace_line(&honest, "signer-key", &b64.encode(w.attacker.public_key().as_bytes()))
        }
        (Mode::Edited, Field::Signature) => {
            let mut sig = w.honest.signature.clone();
            sig[0] ^= 0x01;
            replace_line(&honest, "signature", &b64.encode(sig))
        }
        (Mode::Resigned, Field::Signer) => sign_descriptor(altered(w, field), &w.attacker).to_armored(),
        (Mode::Resigned, Field::SignerKey) => {
            let d = w.honest.descriptor.clone();
            let sig = w.attacker.sign(&d.canonical_encode());
            SignedBindingDescriptor::new(d, sig, w.attacker.public_key()).to_armored()
        }
        (Mode::Resigned, Field::Signature) => {
            let d = w.honest.descriptor.clone();
            let sig = w.attacker.sign(&d.canonical_encode());
            SignedBindingDescriptor::new(d, sig, w.signer.public_key()).to_armored()
        }
        (Mode::Resigned, _) => sign_descriptor(altered(w, field), &w.signer).to_armored(),
    };
    text.into_bytes()
}

#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub field: Field,
    pub side: Side,
    pub mode: Mode,
    pub expected: Verdict,
}

impl Case {
    /// True when producing the corruption needs no legitimate signing key.
    pub fn adversarial(&self) -> bool {
        self.mode == Mode::Edited || matches!(self.field, Field::Signer | Field::SignerKey | Field::Signature)
    }

    pub fn name(&self) -> String {
        format!("{:?}/{:?}/{:?}", self.field, self.side, self.mode)
    }
}

pub fn table() -> Vec<Case> {
    let mut cases = Vec::new();
    for (field, row) in EXPECTED {
        for (col, expected) in row.into_iter().enumerate() {
            let mode = if col < 3 { Mode::Edited } else { Mode::Resigned };
            cases.push(Case { field, side: SIDES[col % 3], mode, expected });
        }
    }
    cases
}

/// A fresh seed-0 world with the case's corruption in place.
pub fn corrupted_world(case: &Case) -> World {
    let w = world(0);
    let doc = corrupted_document(&w, case.field, case.mode);
    if matches!(case.side, Side::Clearnet | Side::Both) {
        w.serve_clearnet(doc.clone());
    }
    if matches!(case.side, Side::Onion | Side::Both) {
        w.serve_onion(doc);
    }
    w
}

/// Verifies the case from the clearnet side over an onion circuit.
pub fn run_case(case: &Case) -> VerificationReport {
    corrupted_world(case).verify_clearnet()
}

pub struct Attack {
    pub name: &'static str,
    pub expected: Verdict,
    pub run: fn(&World) -> VerificationReport,
}

/// Whole-document and network-level attacks on a seed-0 world.
pub fn attacks() -> Vec<Attack> {
    vec![
        Attack {
            name: "directory override, clearnet entry",
            expected: Akm,
            run: |w| {
                w.net.install_adversary(AdversaryHook::DirectoryOverride(
                    w.service.onion_address(),
                    w.attacker.public_key(),
                ));
                w.verify_clearnet()
            },
        },
        Attack {
            name: "directory override, onion entry",
            expected: Akm,
            run: |w| {
                w.net.install_adversary(AdversaryHook::DirectoryOverride(
                    w.service.onion_address(),
                    w.attacker.public_key(),
                ));
                w.verify(&w.onion_host(), Channel::OnionCircuit)
            },
        },
        Attack {
            name: "clearnet descriptor removed",
            expected: Gone,
            run: |w| {
                w.net.install_adversary(AdversaryHook::RemoveDocument(w.clearnet_host.clone(), WELL_KNOWN_PATH.into()));
                w.verify_clearnet()
            },
        },
        Attack {
            name: "onion descriptor removed",
            expected: Gone,
            run: |w| {
                w.net.install_adversary(AdversaryHook::RemoveDocument(w.onion_host(), WELL_KNOWN_PATH.into()));
                w.verify_clearnet()
            },
        },
        Attack {
            name: "clearnet body replaced with garbage",
            expected: Gone,
            run: |w| {
                w.serve_clearnet(b"<html>hello</html>".to_vec());
                w.verify_clearnet()
            },
        },
        Attack {
            name: "swap to attacker onion with attacker-signed pair",
            expected: Scu,
            run: |w| {
                let rogue = seeded("rogue", 0);
                let d =
                    build_descriptor(&w.clearnet_url(), rogue.onion_address(), w.t0, Duration::days(90), None).unwrap();
                let armored = sign_descriptor(d, &w.attacker).to_armored();
                w.net
                    .register_site(&rogue.onion_address().to_string(), WELL_KNOWN_PATH, armored.clone(), Some(&rogue))
                    .unwrap();
                w.serve_clearnet(armored.into_bytes());
                w.verify_clearnet()
            },
        },
        Attack {
            name: "swap in another site's genuine descriptor",
            expected: Mis,
            run: |w| {
                let other = seeded("neighbour", 0);
                let d =
                    build_descriptor("http://neighbour.example", other.onion_address(), w.t0, Duration::days(90), None)
                        .unwrap();
                let armored = sign_descriptor(d, &w.signer).to_armored();
                w.net
                    .register_site(&other.onion_address().to_string(), WELL_KNOWN_PATH, armored.clone(), Some(&other))
                    .unwrap();
                w.serve_clearnet(armored.into_bytes());
                w.verify_clearnet()
            },
        },
        Attack {
            name: "gateway tampers with onion descriptor",
            expected: Bad,
            run: |w| {
                let flipped = corrupted_document(w, Field::Signature, Mode::Edited);
                let host = gateway_host(&w.service.onion_address());
                w.net.install_adversary(AdversaryHook::TamperInTransit(host, Arc::new(move |_| flipped.clone())));
                w.verify(&w.clearnet_url(), Channel::Tor2webProxy)
            },
        },
        Attack {
            name: "stale descriptor replayed after expiry",
            expected: Exp,
            run: |w| {
                let late = World { clock: FixedClock(w.t0 + Duration::days(91)), ..world(0) };
                late.verify_clearnet()
            },
        },
    ]
}
