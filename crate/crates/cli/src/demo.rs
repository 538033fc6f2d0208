//! The demo network: one honest pair and one pair whose onion address is
//! hijacked in the directory, with a verifier trust store that makes the
//! common signer valid through a single certification.

use std::sync::Arc;

use chrono::Duration;
use onionbind::clock::Timestamp;
use onionbind::descriptor::{build_descriptor, sign_descriptor, DEFAULT_LIFETIME_DAYS, WELL_KNOWN_PATH};
use onionbind::onionid::{generate_identity, OnionAddress, ServiceIdentity};
use onionbind::simnet::{AdversaryHook, SimNet};
use onionbind::trust::{OwnerTrust, TrustStore};
use onionbind::Verdict;

pub const HONEST_URL: &str = "http://honest.example";
pub const ATTACKED_URL: &str = "http://attacked.example";
pub const EXPECTED_HONEST: Verdict = Verdict::Authentic;
pub const EXPECTED_ATTACKED: Verdict = Verdict::AddressKeyMismatch;

pub struct DemoWorld {
    pub net: Arc<SimNet>,
    /// The verifier's store: its own root key (ultimate) certifies the signer.
    pub store: TrustStore,
    pub honest_onion: OnionAddress,
    pub attacked_onion: OnionAddress,
}

fn identity(tag: u8) -> ServiceIdentity {
    generate_identity(Some(&[tag; 32])).expect("32-byte seed")
}

fn publish(net: &SimNet, url: &str, service: &ServiceIdentity, signer: &ServiceIdentity, issued: Timestamp) {
    let d = build_descriptor(url, service.onion_address(), issued, Duration::days(DEFAULT_LIFETIME_DAYS), None)
        .expect("demo descriptor is valid");
    let armored = sign_descriptor(d, signer).to_armored();
    let host = url.trim_start_matches("http://");
    net.register_site(host, WELL_KNOWN_PATH, armored.clone(), None).expect("clearnet host");
    net.register_site(&service.onion_address().to_string(), WELL_KNOWN_PATH, armored, Some(service))
        .expect("onion host matches key");
}

/// Descriptors are issued at `now`.
pub fn build(now: Timestamp) -> DemoWorld {
    let (root, signer, attacker) = (identity(0xd0), identity(0xd1), identity(0xdf));
    let (honest, attacked) = (identity(0xa1), identity(0xa2));
    let net = Arc::new(SimNet::new());
    publish(&net, HONEST_URL, &honest, &signer, now);
    publish(&net, ATTACKED_URL, &attacked, &signer, now);
    net.install_adversary(AdversaryHook::DirectoryOverride(attacked.onion_address(), attacker.public_key()));

    let mut store = TrustStore::new();
    let root_fpr = store.add_key(root.public_key());
    store.set_owner_trust(&root_fpr, OwnerTrust::Ultimate).expect("just added");
    let signer_fpr = store.add_key(signer.public_key());
    store.certify(&root, &signer_fpr).expect("both keys present");
    DemoWorld { net, store, honest_onion: honest.onion_address(), attacked_onion: attacked.onion_address() }
}
