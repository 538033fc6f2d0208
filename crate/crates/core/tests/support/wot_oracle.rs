//! Brute-force reference for key validity, independent of the store's
//! level-by-level evaluation. A key is valid within `depth` hops if it is
//! ultimately trusted, or if enough certifiers are themselves valid within
//! `depth - 1` hops; every justification tree is explored by plain recursion.

use onionbind::onionid::Fingerprint;
use onionbind::trust::{OwnerTrust, TrustStore, Validity};
use rand::seq::SliceRandom;
use rand::Rng;

const DEPTH: u32 = 5;
const MARGINALS: usize = 3;

fn valid_within(store: &TrustStore, key: &Fingerprint, depth: u32) -> bool {
    let Some(rec) = store.record(key) else { return false };
    if rec.owner_trust == OwnerTrust::Ultimate {
        return true;
    }
    if depth == 0 {
        return false;
    }
    let (mut full, mut marginal) = (0, 0);
    for certifier in rec.certifications.keys().filter(|c| *c != key) {
        match store.owner_trust(certifier) {
            Some(OwnerTrust::Full | OwnerTrust::Ultimate) if valid_within(store, certifier, depth - 1) => full += 1,
            Some(OwnerTrust::Marginal) if valid_within(store, certifier, depth - 1) => marginal += 1,
            _ => {}
        }
    }
    full >= 1 || marginal >= MARGINALS
}

pub fn oracle_validity(store: &TrustStore, key: &Fingerprint) -> Validity {
    if valid_within(store, key, DEPTH) {
        return Validity::Valid;
    }
    let Some(rec) = store.record(key) else { return Validity::Unknown };
    let marginal = rec
        .certifications
        .keys()
        .filter(|c| *c != key)
        .filter(|c| store.owner_trust(c) == Some(OwnerTrust::Marginal) && valid_within(store, c, DEPTH - 1))
        .count();
    if (1..MARGINALS).contains(&marginal) {
        Validity::MarginallyValid
    } else {
        Validity::Unknown
    }
}

pub const LEVELS: [OwnerTrust; 4] = [OwnerTrust::Ultimate, OwnerTrust::Full, OwnerTrust::Marginal, OwnerTrust::None];

/// A random store over at most `max_keys` keys drawn from `identities`.
pub fn random_store<R: Rng>(rng: &mut R, identities: &[onionbind::ServiceIdentity], max_keys: usize) -> TrustStore {
    let n = rng.gen_range(1..=max_keys.min(identities.len()));
    let chosen: Vec<_> = identities.choose_multiple(rng, n).collect();
    let mut store = TrustStore::new();
    let fprs: Vec<_> = chosen.iter().map(|id| store.add_key(id.public_key())).collect();
    for f in &fprs {
        // Bias away from Ultimate so deep chains appear.
        let level = match rng.gen_range(0..10) {
            0 => OwnerTrust::Ultimate,
            1..=3 => OwnerTrust::Full,
            4..=7 => OwnerTrust::Marginal,
            _ => OwnerTrust::None,
        };
        store.set_owner_trust(f, level).unwrap();
    }
    let density = rng.gen_range(0.1..0.7);
    for (i, certifier) in chosen.iter().enumerate() {
        for (j, subject) in fprs.iter().enumerate() {
            if (i != j || rng.gen_bool(0.2)) && rng.gen_bool(density) {
                store.certify(*certifier, subject).unwrap();
            }
        }
    }
    store
}
