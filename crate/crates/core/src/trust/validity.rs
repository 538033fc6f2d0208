use std::collections::BTreeMap;

use super::{OwnerTrust, TrustStore, Validity};
use crate::onionid::Fingerprint;

/// Longest certification chain from an ultimately trusted key.
pub const MAX_DEPTH: u8 = 5;
/// Valid marginally-trusted certifiers needed for full validity.
pub const MARGINALS_NEEDED: usize = 3;

#[derive(Default, Clone, Copy)]
struct Introducers {
    full: usize,
    marginal: usize,
}

/// Counts valid introducers of `subject` among `levels` (keys valid so far).
fn introducers(store: &TrustStore, subject: &Fingerprint, levels: &BTreeMap<Fingerprint, u8>) -> Introducers {
    let mut out = Introducers::default();
    let Some(rec) = store.records.get(subject) else { return out };
    for certifier in rec.certifications.keys() {
        if certifier == subject || !levels.contains_key(certifier) {
            continue;
        }
        match store.owner_trust(certifier) {
            Some(OwnerTrust::Full | OwnerTrust::Ultimate) => out.full += 1,
            Some(OwnerTrust::Marginal) => out.marginal += 1,
            _ => {}
        }
    }
    out
}

/// Least fixed point of the validity rule, computed one depth level at a time
/// so that each key's level is the length of its shortest justification.
pub(super) fn evaluate(store: &TrustStore) -> BTreeMap<Fingerprint, Validity> {
    let mut levels: BTreeMap<Fingerprint, u8> =
        store.records.values().filter(|r| r.owner_trust == OwnerTrust::Ultimate).map(|r| (r.fingerprint, 0)).collect();

    for depth in 1..=MAX_DEPTH {
        let snapshot = levels.clone();
        let newly: Vec<Fingerprint> = store
            .records
            .keys()
            .filter(|f| !snapshot.contains_key(*f))
            .filter(|f| {
                let i = introducers(store, f, &snapshot);
                i.full >= 1 || i.marginal >= MARGINALS_NEEDED
            })
            .copied()
            .collect();
        if newly.is_empty() {
            break;
        }
        levels.extend(newly.into_iter().map(|f| (f, depth)));
    }

    // Introducers for a final, partial step must sit strictly inside the
    // depth bound too.
    let inner: BTreeMap<Fingerprint, u8> =
        levels.iter().filter(|(_, &l)| l < MAX_DEPTH).map(|(f, l)| (*f, *l)).collect();
    store
        .records
        .keys()
        .map(|f| {
            let v = if levels.contains_key(f) {
                Validity::Valid
            } else {
                let i = introducers(store, f, &inner);
                if (1..MARGINALS_NEEDED).contains(&i.marginal) {
                    Validity::MarginallyValid
                } else {
                    Validity::Unknown
                }
            };
            (*f, v)
        })
        .collect()
}
