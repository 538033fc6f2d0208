//! Local web of trust.
//!
//! Each verifier keeps its own store of signer keys. The owner assigns each
//! key an [`OwnerTrust`] level saying how much that key's certifications are
//! worth; certifications are real signatures over the certified key. Key
//! validity follows the classic rule: ultimately trusted keys are valid, and
//! a key becomes valid when one valid fully-trusted key, or three valid
//! marginally-trusted keys, certify it, up to five hops from an ultimate key.

mod file;
mod validity;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::onionid::{Fingerprint, PublicKey, Signer};

pub use validity::{MARGINALS_NEEDED, MAX_DEPTH};

const CERTIFICATION_TAG: &[u8] = b"onionbind-certification-v1\0";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrustError {
    #[error("unknown key {0}")]
    UnknownKey(Fingerprint),
    #[error("certification by {certifier} on {subject} does not verify")]
    BadCertSignature { certifier: Fingerprint, subject: Fingerprint },
    #[error("trust store line {line}: {detail}")]
    Format { line: usize, detail: String },
    #[error("trust store i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum OwnerTrust {
    #[default]
    None,
    Marginal,
    Full,
    Ultimate,
}

impl OwnerTrust {
    pub fn as_str(&self) -> &'static str {
        match self {
            OwnerTrust::None => "none",
            OwnerTrust::Marginal => "marginal",
            OwnerTrust::Full => "full",
            OwnerTrust::Ultimate => "ultimate",
        }
    }
}

impl fmt::Display for OwnerTrust {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OwnerTrust {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(OwnerTrust::None),
            "marginal" => Ok(OwnerTrust::Marginal),
            "full" => Ok(OwnerTrust::Full),
            "ultimate" => Ok(OwnerTrust::Ultimate),
            other => Err(format!("unknown trust level {other:?}")),
        }
    }
}

/// Ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Validity {
    Unknown,
    MarginallyValid,
    Valid,
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Validity::Unknown => "unknown",
            Validity::MarginallyValid => "marginal",
            Validity::Valid => "valid",
        })
    }
}

/// One stored key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRecord {
    pub fingerprint: Fingerprint,
    pub public_key: PublicKey,
    pub owner_trust: OwnerTrust,
    /// Certifier fingerprint to signature over this key. Every entry has been
    /// verified against the certifier's key.
    pub certifications: BTreeMap<Fingerprint, Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Stored,
    /// The certifier is not in the store yet; held until it is.
    Pending,
}

/// The message a certifier signs.
pub fn certification_message(subject: &PublicKey) -> Vec<u8> {
    let mut msg = CERTIFICATION_TAG.to_vec();
    msg.extend_from_slice(subject.as_bytes());
    msg
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustStore {
    records: BTreeMap<Fingerprint, KeyRecord>,
    /// subject -> certifier -> signature, for certifiers not (or no longer)
    /// in the store. Never consulted by validity.
    pending: BTreeMap<Fingerprint, BTreeMap<Fingerprint, Vec<u8>>>,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, fingerprint: &Fingerprint) -> Option<&KeyRecord> {
        self.records.get(fingerprint)
    }

    pub fn records(&self) -> impl Iterator<Item = &KeyRecord> {
        self.records.values()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.values().map(BTreeMap::len).sum()
    }

    /// Adds a key with owner trust `None`. Adding a known key is a no-op.
    pub fn add_key(&mut self, public_key: PublicKey) -> Fingerprint {
        let fingerprint = public_key.fingerprint();
        if self.records.contains_key(&fingerprint) {
            return fingerprint;
        }
        self.records.insert(
            fingerprint,
            KeyRecord { fingerprint, public_key, owner_trust: OwnerTrust::None, certifications: BTreeMap::new() },
        );
        self.promote_pending_from(&fingerprint);
        fingerprint
    }

    /// Removes a key. Certifications it made on other keys go back to
    /// pending so that re-adding it restores them.
    pub fn remove_key(&mut self, fingerprint: &Fingerprint) -> Result<KeyRecord, TrustError> {
        let record = self.records.remove(fingerprint).ok_or(TrustError::UnknownKey(*fingerprint))?;
        for (subject, rec) in self.records.iter_mut() {
            if let Some(sig) = rec.certifications.remove(fingerprint) {
                self.pending.entry(*subject).or_default().insert(*fingerprint, sig);
            }
        }
        Ok(record)
    }

    pub fn owner_trust(&self, fingerprint: &Fingerprint) -> Option<OwnerTrust> {
        self.records.get(fingerprint).map(|r| r.owner_trust)
    }

    pub fn set_owner_trust(&mut self, fingerprint: &Fingerprint, level: OwnerTrust) -> Result<(), TrustError> {
        let rec = self.records.get_mut(fingerprint).ok_or(TrustError::UnknownKey(*fingerprint))?;
        rec.owner_trust = level;
        Ok(())
    }

    /// Signs `subject` with `certifier` and records the certification.
    pub fn certify(&mut self, certifier: &dyn Signer, subject: &Fingerprint) -> Result<(), TrustError> {
        let certifier_fpr = certifier.public_key().fingerprint();
        if !self.records.contains_key(&certifier_fpr) {
            return Err(TrustError::UnknownKey(certifier_fpr));
        }
        let subject_key = self.records.get(subject).ok_or(TrustError::UnknownKey(*subject))?.public_key;
        let signature = certifier.sign(&certification_message(&subject_key));
        self.import_certification(subject, &certifier_fpr, signature).map(|_| ())
    }

    /// Records an externally supplied certification, verifying it if the
    /// certifier's key is known.
    pub fn import_certification(
        &mut self,
        subject: &Fingerprint,
        certifier: &Fingerprint,
        signature: Vec<u8>,
    ) -> Result<CertStatus, TrustError> {
        let subject_key = self.records.get(subject).ok_or(TrustError::UnknownKey(*subject))?.public_key;
        let Some(certifier_rec) = self.records.get(certifier) else {
            self.pending.entry(*subject).or_default().insert(*certifier, signature);
            return Ok(CertStatus::Pending);
        };
        if !certifier_rec.public_key.verify(&certification_message(&subject_key), &signature) {
            return Err(TrustError::BadCertSignature { certifier: *certifier, subject: *subject });
        }
        self.records.get_mut(subject).expect("subject present").certifications.insert(*certifier, signature);
        Ok(CertStatus::Stored)
    }

    fn promote_pending_from(&mut self, certifier: &Fingerprint) {
        let certifier_key = self.records[certifier].public_key;
        let subjects: Vec<Fingerprint> =
            self.pending.iter().filter(|(_, m)| m.contains_key(certifier)).map(|(s, _)| *s).collect();
        for subject in subjects {
            let sig = self.pending.get_mut(&subject).and_then(|m| m.remove(certifier)).expect("pending entry");
            if self.pending.get(&subject).is_some_and(BTreeMap::is_empty) {
                self.pending.remove(&subject);
            }
            let Some(rec) = self.records.get_mut(&subject) else { continue };
            // Forged pending certifications are dropped here.
            if certifier_key.verify(&certification_message(&rec.public_key), &sig) {
                rec.certifications.insert(*certifier, sig);
            }
        }
    }

    /// Validity of one key; absent keys are `Unknown`.
    pub fn key_validity(&self, fingerprint: &Fingerprint) -> Validity {
        self.validities().get(fingerprint).copied().unwrap_or(Validity::Unknown)
    }

    /// Validity of every stored key.
    pub fn validities(&self) -> BTreeMap<Fingerprint, Validity> {
        validity::evaluate(self)
    }
}
