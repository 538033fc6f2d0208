//! Agreement across notaries on what a service publishes.

use std::collections::BTreeMap;

use super::{Digest, NotaryError, Observation};
use crate::onionid::Fingerprint;
use crate::verifier::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuorumVerdict {
    Agreed { descriptor_digest: Digest, signer_fingerprint: Fingerprint },
    NoQuorum,
    Conflict,
}

/// Simple majority.
pub fn default_threshold(n: usize) -> usize {
    n / 2 + 1
}

/// `reports` pairs a notary id with that notary's latest observation; a
/// repeated id keeps its last report. Only observations that verified
/// (Authentic or SelfConsistentUntrusted) count toward agreement.
pub fn quorum_verdict(reports: &[(String, Observation)], k: Option<usize>) -> Result<QuorumVerdict, NotaryError> {
    let by_notary: BTreeMap<&str, &Observation> = reports.iter().map(|(id, o)| (id.as_str(), o)).collect();
    let n = by_notary.len();
    let k = k.unwrap_or_else(|| default_threshold(n));
    if k == 0 || k > n {
        return Err(NotaryError::InvalidThreshold { k, n });
    }
    let mut groups: BTreeMap<(Digest, Fingerprint), usize> = BTreeMap::new();
    for obs in by_notary.values() {
        if matches!(obs.verdict, Verdict::Authentic | Verdict::SelfConsistentUntrusted)
            && !obs.descriptor_digest.is_zero()
        {
            *groups.entry((obs.descriptor_digest, obs.signer_fingerprint)).or_default() += 1;
        }
    }
    let reached: Vec<_> = groups.into_iter().filter(|(_, count)| *count >= k).map(|(key, _)| key).collect();
    Ok(match reached[..] {
        [] => QuorumVerdict::NoQuorum,
        [(descriptor_digest, signer_fingerprint)] => QuorumVerdict::Agreed { descriptor_digest, signer_fingerprint },
        _ => QuorumVerdict::Conflict,
    })
}
