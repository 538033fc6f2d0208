//! Exhaustive liar-subset enumeration for quorum agreement.

use onionbind::clock::parse_rfc3339;
use onionbind::notary::{default_threshold, quorum_verdict, Digest, Observation, QuorumVerdict};
use onionbind::onionid::{generate_identity, Fingerprint};
use onionbind::Verdict;

/// What a lying notary may report.
#[derive(Debug, Clone, Copy)]
enum Lie {
    Substitute(u8),
    SubstituteUntrusted(u8),
    Missing,
    Truth,
}

const LIES: [Lie; 5] =
    [Lie::Substitute(0xb1), Lie::Substitute(0xb2), Lie::SubstituteUntrusted(0xb1), Lie::Missing, Lie::Truth];
const HONEST: u8 = 0xa0;

fn observation(digest: u8, verdict: Verdict) -> Observation {
    Observation {
        seq: 0,
        observed_at: parse_rfc3339("2026-01-01T00:00:00Z").unwrap(),
        onion_address: generate_identity(Some(&[1; 32])).unwrap().onion_address(),
        clearnet_url: "http://site.example".into(),
        descriptor_digest: if digest == 0 { Digest::ZERO } else { Digest([digest; 32]) },
        signer_fingerprint: if digest == 0 { Fingerprint::ZERO } else { Fingerprint::from_bytes([digest; 32]) },
        verdict,
    }
}

fn honest_outcome() -> QuorumVerdict {
    QuorumVerdict::Agreed {
        descriptor_digest: Digest([HONEST; 32]),
        signer_fingerprint: Fingerprint::from_bytes([HONEST; 32]),
    }
}

#[derive(Debug, Default)]
pub struct QuorumSweep {
    pub scenarios: usize,
    /// Scenarios with fewer liars than the threshold that agreed on
    /// something other than the honest digest, or failed to agree although
    /// the honest notaries alone reach the threshold.
    pub counterexamples: Vec<String>,
    /// Scenarios with at least as many liars as the threshold that were
    /// captured. Shows the enumeration can find a bad outcome at all.
    pub captured_with_enough_liars: usize,
}

/// All liar subsets and lie assignments for 1..=max_n notaries at the
/// default majority threshold.
pub fn sweep(max_n: usize) -> QuorumSweep {
    let mut out = QuorumSweep::default();
    for n in 1..=max_n {
        let k = default_threshold(n);
        for mask in 0u32..(1 << n) {
            let liars: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let f = liars.len();
            for mut choice in 0..LIES.len().pow(f as u32) {
                let mut reports: Vec<(String, Observation)> =
                    (0..n).map(|i| (format!("notary-{i}"), observation(HONEST, Verdict::Authentic))).collect();
                let mut story = Vec::new();
                for &l in &liars {
                    let lie = LIES[choice % LIES.len()];
                    choice /= LIES.len();
                    story.push(format!("{l}:{lie:?}"));
                    reports[l].1 = match lie {
                        Lie::Substitute(d) => observation(d, Verdict::Authentic),
                        Lie::SubstituteUntrusted(d) => observation(d, Verdict::SelfConsistentUntrusted),
                        Lie::Missing => observation(0, Verdict::Missing),
                        Lie::Truth => observation(HONEST, Verdict::Authentic),
                    };
                }
                out.scenarios += 1;
                let got = quorum_verdict(&reports, None).expect("majority threshold is valid");
                let bad = match got {
                    QuorumVerdict::Agreed { .. } => got != honest_outcome(),
                    QuorumVerdict::Conflict => true,
                    QuorumVerdict::NoQuorum => false,
                };
                if f < k {
                    let must_agree = n - f >= k;
                    if bad || (must_agree && got != honest_outcome()) {
                        out.counterexamples.push(format!("n={n} k={k} liars=[{}] -> {got:?}", story.join(", ")));
                    }
                } else if bad {
                    out.captured_with_enough_liars += 1;
                }
            }
        }
    }
    out
}
