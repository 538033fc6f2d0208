//! A deterministic 10-entry notary log and its tamper sweeps.

use chrono::Duration;
use onionbind::clock::parse_rfc3339;
use onionbind::notary::{verify_log_files, Digest, LogCheck, NotaryLog, PendingObservation, RECORD_END};
use onionbind::onionid::{generate_identity, Fingerprint, PublicKey};
use onionbind::par::{self, Execution};
use onionbind::Verdict;

pub const ENTRIES: usize = 10;

pub fn fixture_log() -> NotaryLog {
    let mut log = NotaryLog::new(generate_identity(Some(&[0x4e; 32])).unwrap());
    let onions: Vec<_> = (1..=3u8).map(|i| generate_identity(Some(&[i; 32])).unwrap().onion_address()).collect();
    let t0 = parse_rfc3339("2026-03-01T00:00:00Z").unwrap();
    for i in 0..ENTRIES {
        let verdict = [Verdict::Authentic, Verdict::SelfConsistentUntrusted, Verdict::Missing][i % 3];
        let missing = verdict == Verdict::Missing;
        log.append(PendingObservation {
            observed_at: t0 + Duration::minutes(10 * i as i64),
            onion_address: onions[i % 3],
            clearnet_url: format!("http://site{}.example", i % 3),
            descriptor_digest: if missing { Digest::ZERO } else { Digest([i as u8 + 1; 32]) },
            signer_fingerprint: if missing { Fingerprint::ZERO } else { Fingerprint::from_bytes([0x5a; 32]) },
            verdict,
        })
        .unwrap();
    }
    log
}

/// Byte ranges of each record in the records text.
pub fn record_spans(records: &[u8]) -> Vec<std::ops::Range<usize>> {
    let marker = format!("{RECORD_END}\n");
    let mut spans = Vec::new();
    let mut start = 0;
    while let Some(pos) = records[start..].windows(marker.len()).position(|w| w == marker.as_bytes()) {
        let end = start + pos + marker.len();
        spans.push(start..end);
        start = end;
    }
    spans
}

#[derive(Debug, Default)]
pub struct SweepResult {
    pub tried: usize,
    /// Description of each mutation that was accepted or rejected at the
    /// wrong seq.
    pub failures: Vec<String>,
}

fn check(records: &[u8], head: &str, key: &PublicKey, expected_seq: u64) -> Option<String> {
    match verify_log_files(records, Some(head), key) {
        LogCheck::Accept => Some("accepted".into()),
        LogCheck::Reject { seq, .. } if seq == expected_seq => None,
        LogCheck::Reject { seq, reason } => Some(format!("rejected at {seq} ({reason})")),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Mutations {
    /// Each of the eight single-bit flips.
    BitFlips,
    /// Every other byte value.
    AllValues,
}

/// Every byte of every record mutated in place.
pub fn mutation_sweep(log: &NotaryLog, mutations: Mutations, exec: Execution) -> SweepResult {
    let records = log.records_text().into_bytes();
    let head = log.head_text().unwrap();
    let key = log.public_key();
    let spans = record_spans(&records);
    assert_eq!(spans.len(), ENTRIES);
    let positions: Vec<(usize, u64)> =
        spans.iter().enumerate().flat_map(|(seq, r)| r.clone().map(move |p| (p, seq as u64))).collect();
    let per_position = par::map_slice(&positions, exec, |&(pos, seq)| {
        let mut buf = records.clone();
        let mut failures = Vec::new();
        let values: Vec<u8> = match mutations {
            Mutations::BitFlips => (0..8).map(|b| records[pos] ^ (1 << b)).collect(),
            Mutations::AllValues => (0..=255u8).filter(|&v| v != records[pos]).collect(),
        };
        for &v in &values {
            buf[pos] = v;
            if let Some(f) = check(&buf, &head, &key, seq) {
                failures.push(format!("byte {pos} -> {v:#04x}: {f}"));
            }
        }
        failures
    });
    let per_byte = match mutations {
        Mutations::BitFlips => 8,
        Mutations::AllValues => 255,
    };
    SweepResult { tried: positions.len() * per_byte, failures: per_position.into_iter().flatten().collect() }
}

/// Every swap of two records, and every truncation and single deletion.
pub fn structural_sweep(log: &NotaryLog) -> SweepResult {
    let records = log.records_text().into_bytes();
    let head = log.head_text().unwrap();
    let key = log.public_key();
    let spans = record_spans(&records);
    let parts: Vec<&[u8]> = spans.iter().map(|r| &records[r.clone()]).collect();
    let mut out = SweepResult::default();
    let mut run = |name: String, bytes: Vec<u8>, expected: u64| {
        out.tried += 1;
        if let Some(f) = check(&bytes, &head, &key, expected) {
            out.failures.push(format!("{name}: {f}"));
        }
    };
    for i in 0..ENTRIES {
        for j in i + 1..ENTRIES {
            let mut order: Vec<&[u8]> = parts.clone();
            order.swap(i, j);
            run(format!("swap {i},{j}"), order.concat(), i as u64);
        }
        let mut without: Vec<&[u8]> = parts.clone();
        without.remove(i);
        run(format!("delete {i}"), without.concat(), i as u64);
        run(format!("truncate to {i}"), parts[..i].concat(), i as u64);
    }
    // A torn final record.
    let cut = records.len() - 20;
    run("torn tail".into(), records[..cut].to_vec(), ENTRIES as u64 - 1);
    out
}
