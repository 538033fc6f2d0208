//! Notary: repeatedly verifies registered pairs and keeps an append-only,
//! hash-chained, signed log of the outcomes.
//!
//! `entry_hash[i] = SHA-256(entry_hash[i-1] || canonical(entry i))` with
//! `entry_hash[-1]` all zero, and the head signature covers
//! `entry_hash[last] || seq` (seq as 8 bytes big-endian).

mod api;
mod quorum;
mod record;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::RwLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::clock::{format_rfc3339, Clock, Timestamp};
use crate::descriptor::ClearnetUrl;
use crate::onionid::{Fingerprint, OnionAddress, PublicKey, ServiceIdentity};
use crate::par::{self, Execution};
use crate::simnet::Network;
use crate::trust::TrustStore;
use crate::verifier::{verify_pair, Verdict, VerificationReport, VerifyOptions};

pub use api::{fetch_notary, HeadView, HistoryEntryView, NotaryAnswer, NotaryServer};
pub use quorum::{default_threshold, quorum_verdict, QuorumVerdict};
pub use record::{
    parse_head, parse_records, render_head, render_record, verify_log_files, ParsedRecords, RECORD_BEGIN, RECORD_END,
};

pub const LOG_FILE: &str = "observations.log";
pub const HEAD_FILE: &str = "head";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NotaryError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("log record {index}: {detail}")]
    Format { index: usize, detail: String },
    #[error("head file: {0}")]
    BadHead(String),
    #[error("log rejected at seq {seq}: {reason}")]
    Tampered { seq: u64, reason: String },
    #[error("log was written by notary key {found}, not {expected}")]
    WrongNotary { expected: String, found: String },
    #[error("quorum threshold {k} is invalid for {n} reports")]
    InvalidThreshold { k: usize, n: usize },
    #[error("notary {url}: {detail}")]
    Remote { url: String, detail: String },
    #[error("bad target line {line}: {detail}")]
    BadTarget { line: usize, detail: String },
}

fn io_err(e: std::io::Error) -> NotaryError {
    NotaryError::Io(e.to_string())
}

/// A 32-byte hash shown as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

impl FromStr for Digest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(format!("expected 64 lowercase hex digits, got {s:?}"));
        }
        let mut out = [0; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| e.to_string())?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub seq: u64,
    #[serde(with = "crate::clock::rfc3339")]
    pub observed_at: Timestamp,
    pub onion_address: OnionAddress,
    pub clearnet_url: String,
    /// Digest of the canonical descriptor; zero when none was obtained.
    pub descriptor_digest: Digest,
    /// Zero when unavailable.
    pub signer_fingerprint: Fingerprint,
    pub verdict: Verdict,
}

impl Observation {
    pub fn canonical(&self) -> Vec<u8> {
        format!(
            "seq: {}\nobserved: {}\nonion: {}\nclearnet: {}\ndigest: {}\nsigner: {}\nverdict: {}\n",
            self.seq,
            format_rfc3339(&self.observed_at),
            self.onion_address,
            self.clearnet_url,
            self.descriptor_digest,
            self.signer_fingerprint,
            self.verdict
        )
        .into_bytes()
    }
}

/// An observation before it is given a place in a log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingObservation {
    pub observed_at: Timestamp,
    pub onion_address: OnionAddress,
    pub clearnet_url: String,
    pub descriptor_digest: Digest,
    pub signer_fingerprint: Fingerprint,
    pub verdict: Verdict,
}

pub fn chain_hash(prev: &Digest, entry: &Observation) -> Digest {
    Digest(Sha256::new().chain_update(prev.0).chain_update(entry.canonical()).finalize().into())
}

pub fn head_message(entry_hash: &Digest, seq: u64) -> Vec<u8> {
    let mut m = entry_hash.0.to_vec();
    m.extend_from_slice(&seq.to_be_bytes());
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogHead {
    pub seq: u64,
    pub entry_hash: Digest,
    pub signature: Vec<u8>,
}

impl LogHead {
    pub fn verify(&self, key: &PublicKey) -> bool {
        key.verify(&head_message(&self.entry_hash, self.seq), &self.signature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogCheck {
    Accept,
    Reject { seq: u64, reason: String },
}

impl LogCheck {
    pub fn is_accept(&self) -> bool {
        matches!(self, LogCheck::Accept)
    }

    pub fn rejected_seq(&self) -> Option<u64> {
        match self {
            LogCheck::Accept => None,
            LogCheck::Reject { seq, .. } => Some(*seq),
        }
    }
}

fn reject(seq: u64, reason: impl Into<String>) -> LogCheck {
    LogCheck::Reject { seq, reason: reason.into() }
}

/// First entry whose position or hash does not check out.
fn chain_fault(entries: &[Observation], hashes: &[Digest]) -> Option<LogCheck> {
    let mut prev = Digest::ZERO;
    for (i, entry) in entries.iter().enumerate() {
        let pos = i as u64;
        if entry.seq != pos {
            return Some(reject(pos, format!("entry at position {pos} claims seq {}", entry.seq)));
        }
        let h = chain_hash(&prev, entry);
        match hashes.get(i) {
            Some(stored) if *stored == h => {}
            Some(_) => return Some(reject(pos, "entry hash does not recompute")),
            None => return Some(reject(pos, "entry hash missing")),
        }
        prev = h;
    }
    (hashes.len() > entries.len()).then(|| reject(entries.len() as u64, "hash without entry"))
}

/// Checks the whole chain and the head signature. A rejection names the
/// earliest inconsistent seq; a head that points past the entries names the
/// first missing one.
pub fn verify_log(entries: &[Observation], hashes: &[Digest], head: Option<&LogHead>, key: &PublicKey) -> LogCheck {
    if let Some(fault) = chain_fault(entries, hashes) {
        return fault;
    }
    let n = entries.len() as u64;
    let Some(head) = head else {
        return if n == 0 { LogCheck::Accept } else { reject(0, "entries without a signed head") };
    };
    if head.seq >= n {
        return reject(n, format!("head names seq {} but the log ends before it", head.seq));
    }
    if head.seq + 1 < n {
        return reject(head.seq + 1, "entries beyond the signed head");
    }
    if head.entry_hash != hashes[head.seq as usize] {
        return reject(head.seq, "head hash differs from the chain");
    }
    if !head.verify(key) {
        return reject(head.seq, "head signature does not verify");
    }
    LogCheck::Accept
}

pub struct NotaryLog {
    identity: ServiceIdentity,
    entries: Vec<Observation>,
    hashes: Vec<Digest>,
    head: Option<LogHead>,
    dir: Option<PathBuf>,
    dropped_on_open: usize,
}

impl NotaryLog {
    /// An in-memory log.
    pub fn new(identity: ServiceIdentity) -> Self {
        Self { identity, entries: Vec::new(), hashes: Vec::new(), head: None, dir: None, dropped_on_open: 0 }
    }

    /// Opens or creates the log stored in `dir`.
    ///
    /// The head file is the commit point: records after the signed head
    /// (including a torn final record) are dropped and the file truncated.
    /// Anything inconsistent before the head is an error.
    pub fn open(dir: &Path, identity: ServiceIdentity) -> Result<Self, NotaryError> {
        fs::create_dir_all(dir).map_err(io_err)?;
        let log_path = dir.join(LOG_FILE);
        let records = match fs::read(&log_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(e)),
        };
        let head = match fs::read_to_string(dir.join(HEAD_FILE)) {
            Ok(text) => {
                let (head, key) = parse_head(&text)?;
                if key != identity.public_key() {
                    return Err(NotaryError::WrongNotary {
                        expected: identity.public_key().to_hex(),
                        found: key.to_hex(),
                    });
                }
                Some(head)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(io_err(e)),
        };
        let parsed = parse_records(&records);
        let committed = head.as_ref().map_or(0, |h| h.seq as usize + 1);
        if parsed.entries.len() < committed {
            let (index, detail) = parsed.error.clone().unwrap_or((parsed.entries.len(), "record missing".into()));
            return Err(NotaryError::Tampered { seq: index as u64, reason: detail });
        }
        let entries = parsed.entries[..committed].to_vec();
        let hashes = parsed.hashes[..committed].to_vec();
        if let LogCheck::Reject { seq, reason } = verify_log(&entries, &hashes, head.as_ref(), &identity.public_key()) {
            return Err(NotaryError::Tampered { seq, reason });
        }
        let keep = if committed == 0 { 0 } else { parsed.ends[committed - 1] };
        let mut dropped = 0;
        if records.len() > keep {
            dropped = parsed.entries.len() - committed + usize::from(parsed.error.is_some());
            let f = fs::OpenOptions::new().write(true).open(&log_path).map_err(io_err)?;
            f.set_len(keep as u64).map_err(io_err)?;
            f.sync_all().map_err(io_err)?;
        }
        Ok(Self { identity, entries, hashes, head, dir: Some(dir.to_owned()), dropped_on_open: dropped })
    }

    pub fn public_key(&self) -> PublicKey {
        self.identity.public_key()
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn hashes(&self) -> &[Digest] {
        &self.hashes
    }

    pub fn head(&self) -> Option<&LogHead> {
        self.head.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Uncommitted records discarded when the log was opened.
    pub fn dropped_on_open(&self) -> usize {
        self.dropped_on_open
    }

    pub fn verify(&self) -> LogCheck {
        verify_log(&self.entries, &self.hashes, self.head.as_ref(), &self.public_key())
    }

    /// Appends and re-signs the head. On a storage error the in-memory log
    /// is left unchanged.
    pub fn append(&mut self, pending: PendingObservation) -> Result<Observation, NotaryError> {
        let seq = self.entries.len() as u64;
        let entry = Observation {
            seq,
            observed_at: pending.observed_at,
            onion_address: pending.onion_address,
            clearnet_url: pending.clearnet_url,
            descriptor_digest: pending.descriptor_digest,
            signer_fingerprint: pending.signer_fingerprint,
            verdict: pending.verdict,
        };
        let prev = self.hashes.last().copied().unwrap_or(Digest::ZERO);
        let hash = chain_hash(&prev, &entry);
        let signature = crate::Signer::sign(&self.identity, &head_message(&hash, seq));
        let head = LogHead { seq, entry_hash: hash, signature };
        if let Some(dir) = &self.dir {
            persist(dir, &entry, &hash, &head, &self.public_key())?;
        }
        self.entries.push(entry.clone());
        self.hashes.push(hash);
        self.head = Some(head);
        Ok(entry)
    }

    pub fn records_text(&self) -> String {
        self.entries.iter().zip(&self.hashes).map(|(e, h)| render_record(e, h)).collect()
    }

    pub fn head_text(&self) -> Option<String> {
        self.head.as_ref().map(|h| render_head(h, &self.public_key()))
    }

    /// Entries for `onion` with their previous and own chain hashes.
    pub fn history_with_hashes(&self, onion: &OnionAddress) -> Vec<(Observation, Digest, Digest)> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.onion_address == *onion)
            .map(|(i, e)| {
                let prev = if i == 0 { Digest::ZERO } else { self.hashes[i - 1] };
                (e.clone(), prev, self.hashes[i])
            })
            .collect()
    }
}

fn persist(dir: &Path, entry: &Observation, hash: &Digest, head: &LogHead, key: &PublicKey) -> Result<(), NotaryError> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(dir.join(LOG_FILE)).map_err(io_err)?;
    f.write_all(render_record(entry, hash).as_bytes()).map_err(io_err)?;
    f.sync_data().map_err(io_err)?;
    let tmp = dir.join(format!("{HEAD_FILE}.tmp"));
    fs::write(&tmp, render_head(head, key)).map_err(io_err)?;
    fs::rename(&tmp, dir.join(HEAD_FILE)).map_err(io_err)
}

pub fn query_history(log: &NotaryLog, onion: &OnionAddress) -> Vec<Observation> {
    log.entries.iter().filter(|e| e.onion_address == *onion).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyChange {
    Stable,
    KeyChanged(u64),
    NewService,
}

/// Compares each signer with the previous non-zero one.
pub fn detect_key_change(history: &[Observation]) -> KeyChange {
    if history.is_empty() {
        return KeyChange::NewService;
    }
    let mut last: Option<Fingerprint> = None;
    for obs in history.iter().filter(|o| !o.signer_fingerprint.is_zero()) {
        match last {
            Some(prev) if prev != obs.signer_fingerprint => return KeyChange::KeyChanged(obs.seq),
            _ => last = Some(obs.signer_fingerprint),
        }
    }
    KeyChange::Stable
}

/// A registered pair the notary watches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub clearnet_url: String,
    pub onion_address: OnionAddress,
}

/// One `CLEARNET_URL ONION_ADDRESS` pair per line; blank lines and `#`
/// comments are ignored.
pub fn parse_targets(text: &str) -> Result<Vec<Target>, NotaryError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |detail: String| NotaryError::BadTarget { line: i + 1, detail };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [url, onion] = parts[..] else {
            return Err(bad("expected CLEARNET_URL ONION_ADDRESS".into()));
        };
        let url = ClearnetUrl::parse(url).map_err(|e| bad(e.to_string()))?;
        let onion_address = OnionAddress::parse(onion).map_err(|e| bad(e.to_string()))?;
        out.push(Target { clearnet_url: url.to_string(), onion_address });
    }
    Ok(out)
}

/// Reduces a report on `target` to what the log keeps. A descriptor that
/// names some other clearnet site than the registered one is a Mismatch.
pub fn distill(report: &VerificationReport, target: &Target) -> PendingObservation {
    let mut verdict = report.verdict;
    let named = report.descriptor.as_ref().map(|d| d.descriptor.clearnet_url.origin());
    let registered = ClearnetUrl::parse(&target.clearnet_url).map(|u| u.origin()).ok();
    if verdict.rank() > 0 && named != registered {
        verdict = Verdict::Mismatch;
    }
    let (descriptor_digest, signer_fingerprint) = match (&report.descriptor, verdict) {
        (_, Verdict::Missing) | (None, _) => (Digest::ZERO, report.signer_fingerprint.unwrap_or(Fingerprint::ZERO)),
        (Some(d), _) => (Digest(d.digest()), d.descriptor.signer_fingerprint),
    };
    PendingObservation {
        observed_at: report.checked_at,
        onion_address: target.onion_address,
        clearnet_url: target.clearnet_url.clone(),
        descriptor_digest,
        signer_fingerprint,
        verdict,
    }
}

fn check_target(net: &dyn Network, store: &TrustStore, target: &Target, clock: &dyn Clock) -> PendingObservation {
    let report = verify_pair(net, store, &target.onion_address.to_string(), clock, &VerifyOptions::default());
    distill(&report, target)
}

/// Verifies `target` from its onion side and appends the outcome.
pub fn observe(
    log: &mut NotaryLog,
    net: &dyn Network,
    store: &TrustStore,
    target: &Target,
    clock: &dyn Clock,
) -> Result<Observation, NotaryError> {
    log.append(check_target(net, store, target, clock))
}

#[derive(Debug, Clone, Copy)]
pub struct CrawlOptions {
    pub interval: Duration,
    /// `None` runs until stopped.
    pub cycles: Option<u64>,
    /// How the targets of one cycle are verified. Appends always follow
    /// input order.
    pub exec: Execution,
}

/// Observes every target once per cycle, sleeping `interval` between
/// cycles. Returns the number of observations appended.
pub fn run_crawl(
    log: &RwLock<NotaryLog>,
    net: &dyn Network,
    store: &TrustStore,
    targets: &[Target],
    clock: &dyn Clock,
    options: &CrawlOptions,
    stop: &AtomicBool,
) -> Result<u64, NotaryError> {
    let mut appended = 0;
    let mut cycle = 0;
    while options.cycles.map_or(true, |c| cycle < c) && !stop.load(Ordering::Relaxed) {
        if cycle > 0 {
            let until = Instant::now() + options.interval;
            while Instant::now() < until && !stop.load(Ordering::Relaxed) {
                std::thread::sleep((until - Instant::now()).min(Duration::from_millis(50)));
            }
            if stop.load(Ordering::Relaxed) {
                break;
            }
        }
        let pending = par::map_slice(targets, options.exec, |t| check_target(net, store, t, clock));
        let mut guard = log.write().unwrap_or_else(|e| e.into_inner());
        for p in pending {
            guard.append(p)?;
            appended += 1;
        }
        drop(guard);
        cycle += 1;
    }
    Ok(appended)
}
