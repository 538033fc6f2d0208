//! End-to-end verification of a clearnet/onion pair.
//!
//! Starting from either side, the verifier fetches the armored descriptor at
//! the well-known path, follows it to the other side, and runs the checks in
//! order: `FetchEntry`, `ParseEntry`, `FetchCounterpart`, `ParseCounterpart`,
//! `CrossMatch`, `SignatureValid`, `SelfAuth`, `Freshness`, `Trust`. Failing
//! checks map to verdicts by severity
//! `Missing > BadSignature > Mismatch > AddressKeyMismatch > Expired`. With
//! no failures the verdict is `ChannelDowngraded` if the onion side was not
//! reached over an onion circuit, `Authentic` if the signer is valid in the
//! local trust store, and `SelfConsistentUntrusted` otherwise.

use std::fmt;

use chrono::Duration;
use serde::Serialize;

use crate::clock::{format_rfc3339, Clock, Timestamp};
use crate::descriptor::{parse_armored_bytes, ClearnetUrl, SignedBindingDescriptor, WELL_KNOWN_PATH};
use crate::onionid::{Fingerprint, OnionAddress};
use crate::par::{self, Execution};
use crate::simnet::{split_url, Channel, Document, NetError, Network};
use crate::trust::{TrustStore, Validity};

/// Allowed clock skew on `issued`.
pub const ISSUED_SKEW_SECONDS: i64 = 5 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum Verdict {
    Authentic,
    SelfConsistentUntrusted,
    ChannelDowngraded,
    Mismatch,
    BadSignature,
    AddressKeyMismatch,
    Expired,
    Missing,
}

impl Verdict {
    pub const ALL: [Verdict; 8] = [
        Verdict::Authentic,
        Verdict::SelfConsistentUntrusted,
        Verdict::ChannelDowngraded,
        Verdict::Mismatch,
        Verdict::BadSignature,
        Verdict::AddressKeyMismatch,
        Verdict::Expired,
        Verdict::Missing,
    ];

    /// Failure verdicts from most to least severe.
    pub const SEVERITY: [Verdict; 5] =
        [Verdict::Missing, Verdict::BadSignature, Verdict::Mismatch, Verdict::AddressKeyMismatch, Verdict::Expired];

    /// Higher is better. Failures all rank below every passing verdict.
    pub fn rank(&self) -> u8 {
        match self {
            Verdict::Authentic => 3,
            Verdict::SelfConsistentUntrusted => 2,
            Verdict::ChannelDowngraded => 1,
            _ => 0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Authentic => "Authentic",
            Verdict::SelfConsistentUntrusted => "SelfConsistentUntrusted",
            Verdict::ChannelDowngraded => "ChannelDowngraded",
            Verdict::Mismatch => "Mismatch",
            Verdict::BadSignature => "BadSignature",
            Verdict::AddressKeyMismatch => "AddressKeyMismatch",
            Verdict::Expired => "Expired",
            Verdict::Missing => "Missing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assurance {
    Full,
    Downgraded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Check {
    FetchEntry,
    ParseEntry,
    FetchCounterpart,
    ParseCounterpart,
    CrossMatch,
    SignatureValid,
    SelfAuth,
    Freshness,
    Trust,
}

impl Check {
    /// The failure verdict this check maps to; `Trust` only grades.
    fn failure(&self) -> Option<Verdict> {
        match self {
            Check::FetchEntry | Check::ParseEntry | Check::FetchCounterpart | Check::ParseCounterpart => {
                Some(Verdict::Missing)
            }
            Check::CrossMatch => Some(Verdict::Mismatch),
            Check::SignatureValid => Some(Verdict::BadSignature),
            Check::SelfAuth => Some(Verdict::AddressKeyMismatch),
            Check::Freshness => Some(Verdict::Expired),
            Check::Trust => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub check: Check,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SitePair {
    pub clearnet_url: Option<String>,
    pub onion_address: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub pair: SitePair,
    pub signer_fingerprint: Option<Fingerprint>,
    pub assurance: Assurance,
    pub evidence: Vec<Evidence>,
    #[serde(serialize_with = "crate::clock::rfc3339::serialize")]
    pub checked_at: Timestamp,
    /// The entry-side descriptor, when one was parsed.
    #[serde(skip)]
    pub descriptor: Option<SignedBindingDescriptor>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn status_of(&self, check: Check) -> Option<CheckStatus> {
        self.evidence.iter().find(|e| e.check == check).map(|e| e.status)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Channel used for the onion side.
    pub onion_channel: Channel,
    pub issued_skew: Duration,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { onion_channel: Channel::OnionCircuit, issued_skew: Duration::seconds(ISSUED_SKEW_SECONDS) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelsUsed {
    pub clearnet: Option<Channel>,
    pub onion: Option<Channel>,
}

/// Full only when onion content arrived over an onion circuit; the clearnet
/// side carries no assurance of its own.
pub fn assess_channel(used: ChannelsUsed) -> Assurance {
    match used.onion {
        Some(Channel::OnionCircuit) => Assurance::Full,
        _ => Assurance::Downgraded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlsBinding {
    Bound,
    NotBound,
    NoClaim,
}

pub fn verify_tls_binding(report: &VerificationReport, observed: &Fingerprint) -> TlsBinding {
    match report.descriptor.as_ref().and_then(|d| d.descriptor.tls_fingerprint) {
        None => TlsBinding::NoClaim,
        Some(claimed) if claimed == *observed => TlsBinding::Bound,
        Some(_) => TlsBinding::NotBound,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Entry {
    Clearnet(ClearnetUrl),
    Onion(OnionAddress),
}

fn parse_entry(text: &str) -> Result<Entry, String> {
    if let Ok(addr) = OnionAddress::parse(text) {
        return Ok(Entry::Onion(addr));
    }
    let (host, _) = split_url(text).map_err(|e| e.to_string())?;
    if host.ends_with(".onion") {
        return OnionAddress::parse(&host).map(Entry::Onion).map_err(|e| e.to_string());
    }
    let with_scheme = if text.contains("://") { text.to_owned() } else { format!("http://{text}") };
    ClearnetUrl::parse(&with_scheme).map(Entry::Clearnet).map_err(|e| e.to_string())
}

fn onion_well_known(addr: &OnionAddress) -> String {
    format!("http://{addr}{WELL_KNOWN_PATH}")
}

struct Run {
    evidence: Vec<Evidence>,
}

impl Run {
    fn record(&mut self, check: Check, status: CheckStatus, detail: impl Into<String>) {
        self.evidence.push(Evidence { check, status, detail: detail.into() });
    }

    fn pass(&mut self, check: Check, detail: impl Into<String>) {
        self.record(check, CheckStatus::Pass, detail);
    }

    fn fail(&mut self, check: Check, detail: impl Into<String>) {
        self.record(check, CheckStatus::Fail, detail);
    }

    fn skip(&mut self, check: Check, detail: impl Into<String>) {
        self.record(check, CheckStatus::Skip, detail);
    }

    /// Records a fetch. A failed self-authentication is reported under
    /// `SelfAuth` rather than as a missing document.
    fn fetch(&mut self, check: Check, net: &dyn Network, url: &str, channel: Channel) -> Result<Document, bool> {
        match net.fetch(url, channel) {
            Ok(doc) => {
                self.pass(check, format!("{url} over {channel}"));
                Ok(doc)
            }
            Err(e @ NetError::DirectorySelfAuthFailure { .. }) => {
                self.skip(check, format!("{url}: not fetched, self-authentication failed"));
                self.fail(Check::SelfAuth, e.to_string());
                Err(true)
            }
            Err(e) => {
                self.fail(check, format!("{url}: {e}"));
                Err(false)
            }
        }
    }

    fn parse(&mut self, check: Check, doc: &Document) -> Option<SignedBindingDescriptor> {
        match parse_armored_bytes(&doc.body) {
            Ok(d) => {
                self.pass(check, "descriptor parsed");
                Some(d)
            }
            Err(e) => {
                self.fail(check, e.to_string());
                None
            }
        }
    }

    fn has(&self, check: Check) -> bool {
        self.evidence.iter().any(|e| e.check == check)
    }
}

fn skip_remaining(run: &mut Run, checks: &[Check], why: &str) {
    for &c in checks {
        if !run.has(c) {
            run.skip(c, why);
        }
    }
}

fn decide(evidence: &[Evidence], assurance: Assurance, signer_valid: bool) -> Verdict {
    let failed: Vec<Verdict> =
        evidence.iter().filter(|e| e.status == CheckStatus::Fail).filter_map(|e| e.check.failure()).collect();
    if let Some(v) = Verdict::SEVERITY.into_iter().find(|v| failed.contains(v)) {
        return v;
    }
    match (assurance, signer_valid) {
        (Assurance::Downgraded, _) => Verdict::ChannelDowngraded,
        (Assurance::Full, true) => Verdict::Authentic,
        (Assurance::Full, false) => Verdict::SelfConsistentUntrusted,
    }
}

const AFTER_FETCH: [Check; 8] = [
    Check::ParseEntry,
    Check::FetchCounterpart,
    Check::ParseCounterpart,
    Check::CrossMatch,
    Check::SignatureValid,
    Check::SelfAuth,
    Check::Freshness,
    Check::Trust,
];

/// Verifies the pair reached from `entry_point`, a clearnet URL or an onion
/// address.
pub fn verify_pair(
    net: &dyn Network,
    store: &TrustStore,
    entry_point: &str,
    clock: &dyn Clock,
    options: &VerifyOptions,
) -> VerificationReport {
    let checked_at = clock.now();
    let mut run = Run { evidence: Vec::new() };
    let mut pair = SitePair { clearnet_url: None, onion_address: None };
    let mut used = ChannelsUsed::default();

    let finish = |mut run: Run, pair, used, signer: Option<Fingerprint>, valid, descriptor| {
        let assurance = assess_channel(used);
        run.evidence.sort_by_key(|e| e.check);
        VerificationReport {
            verdict: decide(&run.evidence, assurance, valid),
            pair,
            signer_fingerprint: signer,
            assurance,
            evidence: run.evidence,
            checked_at,
            descriptor,
        }
    };

    let entry = match parse_entry(entry_point) {
        Ok(e) => e,
        Err(e) => {
            run.fail(Check::FetchEntry, format!("bad entry point {entry_point:?}: {e}"));
            skip_remaining(&mut run, &AFTER_FETCH, "no entry point");
            return finish(run, pair, used, None, false, None);
        }
    };
    let (entry_url, entry_channel) = match &entry {
        Entry::Clearnet(url) => {
            pair.clearnet_url = Some(url.to_string());
            used.clearnet = Some(Channel::Direct);
            (url.well_known_url(), Channel::Direct)
        }
        Entry::Onion(addr) => {
            pair.onion_address = Some(addr.to_string());
            used.onion = Some(options.onion_channel);
            (onion_well_known(addr), options.onion_channel)
        }
    };

    let entry_doc = match run.fetch(Check::FetchEntry, net, &entry_url, entry_channel) {
        Ok(doc) => doc,
        Err(_) => {
            skip_remaining(&mut run, &AFTER_FETCH, "entry descriptor unavailable");
            return finish(run, pair, used, None, false, None);
        }
    };
    let Some(primary) = run.parse(Check::ParseEntry, &entry_doc) else {
        skip_remaining(&mut run, &AFTER_FETCH, "entry descriptor unreadable");
        return finish(run, pair, used, None, false, None);
    };
    let d = &primary.descriptor;
    pair.clearnet_url.get_or_insert_with(|| d.clearnet_url.to_string());
    pair.onion_address.get_or_insert_with(|| d.onion_address.to_string());
    let signer = Some(d.signer_fingerprint);

    let (counter_url, counter_channel) = match &entry {
        Entry::Clearnet(_) => {
            used.onion = Some(options.onion_channel);
            (onion_well_known(&d.onion_address), options.onion_channel)
        }
        Entry::Onion(_) => {
            used.clearnet = Some(Channel::Direct);
            (d.clearnet_url.well_known_url(), Channel::Direct)
        }
    };
    let counter_doc = run.fetch(Check::FetchCounterpart, net, &counter_url, counter_channel).ok();
    let counterpart = match &counter_doc {
        Some(doc) => run.parse(Check::ParseCounterpart, doc),
        None => {
            run.skip(Check::ParseCounterpart, "counterpart unavailable");
            None
        }
    };

    // CrossMatch: both copies identical, and the descriptor names the site we
    // started from.
    let entry_named = match &entry {
        Entry::Clearnet(url) => d.clearnet_url.origin() == url.origin(),
        Entry::Onion(addr) => d.onion_address == *addr,
    };
    match &counterpart {
        _ if !entry_named => run.fail(Check::CrossMatch, "descriptor does not name the entry point"),
        Some(other) => {
            let same = other.descriptor.canonical_encode() == d.canonical_encode()
                && other.signer_public_key == primary.signer_public_key;
            if same {
                run.pass(Check::CrossMatch, "clearnet and onion descriptors are identical");
            } else {
                run.fail(Check::CrossMatch, "clearnet and onion descriptors differ");
            }
        }
        None => run.skip(Check::CrossMatch, "counterpart unavailable"),
    }

    let mut sig_problems = Vec::new();
    if let Err(e) = primary.verify_signature() {
        sig_problems.push(format!("entry: {e}"));
    }
    if let Some(Err(e)) = counterpart.as_ref().map(SignedBindingDescriptor::verify_signature) {
        sig_problems.push(format!("counterpart: {e}"));
    }
    if sig_problems.is_empty() {
        run.pass(Check::SignatureValid, format!("signed by {}", d.signer_fingerprint));
    } else {
        run.fail(Check::SignatureValid, sig_problems.join("; "));
    }

    if !run.has(Check::SelfAuth) {
        let onion_doc = match &entry {
            Entry::Onion(_) => Some(&entry_doc),
            Entry::Clearnet(_) => counter_doc.as_ref(),
        };
        match onion_doc {
            None => run.skip(Check::SelfAuth, "onion side unavailable"),
            Some(doc) => match doc.authenticated_service_key {
                None => run.skip(Check::SelfAuth, format!("no authenticated key over {}", doc.fetched_over)),
                Some(key) if OnionAddress::from_public_key(&key) == d.onion_address => {
                    run.pass(Check::SelfAuth, format!("service key derives to {}", d.onion_address))
                }
                Some(key) => run.fail(
                    Check::SelfAuth,
                    format!("service key derives to {}, not {}", OnionAddress::from_public_key(&key), d.onion_address),
                ),
            },
        }
    }

    if d.is_fresh(checked_at, options.issued_skew) {
        run.pass(Check::Freshness, format!("valid until {}", format_rfc3339(&d.expires_at)));
    } else {
        run.fail(
            Check::Freshness,
            format!(
                "valid {} to {}, now {}",
                format_rfc3339(&d.issued_at),
                format_rfc3339(&d.expires_at),
                format_rfc3339(&checked_at)
            ),
        );
    }

    let validity = store.key_validity(&d.signer_fingerprint);
    if validity == Validity::Valid {
        run.pass(Check::Trust, "signer valid");
    } else {
        run.fail(Check::Trust, format!("signer {validity}"));
    }

    finish(run, pair, used, signer, validity == Validity::Valid, Some(primary))
}

/// Verifies many entry points against one network and store snapshot.
pub fn verify_many(
    net: &dyn Network,
    store: &TrustStore,
    entry_points: &[String],
    clock: &dyn Clock,
    options: &VerifyOptions,
    exec: Execution,
) -> Vec<VerificationReport> {
    par::map_slice(entry_points, exec, |e| verify_pair(net, store, e, clock, options))
}
