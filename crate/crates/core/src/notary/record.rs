//! Text forms of log records and the head file.

use base64::Engine;

use super::{chain_fault, reject, verify_log, Digest, LogCheck, LogHead, NotaryError, Observation};
use crate::clock::parse_rfc3339;
use crate::onionid::{Fingerprint, OnionAddress, PublicKey};
use crate::verifier::Verdict;

pub const RECORD_BEGIN: &str = "-----BEGIN NOTARY OBSERVATION-----";
pub const RECORD_END: &str = "-----END NOTARY OBSERVATION-----";
const HEAD_MAGIC: &str = "onionbind-notary-head: 1";

pub fn render_record(entry: &Observation, hash: &Digest) -> String {
    let body = String::from_utf8(entry.canonical()).expect("canonical form is ascii");
    format!("{RECORD_BEGIN}\n{body}entry-hash: {hash}\n{RECORD_END}\n")
}

/// Records parsed up to the first bad one.
#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub entries: Vec<Observation>,
    pub hashes: Vec<Digest>,
    /// Byte offset just past each parsed record.
    pub ends: Vec<usize>,
    /// Index and reason of the first record that failed to parse.
    pub error: Option<(usize, String)>,
}

const FIELDS: [&str; 8] = ["seq", "observed", "onion", "clearnet", "digest", "signer", "verdict", "entry-hash"];
const RECORD_LINES: usize = FIELDS.len() + 2;

fn parse_one(lines: &[&[u8]]) -> Result<(Observation, Digest), String> {
    if lines[0] != RECORD_BEGIN.as_bytes() {
        return Err("missing begin marker".into());
    }
    if lines[RECORD_LINES - 1] != RECORD_END.as_bytes() {
        return Err("missing end marker".into());
    }
    let mut values = [""; FIELDS.len()];
    for (i, name) in FIELDS.iter().enumerate() {
        let line = std::str::from_utf8(lines[i + 1]).map_err(|_| "not utf-8")?;
        values[i] = line
            .strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(": "))
            .ok_or_else(|| format!("expected {name:?} line, got {line:?}"))?;
    }
    let seq = values[0].parse::<u64>().map_err(|e| format!("seq: {e}"))?;
    let observed_at = parse_rfc3339(values[1]).ok_or("bad observed time")?;
    let onion_address = OnionAddress::parse(values[2]).map_err(|e| e.to_string())?;
    let descriptor_digest: Digest = values[4].parse().map_err(|e| format!("digest: {e}"))?;
    let signer_fingerprint: Fingerprint = values[5].parse().map_err(|e| format!("signer: {e}"))?;
    let verdict = Verdict::parse(values[6]).ok_or("unknown verdict")?;
    let hash: Digest = values[7].parse().map_err(|e| format!("entry-hash: {e}"))?;
    let entry = Observation {
        seq,
        observed_at,
        onion_address,
        clearnet_url: values[3].to_owned(),
        descriptor_digest,
        signer_fingerprint,
        verdict,
    };
    // Only the exact rendering is accepted, so the bytes on disk are fully
    // determined by the chained values.
    let raw: Vec<u8> = lines[1..RECORD_LINES - 2].iter().flat_map(|l| [*l, b"\n"].concat()).collect();
    if raw != entry.canonical() {
        return Err("record is not in canonical form".into());
    }
    Ok((entry, hash))
}

/// Records are exactly ten newline-terminated lines each.
pub fn parse_records(bytes: &[u8]) -> ParsedRecords {
    let mut out = ParsedRecords::default();
    let mut lines: Vec<&[u8]> = Vec::with_capacity(RECORD_LINES);
    let mut offset = 0;
    let mut rest = bytes;
    while !rest.is_empty() {
        let index = out.entries.len();
        lines.clear();
        let mut used = 0;
        while lines.len() < RECORD_LINES {
            match rest[used..].iter().position(|&b| b == b'\n') {
                Some(n) => {
                    lines.push(&rest[used..used + n]);
                    used += n + 1;
                }
                None => break,
            }
        }
        if lines.len() < RECORD_LINES {
            out.error = Some((index, "record cut short".into()));
            break;
        }
        match parse_one(&lines) {
            Ok((entry, hash)) => {
                out.entries.push(entry);
                out.hashes.push(hash);
                offset += used;
                out.ends.push(offset);
                rest = &rest[used..];
            }
            Err(e) => {
                out.error = Some((index, e));
                break;
            }
        }
    }
    out
}

pub fn render_head(head: &LogHead, key: &PublicKey) -> String {
    let b64 = base64::engine::general_purpose::STANDARD;
    format!(
        "{HEAD_MAGIC}\nnotary-key: {}\nseq: {}\nentry-hash: {}\nsignature: {}\n",
        key.to_hex(),
        head.seq,
        head.entry_hash,
        b64.encode(&head.signature)
    )
}

pub fn parse_head(text: &str) -> Result<(LogHead, PublicKey), NotaryError> {
    let bad = |m: &str| NotaryError::BadHead(m.to_owned());
    let mut lines = text.lines();
    if lines.next() != Some(HEAD_MAGIC) {
        return Err(bad("unrecognised header"));
    }
    let mut field = |name: &str| {
        lines
            .next()
            .and_then(|l| l.strip_prefix(name))
            .and_then(|r| r.strip_prefix(": "))
            .ok_or_else(|| NotaryError::BadHead(format!("expected {name:?}")))
    };
    let key = PublicKey::from_hex(field("notary-key")?).map_err(|e| bad(&e.to_string()))?;
    let seq = field("seq")?.parse::<u64>().map_err(|e| bad(&e.to_string()))?;
    let entry_hash: Digest = field("entry-hash")?.parse().map_err(|e: String| bad(&e))?;
    let signature =
        base64::engine::general_purpose::STANDARD.decode(field("signature")?).map_err(|e| bad(&e.to_string()))?;
    Ok((LogHead { seq, entry_hash, signature }, key))
}

/// Checks a log as stored: the records file and the head file contents.
pub fn verify_log_files(records: &[u8], head: Option<&str>, key: &PublicKey) -> LogCheck {
    let parsed = parse_records(records);
    if let Some(fault) = chain_fault(&parsed.entries, &parsed.hashes) {
        return fault;
    }
    if let Some((index, reason)) = parsed.error {
        return reject(index as u64, reason);
    }
    let last = parsed.entries.len().saturating_sub(1) as u64;
    let head = match head.map(parse_head).transpose() {
        Ok(h) => h,
        Err(e) => return reject(last, e.to_string()),
    };
    match head {
        Some((_, head_key)) if head_key != *key => reject(last, "head names another notary key"),
        h => verify_log(&parsed.entries, &parsed.hashes, h.as_ref().map(|(h, _)| h), key),
    }
}
