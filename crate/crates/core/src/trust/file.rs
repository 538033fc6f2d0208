//! Line-based store file.
//!
//! ```text
//! onionbind-truststore: 1
//!
//! key: <hex public key>
//! owner-trust: none|marginal|full|ultimate
//! cert: <certifier fingerprint> <base64 signature>
//!
//! pending: <subject fingerprint> <certifier fingerprint> <base64 signature>
//! ```
//!
//! Certifications are re-verified on load.

use std::fmt::Write as _;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::{OwnerTrust, TrustError, TrustStore};
use crate::onionid::{Fingerprint, PublicKey};

const HEADER: &str = "onionbind-truststore: 1";

impl TrustStore {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        for rec in self.records.values() {
            let _ = writeln!(out);
            let _ = writeln!(out, "key: {}", rec.public_key.to_hex());
            let _ = writeln!(out, "owner-trust: {}", rec.owner_trust);
            for (certifier, sig) in &rec.certifications {
                let _ = writeln!(out, "cert: {certifier} {}", STANDARD.encode(sig));
            }
        }
        if !self.pending.is_empty() {
            let _ = writeln!(out);
        }
        for (subject, certs) in &self.pending {
            for (certifier, sig) in certs {
                let _ = writeln!(out, "pending: {subject} {certifier} {}", STANDARD.encode(sig));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TrustError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, HEADER)) => {}
            _ => return Err(TrustError::Format { line: 1, detail: format!("expected {HEADER:?}") }),
        }
        let fmt_err = |line, detail: String| TrustError::Format { line, detail };

        let mut store = TrustStore::new();
        let mut current: Option<Fingerprint> = None;
        // Certifications are applied after all keys are known.
        let mut certs: Vec<(usize, Fingerprint, Fingerprint, Vec<u8>)> = Vec::new();
        let mut pending: Vec<(usize, Fingerprint, Fingerprint, Vec<u8>)> = Vec::new();

        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (name, value) = line.split_once(": ").ok_or_else(|| fmt_err(n, format!("bad line {line:?}")))?;
            match name {
                "key" => {
                    let key = PublicKey::from_hex(value).map_err(|e| fmt_err(n, e.to_string()))?;
                    current = Some(store.add_key(key));
                }
                "owner-trust" => {
                    let fpr = current.ok_or_else(|| fmt_err(n, "owner-trust before key".into()))?;
                    let level: OwnerTrust = value.parse().map_err(|e| fmt_err(n, e))?;
                    store.set_owner_trust(&fpr, level)?;
                }
                "cert" => {
                    let subject = current.ok_or_else(|| fmt_err(n, "cert before key".into()))?;
                    let mut parts = value.split(' ');
                    let certifier = parse_fpr(parts.next(), n)?;
                    let sig = parse_sig(parts.next(), n)?;
                    certs.push((n, subject, certifier, sig));
                }
                "pending" => {
                    let mut parts = value.split(' ');
                    let subject = parse_fpr(parts.next(), n)?;
                    let certifier = parse_fpr(parts.next(), n)?;
                    let sig = parse_sig(parts.next(), n)?;
                    pending.push((n, subject, certifier, sig));
                }
                other => return Err(fmt_err(n, format!("unknown field {other:?}"))),
            }
        }
        for (n, subject, certifier, sig) in certs {
            store.import_certification(&subject, &certifier, sig).map_err(|e| fmt_err(n, e.to_string()))?;
        }
        for (_, subject, certifier, sig) in pending {
            store.pending.entry(subject).or_default().insert(certifier, sig);
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self, TrustError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrustError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Loads `path`, or returns an empty store if it does not exist.
    pub fn load_or_default(path: &Path) -> Result<Self, TrustError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }

    /// Writes through a temporary file and renames over `path`.
    pub fn save(&self, path: &Path) -> Result<(), TrustError> {
        let io = |e: std::io::Error| TrustError::Io(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }
}

fn parse_fpr(part: Option<&str>, line: usize) -> Result<Fingerprint, TrustError> {
    part.ok_or_else(|| TrustError::Format { line, detail: "missing fingerprint".into() })?
        .parse()
        .map_err(|e: crate::onionid::IdentityError| TrustError::Format { line, detail: e.to_string() })
}

fn parse_sig(part: Option<&str>, line: usize) -> Result<Vec<u8>, TrustError> {
    let text = part.ok_or_else(|| TrustError::Format { line, detail: "missing signature".into() })?;
    STANDARD.decode(text).map_err(|_| TrustError::Format { line, detail: "bad base64 signature".into() })
}
