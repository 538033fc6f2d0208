//! Binding descriptors: the signed statement that a clearnet URL and an onion
//! address belong together.
//!
//! The canonical payload is a fixed sequence of LF-terminated `name: value`
//! lines. The same armored block is published at [`WELL_KNOWN_PATH`] on both
//! sites, and a verifier requires the two copies to be byte-identical.

mod armor;

use std::fmt;

use chrono::Duration;
use thiserror::Error;

use crate::clock::{format_rfc3339, truncate_to_seconds, Timestamp};
use crate::onionid::{Fingerprint, OnionAddress, PublicKey, Signer};

pub use armor::{parse_armored, parse_armored_bytes, ParseError, ARMOR_BEGIN, ARMOR_END};

pub const DESCRIPTOR_VERSION: u32 = 1;
pub const WELL_KNOWN_PATH: &str = "/.well-known/onion-binding.txt";
pub const DEFAULT_LIFETIME_DAYS: i64 = 90;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DescriptorError {
    #[error("invalid clearnet url {0:?}: {1}")]
    InvalidUrl(String, &'static str),
    #[error("lifetime must be positive")]
    InvalidLifetime,
    #[error("issued_at must precede expires_at")]
    InvalidTimes,
    #[error("unsupported descriptor version {0}")]
    UnsupportedVersion(u32),
}

/// An absolute http or https URL with a non-empty host.
///
/// The text is kept exactly as supplied so that the canonical encoding
/// round-trips byte for byte.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ClearnetUrl {
    text: String,
    parsed: url::Url,
}

impl ClearnetUrl {
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let bad = |why| DescriptorError::InvalidUrl(text.to_owned(), why);
        if text.is_empty() || text.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(bad("empty or contains whitespace"));
        }
        let parsed = url::Url::parse(text).map_err(|_| bad("not an absolute url"))?;
        if !matches!(parsed.scheme(), "http" | "https") {
            return Err(bad("scheme must be http or https"));
        }
        match parsed.host_str() {
            Some(h) if !h.is_empty() => {}
            _ => return Err(bad("missing host")),
        }
        if parsed.host_str().is_some_and(|h| h.ends_with(".onion")) {
            return Err(bad("clearnet url names an onion host"));
        }
        Ok(Self { text: text.to_owned(), parsed })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn host(&self) -> &str {
        self.parsed.host_str().unwrap_or_default()
    }

    /// `scheme://host[:port]`
    pub fn origin(&self) -> String {
        self.parsed.origin().ascii_serialization()
    }

    pub fn well_known_url(&self) -> String {
        format!("{}{WELL_KNOWN_PATH}", self.origin())
    }
}

impl fmt::Display for ClearnetUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for ClearnetUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClearnetUrl({})", self.text)
    }
}

/// The unsigned statement. `signer_fingerprint` is all zeros until
/// [`sign_descriptor`] fills it in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingDescriptor {
    pub version: u32,
    pub clearnet_url: ClearnetUrl,
    pub onion_address: OnionAddress,
    pub issued_at: Timestamp,
    pub expires_at: Timestamp,
    pub signer_fingerprint: Fingerprint,
    pub tls_fingerprint: Option<Fingerprint>,
}

pub fn build_descriptor(
    clearnet_url: &str,
    onion_address: OnionAddress,
    issued_at: Timestamp,
    lifetime: Duration,
    tls_fingerprint: Option<Fingerprint>,
) -> Result<BindingDescriptor, DescriptorError> {
    let clearnet_url = ClearnetUrl::parse(clearnet_url)?;
    if lifetime <= Duration::zero() {
        return Err(DescriptorError::InvalidLifetime);
    }
    let issued_at = truncate_to_seconds(issued_at);
    let expires_at = truncate_to_seconds(issued_at + lifetime);
    if expires_at <= issued_at {
        return Err(DescriptorError::InvalidLifetime);
    }
    Ok(BindingDescriptor {
        version: DESCRIPTOR_VERSION,
        clearnet_url,
        onion_address,
        issued_at,
        expires_at,
        signer_fingerprint: Fingerprint::ZERO,
        tls_fingerprint,
    })
}

impl BindingDescriptor {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if self.version != DESCRIPTOR_VERSION {
            return Err(DescriptorError::UnsupportedVersion(self.version));
        }
        if self.issued_at >= self.expires_at {
            return Err(DescriptorError::InvalidTimes);
        }
        Ok(())
    }

    /// The byte string that gets signed.
    pub fn canonical_encode(&self) -> Vec<u8> {
        use std::fmt::Write;
        let mut out = String::with_capacity(320);
        let _ = writeln!(out, "onion-binding-version: {}", self.version);
        let _ = writeln!(out, "clearnet: {}", self.clearnet_url);
        let _ = writeln!(out, "onion: {}", self.onion_address);
        let _ = writeln!(out, "issued: {}", format_rfc3339(&self.issued_at));
        let _ = writeln!(out, "expires: {}", format_rfc3339(&self.expires_at));
        let _ = writeln!(out, "signer: {}", self.signer_fingerprint);
        if let Some(tls) = &self.tls_fingerprint {
            let _ = writeln!(out, "tls-fingerprint: {tls}");
        }
        out.into_bytes()
    }

    /// Whether `now` falls in `[issued - skew, expires)`.
    pub fn is_fresh(&self, now: Timestamp, skew: Duration) -> bool {
        self.issued_at - skew <= now && now < self.expires_at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SignatureRejection {
    #[error("signature does not verify over the canonical payload")]
    BadSignature,
    #[error("signer fingerprint does not match the signer key")]
    FingerprintMismatch,
}

/// A descriptor with its detached signature and the key that made it.
#[derive(Debug, Clone)]
pub struct SignedBindingDescriptor {
    pub descriptor: BindingDescriptor,
    pub signature: Vec<u8>,
    pub signer_public_key: PublicKey,
    /// Payload bytes exactly as received, when parsed from the wire.
    received_payload: Option<Vec<u8>>,
}

impl PartialEq for SignedBindingDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor == other.descriptor
            && self.signature == other.signature
            && self.signer_public_key == other.signer_public_key
    }
}

impl Eq for SignedBindingDescriptor {}

pub fn sign_descriptor(mut descriptor: BindingDescriptor, signer: &dyn Signer) -> SignedBindingDescriptor {
    let signer_public_key = signer.public_key();
    descriptor.signer_fingerprint = signer_public_key.fingerprint();
    let signature = signer.sign(&descriptor.canonical_encode());
    SignedBindingDescriptor { descriptor, signature, signer_public_key, received_payload: None }
}

impl SignedBindingDescriptor {
    pub fn new(descriptor: BindingDescriptor, signature: Vec<u8>, signer_public_key: PublicKey) -> Self {
        Self { descriptor, signature, signer_public_key, received_payload: None }
    }

    /// The signed payload. For parsed descriptors these are the received
    /// bytes, which may differ from the canonical encoding.
    pub fn payload(&self) -> Vec<u8> {
        self.received_payload.clone().unwrap_or_else(|| self.descriptor.canonical_encode())
    }

    pub fn verify_signature(&self) -> Result<(), SignatureRejection> {
        if self.signer_public_key.fingerprint() != self.descriptor.signer_fingerprint {
            return Err(SignatureRejection::FingerprintMismatch);
        }
        let canonical = self.descriptor.canonical_encode();
        if self.received_payload.as_ref().is_some_and(|raw| *raw != canonical) {
            return Err(SignatureRejection::BadSignature);
        }
        if !self.signer_public_key.verify(&canonical, &self.signature) {
            return Err(SignatureRejection::BadSignature);
        }
        Ok(())
    }

    /// SHA-256 of the canonical descriptor, as recorded by notaries.
    pub fn digest(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.descriptor.canonical_encode()).into()
    }
}
