//! The armored wire form published at the well-known path.
//!
//! ```text
//! -----BEGIN ONION BINDING-----
//! <canonical payload lines>
//! signer-key: <base64 public key>
//! signature: <base64 signature>
//! -----END ONION BINDING-----
//! ```

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use thiserror::Error;

use super::{BindingDescriptor, ClearnetUrl, SignedBindingDescriptor};
use crate::clock::parse_rfc3339;
use crate::onionid::{Fingerprint, OnionAddress, PublicKey};

pub const ARMOR_BEGIN: &str = "-----BEGIN ONION BINDING-----";
pub const ARMOR_END: &str = "-----END ONION BINDING-----";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("armor markers missing")]
    MissingMarkers,
    #[error("block is not valid UTF-8")]
    NotUtf8,
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("duplicate field {0:?}")]
    DuplicateField(String),
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("bad base64 in {0:?}")]
    BadBase64(&'static str),
    #[error("invalid value for {field:?}: {detail}")]
    InvalidValue { field: &'static str, detail: String },
}

const FIELDS: [&str; 9] = [
    "onion-binding-version",
    "clearnet",
    "onion",
    "issued",
    "expires",
    "signer",
    "tls-fingerprint",
    "signer-key",
    "signature",
];
const PAYLOAD_FIELDS: usize = 7;

impl SignedBindingDescriptor {
    pub fn to_armored(&self) -> String {
        let mut out = String::with_capacity(512);
        out.push_str(ARMOR_BEGIN);
        out.push('\n');
        out.push_str(&String::from_utf8(self.descriptor.canonical_encode()).expect("utf-8 payload"));
        out.push_str("signer-key: ");
        out.push_str(&STANDARD.encode(self.signer_public_key.as_bytes()));
        out.push('\n');
        out.push_str("signature: ");
        out.push_str(&STANDARD.encode(&self.signature));
        out.push('\n');
        out.push_str(ARMOR_END);
        out.push('\n');
        out
    }
}

pub fn parse_armored_bytes(bytes: &[u8]) -> Result<SignedBindingDescriptor, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError::NotUtf8)?;
    parse_armored(text)
}

/// Parses one armored block. Surrounding whitespace is ignored and CR before
/// LF is tolerated while reading fields, but the received payload bytes are
/// kept verbatim: anything other than the exact canonical encoding will not
/// verify.
pub fn parse_armored(text: &str) -> Result<SignedBindingDescriptor, ParseError> {
    let text = text.trim();
    let mut lines: Vec<&str> = text.split('\n').collect();
    let strip_cr = |l: &str| l.strip_suffix('\r').unwrap_or(l).to_owned();
    if lines.len() < 2 || strip_cr(lines[0]) != ARMOR_BEGIN || strip_cr(lines[lines.len() - 1]) != ARMOR_END {
        return Err(ParseError::MissingMarkers);
    }
    lines.remove(0);
    lines.pop();

    let mut values: [Option<String>; FIELDS.len()] = Default::default();
    let mut received_payload = Vec::new();
    for raw in lines {
        let line = strip_cr(raw);
        let Some((name, value)) = line.split_once(": ") else {
            return Err(ParseError::UnknownField(line));
        };
        let idx = FIELDS.iter().position(|f| *f == name).ok_or_else(|| ParseError::UnknownField(name.to_owned()))?;
        if values[idx].is_some() {
            return Err(ParseError::DuplicateField(name.to_owned()));
        }
        values[idx] = Some(value.to_owned());
        if idx < PAYLOAD_FIELDS {
            received_payload.extend_from_slice(raw.as_bytes());
            received_payload.push(b'\n');
        }
    }

    let take = |i: usize| values[i].clone().ok_or(ParseError::MissingField(FIELDS[i]));
    let invalid = |field: &'static str, detail: String| ParseError::InvalidValue { field, detail };

    let version = take(0)?;
    let version: u32 = version
        .parse()
        .ok()
        .filter(|v: &u32| v.to_string() == version)
        .ok_or_else(|| invalid("onion-binding-version", version.clone()))?;
    let clearnet_url = ClearnetUrl::parse(&take(1)?).map_err(|e| invalid("clearnet", e.to_string()))?;
    let onion = take(2)?;
    let onion_address = OnionAddress::parse(&onion)
        .ok()
        .filter(|a| a.to_string() == onion)
        .ok_or_else(|| invalid("onion", onion.clone()))?;
    let issued = take(3)?;
    let issued_at = parse_rfc3339(&issued).ok_or_else(|| invalid("issued", issued.clone()))?;
    let expires = take(4)?;
    let expires_at = parse_rfc3339(&expires).ok_or_else(|| invalid("expires", expires.clone()))?;
    let signer = take(5)?;
    let signer_fingerprint: Fingerprint = signer.parse().map_err(|_| invalid("signer", signer.clone()))?;
    let tls_fingerprint = match &values[6] {
        Some(v) => Some(v.parse::<Fingerprint>().map_err(|_| invalid("tls-fingerprint", v.clone()))?),
        None => None,
    };
    let key_bytes = STANDARD.decode(take(7)?).map_err(|_| ParseError::BadBase64("signer-key"))?;
    let signer_public_key = PublicKey::from_bytes(&key_bytes).map_err(|e| invalid("signer-key", e.to_string()))?;
    let signature = STANDARD.decode(take(8)?).map_err(|_| ParseError::BadBase64("signature"))?;

    let descriptor = BindingDescriptor {
        version,
        clearnet_url,
        onion_address,
        issued_at,
        expires_at,
        signer_fingerprint,
        tls_fingerprint,
    };
    descriptor.validate().map_err(|e| invalid("descriptor", e.to_string()))?;
    Ok(SignedBindingDescriptor { descriptor, signature, signer_public_key, received_payload: Some(received_payload) })
}
