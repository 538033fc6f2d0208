use std::fmt;
use std::str::FromStr;

use data_encoding::BASE32_NOPAD;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::identity::PublicKey;
use crate::par::{self, Execution};

/// Characters in an onion label.
pub const LABEL_LEN: usize = 16;
pub const ONION_SUFFIX: &str = ".onion";

const DOMAIN_TAG: &[u8] = b"genuine-onion-v1";
const TRUNCATED_BYTES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalformedReason {
    WrongLength(usize),
    InvalidCharacter(char),
    WrongSuffix,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddressError {
    #[error("malformed onion address at position {position}: {reason:?}")]
    MalformedAddress { position: usize, reason: MalformedReason },
    #[error("public key must be 32 bytes, got {0}")]
    InvalidKey(usize),
}

/// A 16-character lowercase base32 onion label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OnionAddress([u8; LABEL_LEN]);

fn is_label_char(c: u8) -> bool {
    matches!(c, b'a'..=b'z' | b'2'..=b'7')
}

impl OnionAddress {
    pub fn from_public_key(key: &PublicKey) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(DOMAIN_TAG);
        hasher.update(key.as_bytes());
        let digest = hasher.finalize();
        let encoded = BASE32_NOPAD.encode(&digest[..TRUNCATED_BYTES]).to_ascii_lowercase();
        let mut label = [0u8; LABEL_LEN];
        label.copy_from_slice(encoded.as_bytes());
        Self(label)
    }

    /// Accepts `<label>.onion` or a bare label, in any case.
    pub fn parse(text: &str) -> Result<Self, AddressError> {
        let lower = text.to_ascii_lowercase();
        let label = lower.strip_suffix(ONION_SUFFIX).unwrap_or(&lower);
        let malformed = |position, reason| AddressError::MalformedAddress { position, reason };
        for (i, ch) in label.char_indices() {
            if ch == '.' {
                return Err(malformed(i, MalformedReason::WrongSuffix));
            }
            if i >= LABEL_LEN {
                return Err(malformed(LABEL_LEN, MalformedReason::WrongLength(label.chars().count())));
            }
            if !ch.is_ascii() || !is_label_char(ch as u8) {
                return Err(malformed(i, MalformedReason::InvalidCharacter(ch)));
            }
        }
        if label.len() != LABEL_LEN {
            return Err(malformed(label.len(), MalformedReason::WrongLength(label.len())));
        }
        let mut out = [0u8; LABEL_LEN];
        out.copy_from_slice(label.as_bytes());
        Ok(Self(out))
    }

    pub fn label(&self) -> &str {
        // Only label characters are ever stored.
        std::str::from_utf8(&self.0).expect("ascii label")
    }

    /// The 80 bits the label encodes.
    pub fn to_bits(&self) -> [u8; TRUNCATED_BYTES] {
        let decoded = BASE32_NOPAD.decode(self.label().to_ascii_uppercase().as_bytes()).expect("valid label decodes");
        let mut out = [0u8; TRUNCATED_BYTES];
        out.copy_from_slice(&decoded);
        out
    }

    pub fn matches_key(&self, key: &PublicKey) -> bool {
        Self::from_public_key(key) == *self
    }
}

/// Derives the onion address from raw public key bytes.
pub fn derive_onion_address(public_key: &[u8]) -> Result<OnionAddress, AddressError> {
    let key = PublicKey::from_bytes(public_key).map_err(|_| AddressError::InvalidKey(public_key.len()))?;
    Ok(OnionAddress::from_public_key(&key))
}

pub fn derive_addresses(keys: &[PublicKey], exec: Execution) -> Vec<OnionAddress> {
    par::map_slice(keys, exec, OnionAddress::from_public_key)
}

impl fmt::Display for OnionAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{ONION_SUFFIX}", self.label())
    }
}

impl fmt::Debug for OnionAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OnionAddress({})", self.label())
    }
}

impl FromStr for OnionAddress {
    type Err = AddressError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl serde::Serialize for OnionAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for OnionAddress {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}
