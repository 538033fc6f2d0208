use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ed25519_dalek::{Signature, SigningKey, VerifyingKey};
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;

const SECRET_KEY_FILE_HEADER: &str = "onionbind-secret-key-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("seed must be {KEY_LEN} bytes, got {0}")]
    InvalidSeed(usize),
    #[error("public key must be {KEY_LEN} bytes, got {0}")]
    InvalidKey(usize),
    #[error("malformed hex: {0}")]
    BadHex(String),
    #[error("not a secret key file")]
    BadKeyFile,
    #[error("i/o error: {0}")]
    Io(String),
}

/// A 32-byte Ed25519 public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey([u8; KEY_LEN]);

impl PublicKey {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IdentityError> {
        let arr: [u8; KEY_LEN] = bytes.try_into().map_err(|_| IdentityError::InvalidKey(bytes.len()))?;
        Ok(Self(arr))
    }

    pub fn from_hex(text: &str) -> Result<Self, IdentityError> {
        let bytes = hex::decode(text.trim()).map_err(|e| IdentityError::BadHex(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// SHA-256 of the raw key bytes.
    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint(Sha256::digest(self.0).into())
    }

    pub fn verify(&self, message: &[u8], signature: &[u8]) -> bool {
        verify_detached(self, message, signature)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

impl fmt::Display for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// 256-bit key fingerprint, printed as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub const ZERO: Fingerprint = Fingerprint([0; 32]);

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 32]
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", hex::encode(self.0))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl FromStr for Fingerprint {
    type Err = IdentityError;

    /// Accepts exactly 64 lowercase hex characters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(IdentityError::BadHex(format!("expected 64 lowercase hex chars: {s:?}")));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| IdentityError::BadHex(e.to_string()))?;
        Ok(Self(out))
    }
}

impl serde::Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Anything that can produce detached signatures under a 32-byte public key.
///
/// Descriptors, certifications and notary heads are signed through this
/// trait; the concrete scheme is Ed25519 and verification goes through
/// [`verify_detached`].
pub trait Signer {
    fn public_key(&self) -> PublicKey;
    fn sign(&self, message: &[u8]) -> Vec<u8>;
}

/// A service keypair. The public half determines the onion address.
#[derive(Clone)]
pub struct ServiceIdentity {
    signing: SigningKey,
}

impl ServiceIdentity {
    pub fn from_seed(seed: &[u8; KEY_LEN]) -> Self {
        Self { signing: SigningKey::from_bytes(seed) }
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn secret_seed(&self) -> [u8; KEY_LEN] {
        self.signing.to_bytes()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.public_key().fingerprint()
    }

    pub fn onion_address(&self) -> super::OnionAddress {
        super::OnionAddress::from_public_key(&self.public_key())
    }

    /// Text form stored in secret key files.
    pub fn to_key_file(&self) -> String {
        format!("{SECRET_KEY_FILE_HEADER}\n{}\n", hex::encode(self.secret_seed()))
    }

    pub fn from_key_file(text: &str) -> Result<Self, IdentityError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(SECRET_KEY_FILE_HEADER) {
            return Err(IdentityError::BadKeyFile);
        }
        let seed_hex = lines.next().ok_or(IdentityError::BadKeyFile)?.trim();
        let seed = hex::decode(seed_hex).map_err(|e| IdentityError::BadHex(e.to_string()))?;
        generate_identity(Some(&seed))
    }

    /// Writes the secret key file readable by the owner only.
    pub fn write_key_file(&self, path: &Path) -> Result<(), IdentityError> {
        use std::io::Write;
        let io = |e: std::io::Error| IdentityError::Io(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut options = std::fs::OpenOptions::new();
        options.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            options.mode(0o600);
        }
        let mut file = options.open(path).map_err(io)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            file.set_permissions(std::fs::Permissions::from_mode(0o600)).map_err(io)?;
        }
        file.write_all(self.to_key_file().as_bytes()).map_err(io)
    }

    pub fn read_key_file(path: &Path) -> Result<Self, IdentityError> {
        let text = std::fs::read_to_string(path).map_err(|e| IdentityError::Io(format!("{}: {e}", path.display())))?;
        Self::from_key_file(&text)
    }
}

impl Signer for ServiceIdentity {
    fn public_key(&self) -> PublicKey {
        ServiceIdentity::public_key(self)
    }

    fn sign(&self, message: &[u8]) -> Vec<u8> {
        use ed25519_dalek::Signer as _;
        self.signing.sign(message).to_bytes().to_vec()
    }
}

impl fmt::Debug for ServiceIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServiceIdentity").field("public_key", &self.public_key()).finish_non_exhaustive()
    }
}

/// Builds an identity from 32 bytes of seed, or from the OS entropy source
/// when no seed is given.
pub fn generate_identity(seed: Option<&[u8]>) -> Result<ServiceIdentity, IdentityError> {
    let seed: [u8; KEY_LEN] = match seed {
        Some(bytes) => bytes.try_into().map_err(|_| IdentityError::InvalidSeed(bytes.len()))?,
        None => {
            let mut buf = [0u8; KEY_LEN];
            OsRng.fill_bytes(&mut buf);
            buf
        }
    };
    Ok(ServiceIdentity::from_seed(&seed))
}

/// Ed25519 strict verification. Malformed keys or signatures verify false.
pub fn verify_detached(key: &PublicKey, message: &[u8], signature: &[u8]) -> bool {
    let Ok(sig) = Signature::from_slice(signature) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(key.as_bytes()) else {
        return false;
    };
    vk.verify_strict(message, &sig).is_ok()
}
