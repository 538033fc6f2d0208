//! Service identities and onion addresses.
//!
//! An onion label is the first 80 bits of
//! `SHA-256("genuine-onion-v1" || public_key)`, written as 16 characters of
//! lowercase RFC 4648 base32. The address therefore commits to the key: a
//! party that can present a key deriving to the label holds the service
//! identity. This derivation is self-consistent but deliberately not the
//! one real Tor uses.

mod address;
mod identity;
mod vanity;

pub use address::{
    derive_addresses, derive_onion_address, AddressError, MalformedReason, OnionAddress, LABEL_LEN, ONION_SUFFIX,
};
pub use identity::{
    generate_identity, verify_detached, Fingerprint, IdentityError, PublicKey, ServiceIdentity, Signer, KEY_LEN,
    SIGNATURE_LEN,
};
pub use vanity::{vanity_search, vanity_trial_counts, VanityError, VanityHit, VanityOptions, MAX_PREFIX_LEN};
