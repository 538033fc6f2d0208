//! Website authentication through self-authenticating onion addresses.
//!
//! A site operator holds a service key whose digest *is* its onion address,
//! and publishes a signed binding descriptor on both the clearnet site and the
//! onion site. Verifiers fetch both copies, require them to agree byte for
//! byte, check the signature and the address/key link, and grade the signer
//! with a local web of trust. Notaries repeat that check on a schedule and
//! publish what they saw in a hash-chained, signed log.
//!
//! Modules:
//!
//! * [`onionid`]: service keys, onion address derivation, vanity search.
//! * [`descriptor`]: canonical binding descriptors and their armored form.
//! * [`trust`]: owner trust, certifications, key validity.
//! * [`simnet`]: in-memory network with onion/direct/gateway channels and
//!   adversary hooks, plus a loopback HTTP mode.
//! * [`verifier`]: end-to-end verification of a clearnet/onion pair.
//! * [`notary`]: observation logs, history queries, multi-notary quorum.

pub mod clock;
pub mod descriptor;
mod http;
pub mod notary;
pub mod onionid;
pub mod par;
pub mod simnet;
pub mod trust;
pub mod verifier;

pub use clock::{Clock, FixedClock, SystemClock, Timestamp};
pub use descriptor::{BindingDescriptor, SignedBindingDescriptor};
pub use simnet::{Channel, Network, SimNet};
pub use trust::{OwnerTrust, TrustStore, Validity};
pub use verifier::{Verdict, VerificationReport};

pub use onionid::{Fingerprint, OnionAddress, PublicKey, ServiceIdentity, Signer};
