//! Process exit codes.

use onionbind::Verdict;

pub const OK: i32 = 0;
pub const FAILURE: i32 = 1;
pub const USAGE: i32 = 2;
pub const NO_QUORUM: i32 = 30;
pub const CONFLICT: i32 = 31;

/// `verify` exits 0 only for Authentic.
pub fn for_verdict(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Authentic => 0,
        Verdict::SelfConsistentUntrusted => 10,
        Verdict::ChannelDowngraded => 11,
        Verdict::Mismatch => 20,
        Verdict::BadSignature => 21,
        Verdict::AddressKeyMismatch => 22,
        Verdict::Expired => 23,
        Verdict::Missing => 24,
    }
}
