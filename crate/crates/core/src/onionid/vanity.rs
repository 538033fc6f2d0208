use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::address::OnionAddress;
use super::identity::ServiceIdentity;
use crate::par::{self, Execution};

/// Longest prefix accepted; each extra character multiplies the expected
/// work by 32.
pub const MAX_PREFIX_LEN: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VanityError {
    #[error("invalid vanity prefix {prefix:?}: {reason}")]
    InvalidPrefix { prefix: String, reason: &'static str },
    #[error("no match after {0} trials")]
    SearchExhausted(u64),
}

#[derive(Debug, Clone)]
pub struct VanityOptions {
    pub max_trials: u64,
    /// Fixes the key stream. Results are reproducible only with `jobs == 1`.
    pub seed: Option<[u8; 32]>,
    /// Worker count; 0 means one per available thread.
    pub jobs: usize,
}

impl Default for VanityOptions {
    fn default() -> Self {
        Self { max_trials: 1 << 32, seed: None, jobs: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct VanityHit {
    pub identity: ServiceIdentity,
    pub address: OnionAddress,
    /// Keys generated across all workers, including the matching one.
    pub trials: u64,
}

fn normalize_prefix(prefix: &str) -> Result<String, VanityError> {
    let invalid = |reason| VanityError::InvalidPrefix { prefix: prefix.to_owned(), reason };
    if prefix.is_empty() {
        return Err(invalid("empty"));
    }
    if prefix.len() > MAX_PREFIX_LEN {
        return Err(invalid("longer than 8 characters"));
    }
    let lower = prefix.to_ascii_lowercase();
    if !lower.bytes().all(|b| matches!(b, b'a'..=b'z' | b'2'..=b'7')) {
        return Err(invalid("characters must be in a-z or 2-7"));
    }
    Ok(lower)
}

fn worker_rng(seed: Option<[u8; 32]>, worker: usize) -> ChaCha20Rng {
    match seed {
        Some(seed) if worker == 0 => ChaCha20Rng::from_seed(seed),
        Some(seed) => {
            let mut h = Sha256::new();
            h.update(seed);
            h.update((worker as u64).to_be_bytes());
            ChaCha20Rng::from_seed(h.finalize().into())
        }
        None => ChaCha20Rng::from_entropy(),
    }
}

struct Shared<'a> {
    prefix: &'a str,
    max_trials: u64,
    issued: AtomicU64,
    performed: AtomicU64,
    found: AtomicBool,
    hit: Mutex<Option<ServiceIdentity>>,
}

fn run_worker(shared: &Shared<'_>, mut rng: ChaCha20Rng) {
    let mut seed = [0u8; 32];
    while !shared.found.load(Ordering::Relaxed) {
        if shared.issued.fetch_add(1, Ordering::Relaxed) >= shared.max_trials {
            break;
        }
        rng.fill_bytes(&mut seed);
        let identity = ServiceIdentity::from_seed(&seed);
        let address = OnionAddress::from_public_key(&identity.public_key());
        shared.performed.fetch_add(1, Ordering::Relaxed);
        if address.label().starts_with(shared.prefix) {
            shared.found.store(true, Ordering::Relaxed);
            let mut slot = shared.hit.lock().expect("vanity result lock");
            slot.get_or_insert(identity);
            break;
        }
    }
}

/// Generates fresh keypairs until one derives an address starting with
/// `prefix`.
pub fn vanity_search(prefix: &str, options: &VanityOptions) -> Result<VanityHit, VanityError> {
    let prefix = normalize_prefix(prefix)?;
    let jobs = match options.jobs {
        0 => par::available_workers(),
        n => n,
    };
    let shared = Shared {
        prefix: &prefix,
        max_trials: options.max_trials,
        issued: AtomicU64::new(0),
        performed: AtomicU64::new(0),
        found: AtomicBool::new(false),
        hit: Mutex::new(None),
    };
    let exec = if jobs > 1 { Execution::Parallel } else { Execution::Sequential };
    par::map_indexed(jobs, exec, |w| run_worker(&shared, worker_rng(options.seed, w)));

    let trials = shared.performed.load(Ordering::Relaxed);
    let identity = shared.hit.into_inner().expect("vanity result lock");
    match identity {
        Some(identity) => {
            let address = identity.onion_address();
            Ok(VanityHit { identity, address, trials })
        }
        None => Err(VanityError::SearchExhausted(trials)),
    }
}

/// Trial counts of `runs` independent single-worker searches, run `i` seeded
/// from `SHA-256(base_seed || i)`. Runs are spread over workers according to
/// `exec`; the counts do not depend on it.
pub fn vanity_trial_counts(
    prefix: &str,
    runs: usize,
    base_seed: [u8; 32],
    max_trials: u64,
    exec: Execution,
) -> Result<Vec<u64>, VanityError> {
    normalize_prefix(prefix)?;
    par::map_indexed(runs, exec, |i| {
        let mut h = Sha256::new();
        h.update(base_seed);
        h.update((i as u64).to_be_bytes());
        let options = VanityOptions { max_trials, seed: Some(h.finalize().into()), jobs: 1 };
        vanity_search(prefix, &options).map(|hit| hit.trials)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded(seed: u8, max_trials: u64) -> VanityOptions {
        VanityOptions { max_trials, seed: Some([seed; 32]), jobs: 1 }
    }

    #[test]
    fn empty_and_bad_prefixes_rejected() {
        assert!(matches!(vanity_search("", &seeded(0, 10)), Err(VanityError::InvalidPrefix { .. })));
        assert!(matches!(vanity_search("a1", &seeded(0, 10)), Err(VanityError::InvalidPrefix { .. })));
        assert!(matches!(vanity_search("abcdefghi", &seeded(0, 10)), Err(VanityError::InvalidPrefix { .. })));
    }

    #[test]
    fn single_char_prefix_found() {
        let hit = vanity_search("a", &seeded(1, 10_000)).unwrap();
        assert!(hit.trials >= 1);
        assert!(hit.address.label().starts_with('a'));
        assert_eq!(hit.address, hit.identity.onion_address());
    }

    #[test]
    fn uppercase_prefix_is_normalized() {
        let hit = vanity_search("B", &seeded(2, 10_000)).unwrap();
        assert!(hit.address.label().starts_with('b'));
    }

    #[test]
    fn seeded_single_worker_is_deterministic() {
        let a = vanity_search("ab", &seeded(5, 100_000)).unwrap();
        let b = vanity_search("ab", &seeded(5, 100_000)).unwrap();
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.identity.public_key(), b.identity.public_key());
    }

    #[test]
    fn exhaustion_reports_trials() {
        // Eight characters need ~2^40 trials on average.
        assert_eq!(vanity_search("aaaaaaaa", &seeded(0, 50)).unwrap_err(), VanityError::SearchExhausted(50));
    }

    #[test]
    fn parallel_workers_report_total_trials() {
        let options = VanityOptions { max_trials: 200_000, seed: Some([4; 32]), jobs: 4 };
        let hit = vanity_search("ab", &options).unwrap();
        assert!(hit.address.label().starts_with("ab"));
        assert!(hit.trials >= 1 && hit.trials <= 200_000);
        let err = vanity_search("aaaaaaaa", &VanityOptions { max_trials: 100, seed: None, jobs: 3 }).unwrap_err();
        assert_eq!(err, VanityError::SearchExhausted(100));
    }

    #[test]
    fn trial_counts_independent_of_execution() {
        let seq = vanity_trial_counts("a", 20, [9; 32], 10_000, Execution::Sequential).unwrap();
        let par = vanity_trial_counts("a", 20, [9; 32], 10_000, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }
}
