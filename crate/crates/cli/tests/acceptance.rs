//! Acceptance checks, one PASS/FAIL line each. Exits nonzero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use onionbind::descriptor::parse_armored_bytes;
use onionbind::onionid::{derive_addresses, generate_identity, vanity_trial_counts, LABEL_LEN};
use onionbind::par::Execution;
use onionbind::simnet::{AdversaryHook, Channel};
use onionbind::{SignedBindingDescriptor, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::corruption::{attacks, run_case, table, world};
use support::log_fixture::{fixture_log, mutation_sweep, structural_sweep, Mutations};
use support::quorum_sweep::sweep;
use support::wot_oracle::{oracle_validity, random_store};

const EXEC: Execution = Execution::Parallel;
const FIXTURE: &[u8] = include_bytes!("../../core/tests/fixtures/cupcakebridge.armored");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{detail}; {took:.2?}"))
    } else {
        Err(format!("{detail}; took {took:.2?}, limit {limit:?}"))
    }
}

fn address_format() -> Outcome {
    let start = Instant::now();
    let keys: Vec<_> = (0..10_000).map(|_| generate_identity(None).unwrap().public_key()).collect();
    let bad = derive_addresses(&keys, EXEC)
        .iter()
        .filter(|a| {
            let label = a.label();
            label.len() != LABEL_LEN || !label.bytes().all(|b| b.is_ascii_lowercase() || (b'2'..=b'7').contains(&b))
        })
        .count();
    if bad > 0 {
        return Err(format!("{bad} of 10000 addresses malformed"));
    }
    within(Duration::from_secs(5), start, "10000 addresses, 0 violations".into())
}

fn vanity_statistics() -> Outcome {
    let start = Instant::now();
    let mean = |prefix: &str, runs: usize| -> Result<f64, String> {
        let counts = vanity_trial_counts(prefix, runs, [0x7a; 32], 1 << 24, EXEC).map_err(|e| e.to_string())?;
        Ok(counts.iter().sum::<u64>() as f64 / runs as f64)
    };
    let one = mean("a", 300)?;
    let two = mean("aa", 200)?;
    let detail = format!("mean trials a={one:.1} (32 +/-20%), aa={two:.1} (1024 +/-25%)");
    if (one - 32.0).abs() > 0.20 * 32.0 || (two - 1024.0).abs() > 0.25 * 1024.0 {
        return Err(detail);
    }
    within(Duration::from_secs(30), start, detail)
}

fn descriptor_integrity() -> Outcome {
    let start = Instant::now();
    let signed = parse_armored_bytes(FIXTURE).map_err(|e| e.to_string())?;
    signed.verify_signature().map_err(|e| format!("fixture itself rejected: {e:?}"))?;
    let mut tried = 0usize;
    let mut accepted = Vec::new();
    // Everything before the final newline: payload, key and signature
    // lines plus the armor markers.
    let mut text = FIXTURE.to_vec();
    for i in 0..FIXTURE.len() - 1 {
        for v in 0..=255u8 {
            if v == FIXTURE[i] {
                continue;
            }
            text[i] = v;
            tried += 1;
            if parse_armored_bytes(&text).is_ok_and(|d| d.verify_signature().is_ok()) {
                accepted.push(format!("byte {i} = {v:#04x}"));
            }
        }
        text[i] = FIXTURE[i];
    }
    let mut signature = signed.signature.clone();
    for i in 0..signature.len() {
        for v in 0..=255u8 {
            if v == signed.signature[i] {
                continue;
            }
            signature[i] = v;
            tried += 1;
            let forged =
                SignedBindingDescriptor::new(signed.descriptor.clone(), signature.clone(), signed.signer_public_key);
            if forged.verify_signature().is_ok() {
                accepted.push(format!("signature byte {i} = {v:#04x}"));
            }
        }
        signature[i] = signed.signature[i];
    }
    if !accepted.is_empty() {
        return Err(format!("{} of {tried} mutations accepted, first {}", accepted.len(), accepted[0]));
    }
    within(Duration::from_secs(10), start, format!("{tried} single-byte mutations, all rejected"))
}

fn corruption_matrix() -> Outcome {
    let cases = table();
    let mut wrong: Vec<String> = cases
        .iter()
        .filter_map(|c| {
            let got = run_case(c).verdict;
            (got != c.expected).then(|| format!("{} gave {got}, expected {}", c.name(), c.expected))
        })
        .collect();
    let all = attacks();
    for a in &all {
        let got = (a.run)(&world(0)).verdict;
        if got != a.expected {
            wrong.push(format!("{} gave {got}, expected {}", a.name, a.expected));
        }
    }
    let total = cases.len() + all.len();
    match wrong.first() {
        None => Ok(format!("{} table cases and {} attacks agree", cases.len(), all.len())),
        Some(first) => Err(format!("{} of {total} disagree, first: {first}", wrong.len())),
    }
}

fn self_auth_soundness() -> Outcome {
    let mut attacked_authentic = 0;
    let mut honest_authentic = 0;
    for seed in 1..=100u64 {
        let w = world(seed);
        let honest = if seed % 2 == 0 { w.verify_clearnet() } else { w.verify(&w.onion_host(), Channel::OnionCircuit) };
        honest_authentic += usize::from(honest.verdict == Verdict::Authentic);
        w.net.install_adversary(AdversaryHook::DirectoryOverride(w.service.onion_address(), w.attacker.public_key()));
        let attacked =
            if seed % 2 == 0 { w.verify_clearnet() } else { w.verify(&w.onion_host(), Channel::OnionCircuit) };
        attacked_authentic += usize::from(attacked.verdict == Verdict::Authentic);
    }
    let detail = format!("attacked: {attacked_authentic}/100 Authentic; honest: {honest_authentic}/100 Authentic");
    if attacked_authentic == 0 && honest_authentic == 100 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn downgrade_rule() -> Outcome {
    let mut wrong = Vec::new();
    for seed in 0..100u64 {
        let w = world(seed);
        for entry in [w.clearnet_url(), w.onion_host()] {
            let got = w.verify(&entry, Channel::Tor2webProxy).verdict;
            if got != Verdict::ChannelDowngraded {
                wrong.push(format!("seed {seed} {entry}: {got}"));
            }
        }
    }
    match wrong.first() {
        None => Ok("200 honest verifications over tor2web all ChannelDowngraded".into()),
        Some(first) => Err(format!("{} wrong, first {first}", wrong.len())),
    }
}

fn web_of_trust() -> Outcome {
    let start = Instant::now();
    let ids: Vec<_> = (1..=6u8).map(|i| generate_identity(Some(&[i; 32])).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let (mut keys, mut mismatches) = (0usize, Vec::new());
    for graph in 0..2500 {
        let store = random_store(&mut rng, &ids, 6);
        for rec in store.records() {
            keys += 1;
            let (got, want) = (store.key_validity(&rec.fingerprint), oracle_validity(&store, &rec.fingerprint));
            if got != want {
                mismatches.push(format!("graph {graph} key {}: {got:?} vs {want:?}", rec.fingerprint));
            }
        }
    }
    if let Some(first) = mismatches.first() {
        return Err(format!("{} mismatches, first {first}", mismatches.len()));
    }
    within(Duration::from_secs(60), start, format!("2500 graphs, {keys} keys, 0 mismatches"))
}

fn log_tamper_evidence() -> Outcome {
    let log = fixture_log();
    if !log.verify().is_accept() {
        return Err("fixture log rejected".into());
    }
    let bytes = mutation_sweep(&log, Mutations::AllValues, EXEC);
    let structure = structural_sweep(&log);
    let failures: Vec<_> = bytes.failures.iter().chain(&structure.failures).collect();
    let detail = format!("{} byte mutations and {} reorderings/truncations", bytes.tried, structure.tried);
    match failures.first() {
        None => Ok(format!("{detail}, all rejected at the right seq")),
        Some(first) => Err(format!("{detail}; {} failures, first {first}", failures.len())),
    }
}

fn quorum_safety() -> Outcome {
    let result = sweep(5);
    let detail = format!(
        "{} scenarios, {} counterexamples, {} captured with enough liars",
        result.scenarios,
        result.counterexamples.len(),
        result.captured_with_enough_liars
    );
    if result.counterexamples.is_empty() && result.captured_with_enough_liars > 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}: {:?}", result.counterexamples.first()))
    }
}

fn end_to_end_demo() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_onionbind");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("config.toml");
    std::fs::write(&config, "").map_err(|e| e.to_string())?;
    let store = dir.path().join("store.txt");
    let base = |cmd: &mut Command| {
        cmd.arg("--config").arg(&config).arg("--store").arg(&store).arg("--keyring").arg(dir.path().join("keys"));
    };

    let mut demo = Command::new(bin);
    base(&mut demo);
    let out = demo.arg("demo").output().map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("demo exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stdout)));
    }

    let mut serve = Command::new(bin);
    base(&mut serve);
    serve.args(["demo", "--serve", "--port", "0", "--write-store"]).arg(&store);
    let mut child = serve.stdout(Stdio::piped()).stderr(Stdio::null()).spawn().map_err(|e| e.to_string())?;
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let net = lines
        .by_ref()
        .map_while(Result::ok)
        .find_map(|l| l.strip_prefix("serving simulated network on ").map(str::to_owned));
    std::thread::spawn(move || lines.for_each(drop));
    let result = (|| {
        let net = net.ok_or("demo --serve printed no address")?;
        let mut codes = Vec::new();
        for url in ["http://honest.example", "http://attacked.example"] {
            let mut verify = Command::new(bin);
            base(&mut verify);
            let status = verify
                .args(["verify", url, "--net", &net])
                .stdout(Stdio::null())
                .status()
                .map_err(|e| e.to_string())?;
            codes.push(status.code());
        }
        if codes != [Some(0), Some(22)] {
            return Err(format!("verify exit codes {codes:?}, expected honest 0 and attacked 22"));
        }
        Ok(())
    })();
    let _ = child.kill();
    let _ = child.wait();
    result?;
    within(Duration::from_secs(10), start, "demo exit 0; verify over loopback: honest 0, attacked 22".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("address format", address_format),
        ("vanity statistics", vanity_statistics),
        ("descriptor integrity", descriptor_integrity),
        ("corruption matrix", corruption_matrix),
        ("self-auth soundness", self_auth_soundness),
        ("downgrade rule", downgrade_rule),
        ("web-of-trust oracle", web_of_trust),
        ("log tamper evidence", log_tamper_evidence),
        ("quorum safety", quorum_safety),
        ("end-to-end demo", end_to_end_demo),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
