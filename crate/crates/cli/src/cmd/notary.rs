use std::io::Write;
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use onionbind::clock::{format_rfc3339, SystemClock};
use onionbind::notary::{
    default_threshold, detect_key_change, fetch_notary, parse_targets, quorum_verdict, run_crawl, CrawlOptions,
    KeyChange, NotaryError, NotaryLog, NotaryServer, Observation, QuorumVerdict,
};
use onionbind::onionid::{generate_identity, OnionAddress, ServiceIdentity};
use onionbind::par::Execution;
use onionbind::simnet::LoopbackNet;
use onionbind::trust::TrustStore;
use serde_json::json;

use crate::args::{NotaryCommand, QueryArgs, ServeArgs};
use crate::settings::Settings;
use crate::{exit, CliError, CmdResult};

pub fn run(n: &NotaryCommand, s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match n {
        NotaryCommand::Serve(a) => serve(a, s, out),
        NotaryCommand::Query(a) => query(a, s, out, err),
    }
}

fn notary_identity(a: &ServeArgs, s: &Settings) -> Result<ServiceIdentity, CliError> {
    let path = a.key.clone().unwrap_or_else(|| s.keyring.join("notary.key"));
    if path.exists() {
        return super::read_identity(&path);
    }
    let id = generate_identity(None)?;
    id.write_key_file(&path)?;
    Ok(id)
}

fn serve(a: &ServeArgs, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let targets_text =
        std::fs::read_to_string(&a.targets).map_err(|e| CliError::new(format!("{}: {e}", a.targets.display())))?;
    let targets = parse_targets(&targets_text).map_err(|e| CliError::usage(e.to_string()))?;
    let net = LoopbackNet::new(s.net_addr(&a.net.net)?);
    let store = TrustStore::load_or_default(&s.store)?;
    let identity = notary_identity(a, s)?;
    let key = identity.public_key();
    let log_dir = a.log.clone().unwrap_or_else(|| s.data_dir.join("notary"));
    let log = NotaryLog::open(&log_dir, identity)?;
    let recovered = log.dropped_on_open();
    let log = Arc::new(RwLock::new(log));
    let server = NotaryServer::start(Arc::clone(&log), &format!("{}:{}", a.bind, a.port))?;
    let url = format!("http://{}", server.addr());
    if s.machine() {
        writeln!(out, "{}", json!({ "listening": url, "notary_public_key": key.to_hex(), "targets": targets.len() }))?;
    } else {
        writeln!(out, "notary listening on {url}")?;
        writeln!(out, "notary key {}; {} targets; log in {}", key.to_hex(), targets.len(), log_dir.display())?;
        if recovered > 0 {
            writeln!(out, "dropped {recovered} uncommitted record(s) from the log tail")?;
        }
    }
    out.flush()?;

    let options =
        CrawlOptions { interval: Duration::from_secs(a.interval), cycles: a.cycles, exec: Execution::default() };
    let stop = AtomicBool::new(false);
    let appended = run_crawl(&log, &net, &store, &targets, &SystemClock, &options, &stop)?;
    if !s.machine() {
        writeln!(out, "crawl finished: {appended} observations")?;
    }
    out.flush()?;
    if !a.exit_after_crawl {
        server.wait();
    }
    Ok(exit::OK)
}

fn observation_json(o: &Observation) -> serde_json::Value {
    serde_json::to_value(o).expect("serializable")
}

fn key_change_str(k: KeyChange) -> String {
    match k {
        KeyChange::Stable => "Stable".into(),
        KeyChange::NewService => "NewService".into(),
        KeyChange::KeyChanged(seq) => format!("KeyChanged({seq})"),
    }
}

fn query(a: &QueryArgs, s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let onion = OnionAddress::parse(&a.onion).map_err(|e| CliError::usage(format!("--onion: {e}")))?;
    let mut reports = Vec::new();
    let mut notaries = Vec::new();
    for url in &a.notaries {
        match fetch_notary(url, &onion) {
            Ok(answer) => {
                let change = detect_key_change(&answer.history);
                if let Some(latest) = answer.latest() {
                    reports.push((answer.notary_key.to_hex(), latest.clone()));
                }
                notaries.push(json!({
                    "url": answer.url,
                    "notary_public_key": answer.notary_key.to_hex(),
                    "head_seq": answer.head.as_ref().map(|h| h.seq),
                    "observations": answer.history.len(),
                    "latest": answer.latest().map(observation_json),
                    "key_change": key_change_str(change),
                    "error": null,
                }));
            }
            Err(e) => {
                writeln!(err, "onionbind: {e}")?;
                notaries.push(json!({ "url": url, "error": e.to_string() }));
            }
        }
    }
    if reports.is_empty() {
        return Err(CliError::new(format!("no notary has observed {onion}")));
    }
    let k = a.quorum.unwrap_or_else(|| default_threshold(reports.len()));
    let verdict = quorum_verdict(&reports, Some(k)).map_err(|e| match e {
        NotaryError::InvalidThreshold { .. } => CliError::usage(e.to_string()),
        e => CliError::new(e.to_string()),
    })?;
    let (outcome, code) = match verdict {
        QuorumVerdict::Agreed { .. } => ("Agreed", exit::OK),
        QuorumVerdict::NoQuorum => ("NoQuorum", exit::NO_QUORUM),
        QuorumVerdict::Conflict => ("Conflict", exit::CONFLICT),
    };
    let agreed = match verdict {
        QuorumVerdict::Agreed { descriptor_digest, signer_fingerprint } => {
            Some((descriptor_digest.to_string(), signer_fingerprint.to_string()))
        }
        _ => None,
    };
    if s.machine() {
        let v = json!({
            "onion_address": onion.to_string(),
            "threshold": k,
            "reports": reports.len(),
            "outcome": outcome,
            "descriptor_digest": agreed.as_ref().map(|a| a.0.clone()),
            "signer_fingerprint": agreed.as_ref().map(|a| a.1.clone()),
            "notaries": notaries,
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(
            out,
            "{onion}: {outcome} ({} of {} notaries answered, threshold {k})",
            reports.len(),
            a.notaries.len()
        )?;
        if let Some((digest, signer)) = &agreed {
            writeln!(out, "  descriptor {digest}")?;
            writeln!(out, "  signer     {signer}")?;
        }
        for (id, obs) in &reports {
            writeln!(
                out,
                "  notary {}…: seq {} at {} {} digest {}",
                &id[..16],
                obs.seq,
                format_rfc3339(&obs.observed_at),
                obs.verdict,
                obs.descriptor_digest
            )?;
        }
    }
    Ok(code)
}
