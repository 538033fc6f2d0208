use std::io::Write;

use onionbind::onionid::{PublicKey, ServiceIdentity};
use onionbind::trust::{OwnerTrust, TrustStore};
use serde_json::json;

use super::{json_line, parse_fingerprint, read_identity};
use crate::args::{LevelArg, TrustCommand};
use crate::settings::Settings;
use crate::{exit, CliError, CmdResult};

fn level(l: LevelArg) -> OwnerTrust {
    match l {
        LevelArg::None => OwnerTrust::None,
        LevelArg::Marginal => OwnerTrust::Marginal,
        LevelArg::Full => OwnerTrust::Full,
        LevelArg::Ultimate => OwnerTrust::Ultimate,
    }
}

fn read_public_key(path: &std::path::Path) -> Result<PublicKey, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::new(format!("{}: {e}", path.display())))?;
    if let Ok(id) = ServiceIdentity::from_key_file(&text) {
        return Ok(id.public_key());
    }
    PublicKey::from_hex(text.trim())
        .map_err(|e| CliError::new(format!("{}: not a public or secret key file ({e})", path.display())))
}

pub fn run(t: &TrustCommand, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let mut store = TrustStore::load_or_default(&s.store)?;
    match t {
        TrustCommand::AddKey { file } => {
            let fpr = store.add_key(read_public_key(file)?);
            store.save(&s.store)?;
            if s.machine() {
                json_line(out, &json!({ "fingerprint": fpr.to_string() }))?;
            } else {
                writeln!(out, "added {fpr}")?;
            }
        }
        TrustCommand::Set { level: l, fingerprint } => {
            let fpr = parse_fingerprint(fingerprint)?;
            store.set_owner_trust(&fpr, level(*l))?;
            store.save(&s.store)?;
            if s.machine() {
                json_line(out, &json!({ "fingerprint": fpr.to_string(), "owner_trust": level(*l).as_str() }))?;
            } else {
                writeln!(out, "{fpr}: owner trust {}", level(*l))?;
            }
        }
        TrustCommand::Certify { certifier, subject, key } => {
            let certifier = parse_fingerprint(certifier)?;
            let subject = parse_fingerprint(subject)?;
            let path = key.clone().unwrap_or_else(|| s.keyring.join(format!("{certifier}.key")));
            let identity = read_identity(&path)?;
            if identity.fingerprint() != certifier {
                return Err(CliError::new(format!(
                    "{} holds key {}, not {certifier}",
                    path.display(),
                    identity.fingerprint()
                )));
            }
            store.certify(&identity, &subject)?;
            store.save(&s.store)?;
            if s.machine() {
                json_line(out, &json!({ "certifier": certifier.to_string(), "subject": subject.to_string() }))?;
            } else {
                writeln!(out, "{certifier} certified {subject}")?;
            }
        }
        TrustCommand::Status { fingerprint } => {
            let fpr = parse_fingerprint(fingerprint)?;
            let record = store.record(&fpr).ok_or_else(|| CliError::new(format!("{fpr} is not in the trust store")))?;
            let validity = store.key_validity(&fpr);
            let certifiers: Vec<String> = record.certifications.keys().map(|f| f.to_string()).collect();
            if s.machine() {
                json_line(
                    out,
                    &json!({
                        "fingerprint": fpr.to_string(),
                        "owner_trust": record.owner_trust.as_str(),
                        "validity": validity.to_string(),
                        "certified_by": certifiers,
                    }),
                )?;
            } else {
                writeln!(out, "fingerprint:  {fpr}")?;
                writeln!(out, "owner trust:  {}", record.owner_trust)?;
                writeln!(out, "validity:     {validity}")?;
                for c in &certifiers {
                    writeln!(out, "certified by: {c}")?;
                }
            }
        }
    }
    Ok(exit::OK)
}
