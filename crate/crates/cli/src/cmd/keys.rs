use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Duration;
use onionbind::clock::{Clock, SystemClock};
use onionbind::descriptor::{build_descriptor, sign_descriptor};
use onionbind::onionid::{generate_identity, vanity_search, OnionAddress, ServiceIdentity, VanityOptions};
use serde_json::json;

use super::{json_line, parse_fingerprint, parse_seed, parse_time, read_identity};
use crate::args::{BindArgs, KeygenArgs, VanityArgs};
use crate::settings::Settings;
use crate::{exit, CliError, CmdResult};

/// Writes the secret key file and a `.pub` file holding the public key.
fn save(identity: &ServiceIdentity, out: &Option<PathBuf>, s: &Settings) -> Result<PathBuf, CliError> {
    let path = out.clone().unwrap_or_else(|| s.keyring.join(format!("{}.key", identity.fingerprint())));
    identity.write_key_file(&path)?;
    let mut pub_path = path.clone().into_os_string();
    pub_path.push(".pub");
    std::fs::write(&pub_path, format!("{}\n", identity.public_key().to_hex()))?;
    Ok(path)
}

fn describe(
    out: &mut dyn Write,
    s: &Settings,
    identity: &ServiceIdentity,
    path: &Path,
    trials: Option<u64>,
) -> Result<(), CliError> {
    if s.machine() {
        let mut v = json!({
            "public_key": identity.public_key().to_hex(),
            "fingerprint": identity.fingerprint().to_string(),
            "onion_address": identity.onion_address().to_string(),
            "secret_key_file": path.display().to_string(),
        });
        if let Some(t) = trials {
            v["trials"] = json!(t);
        }
        return json_line(out, &v);
    }
    writeln!(out, "address:     {}", identity.onion_address())?;
    writeln!(out, "public key:  {}", identity.public_key().to_hex())?;
    writeln!(out, "fingerprint: {}", identity.fingerprint())?;
    writeln!(out, "secret key:  {}", path.display())?;
    if let Some(t) = trials {
        writeln!(out, "trials:      {t}")?;
    }
    Ok(())
}

pub fn keygen(a: &KeygenArgs, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let seed = a.seed.as_deref().map(parse_seed).transpose()?;
    let identity = generate_identity(seed.as_ref().map(|b| &b[..]))?;
    let path = save(&identity, &a.out, s)?;
    describe(out, s, &identity, &path, None)?;
    Ok(exit::OK)
}

pub fn vanity(a: &VanityArgs, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let seed = a.seed.as_deref().map(parse_seed).transpose()?;
    let options = VanityOptions { max_trials: a.max_trials, seed, jobs: a.jobs };
    let hit = vanity_search(&a.prefix, &options).map_err(|e| match e {
        onionbind::onionid::VanityError::InvalidPrefix { .. } => CliError::usage(e.to_string()),
        _ => CliError::new(e.to_string()),
    })?;
    let path = save(&hit.identity, &a.out, s)?;
    describe(out, s, &hit.identity, &path, Some(hit.trials))?;
    Ok(exit::OK)
}

pub fn bind(a: &BindArgs, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let signer = read_identity(&a.key)?;
    let onion = OnionAddress::parse(&a.onion).map_err(|e| CliError::usage(format!("--onion: {e}")))?;
    let tls = a.tls_fp.as_deref().map(parse_fingerprint).transpose()?;
    let issued = match &a.issued {
        Some(t) => parse_time(t)?,
        None => SystemClock.now(),
    };
    let d = build_descriptor(&a.clearnet, onion, issued, Duration::days(a.days), tls)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let signed = sign_descriptor(d, &signer);
    let armored = signed.to_armored();
    if let Some(path) = &a.out {
        std::fs::write(path, &armored)?;
    }
    if s.machine() {
        json_line(out, &json!({ "armored": armored, "descriptor_digest": hex::encode(signed.digest()) }))?;
    } else {
        write!(out, "{armored}")?;
    }
    Ok(exit::OK)
}
