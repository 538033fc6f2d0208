mod demo;
mod keys;
mod notary;
mod trust;
mod verify;

use std::io::Write;
use std::path::Path;

use onionbind::clock::{parse_rfc3339, Timestamp};
use onionbind::onionid::{Fingerprint, ServiceIdentity};

use crate::args::Command;
use crate::settings::Settings;
use crate::{CliError, CmdResult};

pub fn run(command: &Command, s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match command {
        Command::Keygen(a) => keys::keygen(a, s, out),
        Command::Vanity(a) => keys::vanity(a, s, out),
        Command::Bind(a) => keys::bind(a, s, out),
        Command::Trust(t) => trust::run(t, s, out),
        Command::Verify(a) => verify::run(a, s, out),
        Command::Notary(n) => notary::run(n, s, out, err),
        Command::Demo(a) => demo::run(a, s, out),
    }
}

pub(crate) fn parse_seed(hex_seed: &str) -> Result<[u8; 32], CliError> {
    let mut seed = [0u8; 32];
    hex::decode_to_slice(hex_seed, &mut seed).map_err(|_| CliError::usage("seed must be 64 hex digits"))?;
    Ok(seed)
}

pub(crate) fn parse_fingerprint(text: &str) -> Result<Fingerprint, CliError> {
    text.to_ascii_lowercase().parse().map_err(|e| CliError::usage(format!("bad fingerprint {text:?}: {e}")))
}

pub(crate) fn parse_time(text: &str) -> Result<Timestamp, CliError> {
    parse_rfc3339(text).ok_or_else(|| CliError::usage(format!("bad time {text:?}; expected e.g. 2026-01-01T00:00:00Z")))
}

pub(crate) fn read_identity(path: &Path) -> Result<ServiceIdentity, CliError> {
    ServiceIdentity::read_key_file(path).map_err(|e| CliError::new(format!("{}: {e}", path.display())))
}

pub(crate) fn json_line(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{value}")?;
    Ok(())
}
