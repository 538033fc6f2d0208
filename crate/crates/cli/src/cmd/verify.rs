use std::io::Write;

use onionbind::clock::{Clock, FixedClock, SystemClock};
use onionbind::simnet::Channel;
use onionbind::simnet::LoopbackNet;
use onionbind::trust::TrustStore;
use onionbind::verifier::{verify_pair, verify_tls_binding, CheckStatus, VerificationReport, VerifyOptions};

use super::{parse_fingerprint, parse_time};
use crate::args::{ChannelArg, VerifyArgs};
use crate::settings::Settings;
use crate::{exit, CliError, CmdResult};

pub fn channel(c: ChannelArg) -> Channel {
    match c {
        ChannelArg::Onion => Channel::OnionCircuit,
        ChannelArg::Direct => Channel::Direct,
        ChannelArg::Tor2web => Channel::Tor2webProxy,
    }
}

pub fn print_report(out: &mut dyn Write, report: &VerificationReport, machine: bool) -> Result<(), CliError> {
    if machine {
        writeln!(out, "{}", report.to_json())?;
        return Ok(());
    }
    writeln!(out, "verdict:   {}", report.verdict)?;
    let side = |s: &Option<String>| s.clone().unwrap_or_else(|| "?".into());
    writeln!(out, "pair:      {} <-> {}", side(&report.pair.clearnet_url), side(&report.pair.onion_address))?;
    if let Some(f) = report.signer_fingerprint {
        writeln!(out, "signer:    {f}")?;
    }
    writeln!(out, "assurance: {:?}", report.assurance)?;
    writeln!(out, "checked:   {}", onionbind::clock::format_rfc3339(&report.checked_at))?;
    for e in &report.evidence {
        let status = match e.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "skip",
        };
        writeln!(out, "  [{status}] {:<16} {}", format!("{:?}", e.check), e.detail)?;
    }
    Ok(())
}

pub fn run(a: &VerifyArgs, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let net = LoopbackNet::new(s.net_addr(&a.net.net)?);
    let store = TrustStore::load_or_default(&s.store)?;
    let clock: Box<dyn Clock> = match &a.now {
        Some(t) => Box::new(FixedClock(parse_time(t)?)),
        None => Box::new(SystemClock),
    };
    let tls = a.tls_fp.as_deref().map(parse_fingerprint).transpose()?;
    let options = VerifyOptions { onion_channel: channel(a.channel), ..Default::default() };
    let report = verify_pair(&net, &store, &a.entry, clock.as_ref(), &options);
    print_report(out, &report, s.machine())?;
    if let (Some(observed), false) = (tls, s.machine()) {
        writeln!(out, "tls:       {:?}", verify_tls_binding(&report, &observed))?;
    }
    Ok(exit::for_verdict(report.verdict))
}
