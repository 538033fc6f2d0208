use std::io::Write;
use std::sync::Arc;

use onionbind::clock::{Clock, SystemClock};
use onionbind::simnet::{LoopbackNet, LoopbackServer};
use onionbind::verifier::{verify_pair, VerifyOptions};

use super::verify::print_report;
use crate::args::DemoArgs;
use crate::demo::{self, ATTACKED_URL, EXPECTED_ATTACKED, EXPECTED_HONEST, HONEST_URL};
use crate::settings::Settings;
use crate::{exit, CmdResult};

pub fn run(a: &DemoArgs, s: &Settings, out: &mut dyn Write) -> CmdResult {
    let world = demo::build(SystemClock.now());
    let server = LoopbackServer::start(Arc::clone(&world.net), &format!("127.0.0.1:{}", a.port))?;
    let addr = server.addr();
    let net = LoopbackNet::new(addr);
    let mut ok = true;
    for (label, url, expected) in
        [("honest", HONEST_URL, EXPECTED_HONEST), ("attacked", ATTACKED_URL, EXPECTED_ATTACKED)]
    {
        let report = verify_pair(&net, &world.store, url, &SystemClock, &VerifyOptions::default());
        ok &= report.verdict == expected;
        if s.machine() {
            print_report(out, &report, true)?;
        } else {
            writeln!(
                out,
                "{label} pair {url}: {} (verify exit code {})",
                report.verdict,
                exit::for_verdict(report.verdict)
            )?;
        }
    }
    if !s.machine() {
        writeln!(out, "{}", if ok { "demo: as expected" } else { "demo: UNEXPECTED verdicts" })?;
    }
    if a.serve {
        if let Some(path) = &a.write_store {
            world.store.save(path)?;
        }
        if s.machine() {
            writeln!(out, "{}", serde_json::json!({ "net": addr.to_string() }))?;
        } else {
            let store = a.write_store.as_ref().map(|p| format!(" --store {}", p.display())).unwrap_or_default();
            writeln!(out, "serving simulated network on {addr}")?;
            writeln!(out, "  onionbind verify {HONEST_URL} --net {addr}{store}")?;
            writeln!(out, "  onionbind verify {} --net {addr}{store}", world.honest_onion)?;
            writeln!(out, "  onionbind verify {ATTACKED_URL} --net {addr}{store}")?;
        }
        out.flush()?;
        server.wait();
    }
    Ok(if ok { exit::OK } else { exit::FAILURE })
}
