//! HTTP interface: `GET /v1/head` and `GET /v1/history?onion=<address>`,
//! plus the matching client that checks what it receives.

use std::io;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::{chain_hash, Digest, LogHead, NotaryError, NotaryLog, Observation};
use crate::http::{self, HttpServer, Reply};
use crate::onionid::{OnionAddress, PublicKey};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadView {
    /// `None` for an empty log.
    pub seq: Option<u64>,
    pub entry_hash: Option<Digest>,
    /// Hex.
    pub signature: Option<String>,
    /// Hex.
    pub notary_public_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntryView {
    #[serde(flatten)]
    pub observation: Observation,
    pub prev_hash: Digest,
    pub entry_hash: Digest,
    pub head_seq: u64,
    pub head_hash: Digest,
    pub head_signature: String,
}

fn head_view(log: &NotaryLog) -> HeadView {
    let head = log.head();
    HeadView {
        seq: head.map(|h| h.seq),
        entry_hash: head.map(|h| h.entry_hash),
        signature: head.map(|h| hex::encode(&h.signature)),
        notary_public_key: log.public_key().to_hex(),
    }
}

fn history_view(log: &NotaryLog, onion: &OnionAddress) -> Vec<HistoryEntryView> {
    let Some(head) = log.head() else { return Vec::new() };
    log.history_with_hashes(onion)
        .into_iter()
        .map(|(observation, prev_hash, entry_hash)| HistoryEntryView {
            observation,
            prev_hash,
            entry_hash,
            head_seq: head.seq,
            head_hash: head.entry_hash,
            head_signature: hex::encode(&head.signature),
        })
        .collect()
}

fn route(log: &RwLock<NotaryLog>, method: &str, path: &str) -> Reply {
    if method != "GET" {
        return Reply::text(405, "GET only");
    }
    let (route, query) = path.split_once('?').unwrap_or((path, ""));
    let log = log.read().unwrap_or_else(|e| e.into_inner());
    match route {
        "/v1/head" => Reply::json(serde_json::to_string(&head_view(&log)).expect("serializable")),
        "/v1/history" => {
            let onion = url::form_urlencoded::parse(query.as_bytes()).find(|(k, _)| k == "onion").map(|(_, v)| v);
            match onion.as_deref().map(OnionAddress::parse) {
                Some(Ok(addr)) => Reply::json(serde_json::to_string(&history_view(&log, &addr)).expect("serializable")),
                Some(Err(e)) => Reply::text(400, e.to_string()),
                None => Reply::text(400, "missing onion parameter"),
            }
        }
        _ => Reply::text(404, "not found"),
    }
}

pub struct NotaryServer {
    http: HttpServer,
}

impl NotaryServer {
    /// Serves read-only views of `log`; each request sees one consistent
    /// snapshot.
    pub fn start(log: Arc<RwLock<NotaryLog>>, bind: &str) -> io::Result<Self> {
        let handler: http::Handler = Arc::new(move |req| route(&log, req.method, req.path));
        Ok(Self { http: HttpServer::start(bind, 4, handler)? })
    }

    pub fn addr(&self) -> SocketAddr {
        self.http.addr()
    }

    pub fn shutdown(self) {
        self.http.shutdown();
    }

    pub fn wait(self) {
        self.http.wait();
    }
}

/// A notary's checked answer about one onion address.
#[derive(Debug, Clone)]
pub struct NotaryAnswer {
    pub url: String,
    pub notary_key: PublicKey,
    pub head: Option<LogHead>,
    pub history: Vec<Observation>,
}

impl NotaryAnswer {
    pub fn latest(&self) -> Option<&Observation> {
        self.history.last()
    }
}

fn fetch_json<T: serde::de::DeserializeOwned>(agent: &ureq::Agent, url: &str) -> Result<T, String> {
    let (status, body) = http::get(agent, url, None)?;
    if status != 200 {
        return Err(format!("HTTP {status}: {}", String::from_utf8_lossy(&body).trim()));
    }
    serde_json::from_slice(&body).map_err(|e| format!("bad JSON: {e}"))
}

fn decode_sig(hex_sig: &str) -> Result<Vec<u8>, String> {
    hex::decode(hex_sig).map_err(|e| format!("bad signature hex: {e}"))
}

/// Fetches head and history from the notary at `base_url` and checks the
/// head signature and every returned entry hash.
pub fn fetch_notary(base_url: &str, onion: &OnionAddress) -> Result<NotaryAnswer, NotaryError> {
    let base = base_url.trim_end_matches('/');
    let remote = |detail: String| NotaryError::Remote { url: base.to_owned(), detail };
    let agent = http::agent();
    let head_view: HeadView = fetch_json(&agent, &format!("{base}/v1/head")).map_err(remote)?;
    let notary_key = PublicKey::from_hex(&head_view.notary_public_key).map_err(|e| remote(e.to_string()))?;
    let head = match (head_view.seq, head_view.entry_hash, &head_view.signature) {
        (Some(seq), Some(entry_hash), Some(sig)) => {
            let head = LogHead { seq, entry_hash, signature: decode_sig(sig).map_err(remote)? };
            if !head.verify(&notary_key) {
                return Err(remote("head signature does not verify".into()));
            }
            Some(head)
        }
        (None, None, None) => None,
        _ => return Err(remote("incomplete head".into())),
    };
    let entries: Vec<HistoryEntryView> =
        fetch_json(&agent, &format!("{base}/v1/history?onion={onion}")).map_err(remote)?;
    let mut history = Vec::with_capacity(entries.len());
    let mut last: Option<(u64, Digest)> = None;
    for e in entries {
        let Some(head) = &head else {
            return Err(remote("history from an empty log".into()));
        };
        let seq = e.observation.seq;
        let consistent = e.observation.onion_address == *onion
            && e.head_seq == head.seq
            && e.head_hash == head.entry_hash
            && decode_sig(&e.head_signature).ok().as_ref() == Some(&head.signature)
            && seq <= head.seq
            && chain_hash(&e.prev_hash, &e.observation) == e.entry_hash
            && (seq != head.seq || e.entry_hash == head.entry_hash)
            && (seq != 0 || e.prev_hash.is_zero())
            && match last {
                None => true,
                Some((s, h)) => s < seq && (s + 1 != seq || e.prev_hash == h),
            };
        if !consistent {
            return Err(remote(format!("history entry {seq} does not check out")));
        }
        last = Some((seq, e.entry_hash));
        history.push(e.observation);
    }
    Ok(NotaryAnswer { url: base.to_owned(), notary_key, head, history })
}
