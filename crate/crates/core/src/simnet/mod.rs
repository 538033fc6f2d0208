//! Simulated network.
//!
//! Three channels reach content:
//!
//! * [`Channel::OnionCircuit`] reaches `.onion` hosts only. The directory
//!   supplies the service key and the fetch fails unless that key derives to
//!   the requested address; the key is handed to the caller.
//! * [`Channel::Direct`] reaches clearnet hosts only.
//! * [`Channel::Tor2webProxy`] reaches onion content through a gateway
//!   hostname `<label>.tor2web.example`. The gateway talks to the service,
//!   the reader only talks to the gateway, so no service key is returned.
//!
//! Adversary hooks can override directory entries, rewrite bodies in transit
//! on clearnet and gateway hosts, or remove documents.

mod loopback;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::onionid::{OnionAddress, PublicKey, ServiceIdentity, ONION_SUFFIX};

pub use loopback::{LoopbackNet, LoopbackServer, DIRECTORY_HOST};

pub const GATEWAY_SUFFIX: &str = ".tor2web.example";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Channel {
    OnionCircuit,
    Direct,
    Tor2webProxy,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::OnionCircuit => "onion",
            Channel::Direct => "direct",
            Channel::Tor2webProxy => "tor2web",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub body: Vec<u8>,
    pub fetched_over: Channel,
    /// Present only for `OnionCircuit` fetches.
    pub authenticated_service_key: Option<PublicKey>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("not found: {host}{path}")]
    NotFound { host: String, path: String },
    #[error("channel {channel} cannot reach {host}")]
    ChannelMismatch { host: String, channel: Channel },
    #[error("directory key for {address} derives to a different address")]
    DirectorySelfAuthFailure { address: OnionAddress, key: PublicKey },
    #[error("registered key derives to {derived}, not {host}")]
    AddressKeyMismatch { host: OnionAddress, derived: OnionAddress },
    #[error("onion sites must be registered with their service identity")]
    MissingIdentity,
    #[error("bad url {0:?}")]
    BadUrl(String),
    #[error("transport: {0}")]
    Transport(String),
}

/// Anything that serves documents over the three channel kinds.
pub trait Network: Send + Sync {
    fn fetch(&self, url: &str, channel: Channel) -> Result<Document, NetError>;
}

/// The raw layer beneath the channel rules: hosts map to documents and the
/// directory maps onion addresses to keys. Gateway hosts are resolved here,
/// on the far side of the reader's connection.
pub trait Transport: Send + Sync {
    fn get(&self, host: &str, path: &str) -> Result<Vec<u8>, NetError>;
    fn directory_lookup(&self, address: &OnionAddress) -> Result<PublicKey, NetError>;
}

pub type Transform = Arc<dyn Fn(&[u8]) -> Vec<u8> + Send + Sync>;

#[derive(Clone)]
pub enum AdversaryHook {
    /// Directory answers `key` for `address`.
    DirectoryOverride(OnionAddress, PublicKey),
    /// Rewrites bodies served from a clearnet or gateway host.
    TamperInTransit(String, Transform),
    RemoveDocument(String, String),
}

impl fmt::Debug for AdversaryHook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryHook::DirectoryOverride(a, k) => write!(f, "DirectoryOverride({a}, {k})"),
            AdversaryHook::TamperInTransit(h, _) => write!(f, "TamperInTransit({h})"),
            AdversaryHook::RemoveDocument(h, p) => write!(f, "RemoveDocument({h}{p})"),
        }
    }
}

/// Whether `host` names an onion site.
pub fn is_onion_host(host: &str) -> bool {
    host.ends_with(ONION_SUFFIX)
}

pub fn gateway_host(address: &OnionAddress) -> String {
    format!("{}{GATEWAY_SUFFIX}", address.label())
}

/// Splits a URL into lowercase host and path-with-query. A missing scheme is
/// read as `http://`.
pub fn split_url(url: &str) -> Result<(String, String), NetError> {
    let full = if url.contains("://") { url.to_owned() } else { format!("http://{url}") };
    let parsed = url::Url::parse(&full).map_err(|_| NetError::BadUrl(url.to_owned()))?;
    let host = parsed.host_str().filter(|h| !h.is_empty()).ok_or_else(|| NetError::BadUrl(url.to_owned()))?;
    let mut path = parsed.path().to_owned();
    if let Some(q) = parsed.query() {
        path.push('?');
        path.push_str(q);
    }
    Ok((host.to_ascii_lowercase(), path))
}

/// Applies the channel reachability and self-authentication rules on top of
/// a transport.
pub fn channel_fetch<T: Transport + ?Sized>(transport: &T, url: &str, channel: Channel) -> Result<Document, NetError> {
    let (host, path) = split_url(url)?;
    let mismatch = || NetError::ChannelMismatch { host: host.clone(), channel };
    let onion = is_onion_host(&host);
    let gateway = host.ends_with(GATEWAY_SUFFIX);
    match channel {
        Channel::OnionCircuit => {
            if !onion {
                return Err(mismatch());
            }
            let address = OnionAddress::parse(&host).map_err(|_| NetError::BadUrl(url.to_owned()))?;
            let key = transport.directory_lookup(&address)?;
            if !address.matches_key(&key) {
                return Err(NetError::DirectorySelfAuthFailure { address, key });
            }
            let body = transport.get(&host, &path)?;
            Ok(Document { body, fetched_over: channel, authenticated_service_key: Some(key) })
        }
        Channel::Direct => {
            if onion || gateway {
                return Err(mismatch());
            }
            let body = transport.get(&host, &path)?;
            Ok(Document { body, fetched_over: channel, authenticated_service_key: None })
        }
        Channel::Tor2webProxy => {
            let gateway_name = if onion {
                let address = OnionAddress::parse(&host).map_err(|_| NetError::BadUrl(url.to_owned()))?;
                gateway_host(&address)
            } else if gateway {
                host.clone()
            } else {
                return Err(mismatch());
            };
            let body = transport.get(&gateway_name, &path)?;
            Ok(Document { body, fetched_over: channel, authenticated_service_key: None })
        }
    }
}

#[derive(Default)]
struct State {
    documents: HashMap<(String, String), Vec<u8>>,
    directory: HashMap<OnionAddress, PublicKey>,
    overrides: HashMap<OnionAddress, PublicKey>,
    tamper: HashMap<String, Vec<Transform>>,
    removed: HashSet<(String, String)>,
}

/// Deterministic in-memory network. Shared by reference; every method takes
/// `&self` and hook installation is atomic with respect to fetches.
#[derive(Default)]
pub struct SimNet {
    state: RwLock<State>,
}

impl fmt::Debug for SimNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.read();
        f.debug_struct("SimNet")
            .field("documents", &s.documents.len())
            .field("directory", &s.directory.len())
            .finish_non_exhaustive()
    }
}

impl SimNet {
    pub fn new() -> Self {
        Self::default()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Serves `body` at `host` + `path`. Onion hosts must come with the
    /// identity whose key derives to them; that key is entered in the
    /// directory.
    pub fn register_site(
        &self,
        host: &str,
        path: &str,
        body: impl Into<Vec<u8>>,
        service_identity: Option<&ServiceIdentity>,
    ) -> Result<(), NetError> {
        let host = host.to_ascii_lowercase();
        let mut state = self.write();
        if is_onion_host(&host) {
            let address = OnionAddress::parse(&host).map_err(|_| NetError::BadUrl(host.clone()))?;
            let identity = service_identity.ok_or(NetError::MissingIdentity)?;
            let derived = identity.onion_address();
            if derived != address {
                return Err(NetError::AddressKeyMismatch { host: address, derived });
            }
            state.directory.insert(address, identity.public_key());
        }
        state.documents.insert((host, path.to_owned()), body.into());
        Ok(())
    }

    pub fn unregister_site(&self, host: &str, path: &str) {
        self.write().documents.remove(&(host.to_ascii_lowercase(), path.to_owned()));
    }

    pub fn install_adversary(&self, hook: AdversaryHook) {
        let mut state = self.write();
        match hook {
            AdversaryHook::DirectoryOverride(address, key) => {
                state.overrides.insert(address, key);
            }
            AdversaryHook::TamperInTransit(host, transform) => {
                state.tamper.entry(host.to_ascii_lowercase()).or_default().push(transform);
            }
            AdversaryHook::RemoveDocument(host, path) => {
                state.removed.insert((host.to_ascii_lowercase(), path));
            }
        }
    }

    pub fn clear_adversaries(&self) {
        let mut state = self.write();
        state.overrides.clear();
        state.tamper.clear();
        state.removed.clear();
    }

    /// Directory answer for `address`, including any override. Callers must
    /// re-derive the address to detect a substitute key.
    pub fn lookup_service_key(&self, address: &OnionAddress) -> Result<PublicKey, NetError> {
        let state = self.read();
        state
            .overrides
            .get(address)
            .or_else(|| state.directory.get(address))
            .copied()
            .ok_or_else(|| NetError::NotFound { host: address.to_string(), path: String::new() })
    }

    fn document(state: &State, host: &str, path: &str) -> Result<Vec<u8>, NetError> {
        let key = (host.to_owned(), path.to_owned());
        if state.removed.contains(&key) {
            return Err(NetError::NotFound { host: host.to_owned(), path: path.to_owned() });
        }
        state
            .documents
            .get(&key)
            .cloned()
            .ok_or_else(|| NetError::NotFound { host: host.to_owned(), path: path.to_owned() })
    }

    fn tampered(state: &State, host: &str, mut body: Vec<u8>) -> Vec<u8> {
        for t in state.tamper.get(host).into_iter().flatten() {
            body = t(&body);
        }
        body
    }
}

impl Transport for SimNet {
    fn get(&self, host: &str, path: &str) -> Result<Vec<u8>, NetError> {
        let host = host.to_ascii_lowercase();
        if is_onion_host(&host) {
            return Self::document(&self.read(), &host, path);
        }
        if let Some(label) = host.strip_suffix(GATEWAY_SUFFIX) {
            let address = OnionAddress::parse(label).map_err(|_| NetError::BadUrl(host.clone()))?;
            // The gateway is a Tor client and checks the service key itself.
            let key = self.lookup_service_key(&address)?;
            if !address.matches_key(&key) {
                return Err(NetError::Transport(format!("gateway could not reach {address}")));
            }
            let state = self.read();
            let body = Self::document(&state, &address.to_string(), path)?;
            return Ok(Self::tampered(&state, &host, body));
        }
        let state = self.read();
        let body = Self::document(&state, &host, path)?;
        Ok(Self::tampered(&state, &host, body))
    }

    fn directory_lookup(&self, address: &OnionAddress) -> Result<PublicKey, NetError> {
        self.lookup_service_key(address)
    }
}

impl Network for SimNet {
    fn fetch(&self, url: &str, channel: Channel) -> Result<Document, NetError> {
        channel_fetch(self, url, channel)
    }
}

impl<N: Network + ?Sized> Network for Arc<N> {
    fn fetch(&self, url: &str, channel: Channel) -> Result<Document, NetError> {
        (**self).fetch(url, channel)
    }
}
