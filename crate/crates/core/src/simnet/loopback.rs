//! Loopback HTTP mode: one listener serves every simulated host, selected by
//! the `Host` header. The directory is served at [`DIRECTORY_HOST`] under
//! `/v1/keys/<label>`.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use super::{channel_fetch, Channel, Document, NetError, Network, SimNet, Transport};
use crate::http::{self, HttpServer, Reply};
use crate::onionid::{OnionAddress, PublicKey};

pub const DIRECTORY_HOST: &str = "directory.simnet";

const STATUS_GATEWAY_ERROR: u16 = 502;

pub struct LoopbackServer {
    http: HttpServer,
    net: Arc<SimNet>,
}

impl LoopbackServer {
    /// Serves `net` on `bind` (e.g. `127.0.0.1:0`).
    pub fn start(net: Arc<SimNet>, bind: &str) -> io::Result<Self> {
        let shared = Arc::clone(&net);
        let handler: http::Handler = Arc::new(move |req| {
            if req.method != "GET" {
                return Reply::text(405, "GET only");
            }
            if req.host == DIRECTORY_HOST {
                let label = req.path.strip_prefix("/v1/keys/").unwrap_or_default();
                return match OnionAddress::parse(label) {
                    Ok(addr) => match shared.lookup_service_key(&addr) {
                        Ok(key) => Reply::text(200, key.to_hex()),
                        Err(e) => Reply::text(404, e.to_string()),
                    },
                    Err(e) => Reply::text(400, e.to_string()),
                };
            }
            match shared.get(&req.host, req.path) {
                Ok(body) => Reply { status: 200, content_type: "text/plain; charset=utf-8", body },
                Err(NetError::NotFound { .. }) => Reply::text(404, "not found"),
                Err(e) => Reply::text(STATUS_GATEWAY_ERROR, e.to_string()),
            }
        });
        Ok(Self { http: HttpServer::start(bind, 4, handler)?, net })
    }

    pub fn addr(&self) -> SocketAddr {
        self.http.addr()
    }

    pub fn net(&self) -> &Arc<SimNet> {
        &self.net
    }

    pub fn shutdown(self) {
        self.http.shutdown();
    }

    pub fn wait(self) {
        self.http.wait();
    }
}

/// Client side of loopback mode. Channel rules and the self-authentication
/// check run here, exactly as for the in-memory network.
pub struct LoopbackNet {
    addr: SocketAddr,
    agent: ureq::Agent,
}

impl LoopbackNet {
    pub fn new(addr: SocketAddr) -> Self {
        Self { addr, agent: http::agent() }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Transport for LoopbackNet {
    fn get(&self, host: &str, path: &str) -> Result<Vec<u8>, NetError> {
        let url = format!("http://{}{}", self.addr, path);
        let (status, body) = http::get(&self.agent, &url, Some(host)).map_err(NetError::Transport)?;
        match status {
            200 => Ok(body),
            404 => Err(NetError::NotFound { host: host.to_owned(), path: path.to_owned() }),
            other => Err(NetError::Transport(format!("{host}: HTTP {other}: {}", String::from_utf8_lossy(&body)))),
        }
    }

    fn directory_lookup(&self, address: &OnionAddress) -> Result<PublicKey, NetError> {
        let path = format!("/v1/keys/{}", address.label());
        let body = self.get(DIRECTORY_HOST, &path).map_err(|e| match e {
            NetError::NotFound { .. } => NetError::NotFound { host: address.to_string(), path: String::new() },
            other => other,
        })?;
        PublicKey::from_hex(&String::from_utf8_lossy(&body)).map_err(|e| NetError::Transport(e.to_string()))
    }
}

impl Network for LoopbackNet {
    fn fetch(&self, url: &str, channel: Channel) -> Result<Document, NetError> {
        channel_fetch(self, url, channel)
    }
}
