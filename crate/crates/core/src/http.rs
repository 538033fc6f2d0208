//! Small blocking HTTP plumbing shared by the loopback network and the
//! notary API.

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn text(status: u16, body: impl Into<Vec<u8>>) -> Self {
        Self { status, content_type: "text/plain; charset=utf-8", body: body.into() }
    }

    pub fn json(body: String) -> Self {
        Self { status: 200, content_type: "application/json", body: body.into_bytes() }
    }
}

/// A request as seen by handlers: lowercase host without port, and the path
/// including any query string.
pub struct Incoming<'a> {
    pub method: &'a str,
    pub host: String,
    pub path: &'a str,
}

pub type Handler = Arc<dyn Fn(&Incoming<'_>) -> Reply + Send + Sync>;

/// A running server. Dropping it stops the workers.
pub struct HttpServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

impl HttpServer {
    pub fn start(bind: &str, workers: usize, handler: Handler) -> io::Result<Self> {
        let server = tiny_http::Server::http(bind).map_err(|e| io::Error::other(e.to_string()))?;
        let addr = server.server_addr().to_ip().ok_or_else(|| io::Error::other("not an ip listener"))?;
        let server = Arc::new(server);
        let workers = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let handler = Arc::clone(&handler);
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        let host = request
                            .headers()
                            .iter()
                            .find(|h| h.field.equiv("Host"))
                            .map(|h| h.value.as_str().to_owned())
                            .unwrap_or_default();
                        let host = host.rsplit_once(':').map_or(host.as_str(), |(h, _)| h).to_ascii_lowercase();
                        let method = request.method().as_str().to_owned();
                        let path = request.url().to_owned();
                        let reply = handler(&Incoming { method: &method, host, path: &path });
                        let header =
                            tiny_http::Header::from_bytes("Content-Type", reply.content_type).expect("static header");
                        let response = tiny_http::Response::from_data(reply.body)
                            .with_status_code(reply.status)
                            .with_header(header);
                        let _ = request.respond(response);
                    }
                })
            })
            .collect();
        Ok(Self { server, addr, workers })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }

    /// Blocks until the server is shut down from another thread.
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for HttpServer {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(10)))
        .build()
        .into()
}

/// GET returning status and body.
pub fn get(agent: &ureq::Agent, url: &str, host: Option<&str>) -> Result<(u16, Vec<u8>), String> {
    let mut req = agent.get(url);
    if let Some(h) = host {
        req = req.header("Host", h);
    }
    let mut resp = req.call().map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_vec().map_err(|e| e.to_string())?;
    Ok((status, body))
}
