//! tsa-lite over HTTP: `POST /stamp` takes a request body and returns a
//! receipt, `GET /pubkey` returns the signer's key as hex.

use std::io::Read;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use ed25519_dalek::VerifyingKey;
use tiny_http::{Method, Response, Server};

use super::tsa::{MockTsa, TimestampAuthority, TsaReceipt, TsaRequest};
use super::AnchorError;

/// Environment variable naming the TSA endpoint.
pub const TSA_URL_ENV: &str = "WITNESSD_TSA_URL";
const MAX_REQUEST: u64 = 4096;

pub struct TsaServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl TsaServer {
    /// Binds `addr` (e.g. `127.0.0.1:0`) and serves on a background thread.
    pub fn start(tsa: Arc<MockTsa>, addr: &str) -> Result<Self, AnchorError> {
        let server = Arc::new(Server::http(addr).map_err(|e| AnchorError::Transport(e.to_string()))?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| AnchorError::Transport("not an IP listener".into()))?;
        let worker = {
            let server = Arc::clone(&server);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    serve(&tsa, request);
                }
            })
        };
        Ok(Self {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks the calling thread until the server stops.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for TsaServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn serve(tsa: &MockTsa, mut request: tiny_http::Request) {
    let response = match (request.method(), request.url()) {
        (Method::Get, "/pubkey") => Response::from_string(hex::encode(tsa.public_key().as_bytes())),
        (Method::Post, "/stamp") => {
            let mut body = Vec::new();
            let read = request.as_reader().take(MAX_REQUEST).read_to_end(&mut body);
            match read.map_err(|e| e.to_string()).and_then(|_| {
                TsaRequest::from_bytes(&body).map_err(|e| e.to_string())
            }) {
                Ok(req) => Response::from_data(tsa.stamp(&req).to_bytes().to_vec()),
                Err(e) => {
                    log::debug!("rejecting stamp request: {e}");
                    Response::from_string(e).with_status_code(400)
                }
            }
        }
        _ => Response::from_string("not found").with_status_code(404),
    };
    if let Err(e) = request.respond(response) {
        log::debug!("failed to send TSA response: {e}");
    }
}

#[derive(Debug, Clone)]
pub struct TsaClient {
    base_url: String,
    agent: ureq::Agent,
}

impl TsaClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(5)))
            .build();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent: config.into(),
        }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(TSA_URL_ENV).ok().filter(|u| !u.is_empty()).map(Self::new)
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn fetch_public_key(&self) -> Result<VerifyingKey, AnchorError> {
        let text = self
            .agent
            .get(&format!("{}/pubkey", self.base_url))
            .call()
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| AnchorError::Transport(e.to_string()))?;
        let bytes: [u8; 32] = hex::decode(text.trim())
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or(AnchorError::Malformed("public key"))?;
        VerifyingKey::from_bytes(&bytes).map_err(|_| AnchorError::Malformed("public key"))
    }
}

impl TimestampAuthority for TsaClient {
    fn timestamp(&self, request: &TsaRequest) -> Result<TsaReceipt, AnchorError> {
        let body = self
            .agent
            .post(&format!("{}/stamp", self.base_url))
            .header("Content-Type", "application/octet-stream")
            .send(&request.to_bytes()[..])
            .and_then(|mut r| r.body_mut().read_to_vec())
            .map_err(|e| AnchorError::Transport(e.to_string()))?;
        TsaReceipt::from_bytes(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchors::{build_tsa_request, verify_tsa_receipt};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn stamp_over_loopback() {
        let tsa = Arc::new(MockTsa::from_seed([9; 32]));
        let server = TsaServer::start(Arc::clone(&tsa), "127.0.0.1:0").unwrap();
        let client = TsaClient::new(server.url());

        let key = client.fetch_public_key().unwrap();
        assert_eq!(key, tsa.public_key());

        let req = build_tsa_request(&[1; 32], &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let receipt = client.timestamp(&req).unwrap();
        assert_eq!(verify_tsa_receipt(&req, &receipt, &[key]), Ok(()));
    }

    #[test]
    fn garbage_request_is_refused() {
        let server = TsaServer::start(Arc::new(MockTsa::from_seed([9; 32])), "127.0.0.1:0").unwrap();
        let err = ureq::post(&format!("{}/stamp", server.url()))
            .send(&b"nonsense"[..])
            .unwrap_err();
        assert!(matches!(err, ureq::Error::StatusCode(400)));
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        // Bind then drop to obtain a port nobody listens on.
        let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let client = TsaClient::new(format!("http://127.0.0.1:{port}"));
        let req = build_tsa_request(&[1; 32], &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        assert!(matches!(client.timestamp(&req), Err(AnchorError::Transport(_))));
    }
}
