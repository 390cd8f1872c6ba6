//! HTTP clients for the remote encoder and reasoner protocols, plus
//! request/response fixtures for record/replay testing.
//!
//! Both protocols are a single JSON POST. The client is deliberately tiny:
//! plain HTTP/1.1 over `TcpStream` with connect/read/write timeouts and
//! `Connection: close`, which is all a local encoder service or a fixture
//! server needs. Remote reasoner responses must pass the schema and
//! vocabulary gate before they are accepted; any transport or gate failure
//! surfaces as a `ReasonerError::Remote`, which the episode runner treats as
//! "fall back to the rule-based path".

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use presage_core::embed::{
    EmbedError, EmbeddingProvider, EmbeddingVector, ProviderRequest, ProviderResponse,
};
use presage_core::replan::{
    validate_reason_response, Diagnosis, ReasonRequest, ReasonResponse, Reasoner, ReasonerError,
    RecoveryPlan,
};
use presage_core::rng::fnv1a;
use presage_core::vocab::Vocabulary;

/// Transport settings shared by both clients.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            timeout: Duration::from_millis(2000),
            retries: 1,
        }
    }
}

fn split_endpoint(endpoint: &str) -> Result<(String, String), String> {
    let rest = endpoint
        .strip_prefix("http://")
        .ok_or_else(|| format!("endpoint `{endpoint}` must use http:// (no TLS support)"))?;
    let (authority, path) = match rest.split_once('/') {
        Some((a, p)) => (a.to_string(), format!("/{p}")),
        None => (rest.to_string(), "/".to_string()),
    };
    let authority = if authority.contains(':') {
        authority
    } else {
        format!("{authority}:80")
    };
    Ok((authority, path))
}

/// One JSON POST; returns the response body on HTTP 200.
fn http_post_json(endpoint: &str, body: &str, cfg: &HttpConfig) -> Result<String, String> {
    let (authority, path) = split_endpoint(endpoint)?;
    let addr = authority
        .to_socket_addrs()
        .map_err(|e| format!("resolve {authority}: {e}"))?
        .next()
        .ok_or_else(|| format!("no address for {authority}"))?;
    let mut stream =
        TcpStream::connect_timeout(&addr, cfg.timeout).map_err(|e| format!("connect: {e}"))?;
    stream
        .set_read_timeout(Some(cfg.timeout))
        .map_err(|e| e.to_string())?;
    stream
        .set_write_timeout(Some(cfg.timeout))
        .map_err(|e| e.to_string())?;

    let request = format!(
        "POST {path} HTTP/1.1\r\nHost: {authority}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream
        .write_all(request.as_bytes())
        .map_err(|e| format!("send: {e}"))?;

    let mut response = Vec::new();
    stream
        .read_to_end(&mut response)
        .map_err(|e| format!("receive: {e}"))?;
    let text = String::from_utf8_lossy(&response);
    let (head, payload) = text
        .split_once("\r\n\r\n")
        .ok_or_else(|| "malformed HTTP response".to_string())?;
    let status_line = head.lines().next().unwrap_or_default();
    let status = status_line.split_whitespace().nth(1).unwrap_or_default();
    if status != "200" {
        return Err(format!("server answered {status_line}"));
    }
    let content_length = head
        .lines()
        .find_map(|l| {
            l.to_ascii_lowercase()
                .strip_prefix("content-length:")
                .map(|v| v.trim().to_string())
        })
        .and_then(|v| v.parse::<usize>().ok());
    let body = match content_length {
        Some(n) if n <= payload.len() => &payload[..n],
        _ => payload,
    };
    Ok(body.to_string())
}

fn post_with_retries(endpoint: &str, body: &str, cfg: &HttpConfig) -> Result<String, String> {
    let mut last = String::new();
    for _ in 0..=cfg.retries {
        match http_post_json(endpoint, body, cfg) {
            Ok(response) => return Ok(response),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Client for the reasoner wire protocol. Responses are parsed into the
/// diagnosis/recovery schema and gated against the vocabulary.
pub struct RemoteReasoner {
    pub endpoint: String,
    pub http: HttpConfig,
    vocab: Vocabulary,
}

impl RemoteReasoner {
    pub fn new(endpoint: &str, vocab: &Vocabulary) -> Self {
        RemoteReasoner {
            endpoint: endpoint.to_string(),
            http: HttpConfig::default(),
            vocab: vocab.clone(),
        }
    }

    pub fn with_http(endpoint: &str, vocab: &Vocabulary, http: HttpConfig) -> Self {
        RemoteReasoner {
            endpoint: endpoint.to_string(),
            http,
            vocab: vocab.clone(),
        }
    }
}

impl Reasoner for RemoteReasoner {
    fn reason(&mut self, req: &ReasonRequest) -> Result<(Diagnosis, RecoveryPlan), ReasonerError> {
        let body = serde_json::to_string(req)
            .map_err(|e| ReasonerError::Remote(format!("encode request: {e}")))?;
        let text =
            post_with_retries(&self.endpoint, &body, &self.http).map_err(ReasonerError::Remote)?;
        let response: ReasonResponse = serde_json::from_str(&text)
            .map_err(|e| ReasonerError::Remote(format!("malformed response: {e}")))?;
        validate_reason_response(&response, &self.vocab)?;
        Ok((response.diagnosis, response.recovery))
    }
}

/// Client for the embedding provider protocol, with a response cache keyed
/// by the request document.
pub struct RemoteEmbedder {
    pub endpoint: String,
    pub http: HttpConfig,
    cache: Mutex<BTreeMap<String, Vec<f64>>>,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str) -> Self {
        RemoteEmbedder {
            endpoint: endpoint.to_string(),
            http: HttpConfig::default(),
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    fn fetch(&self, request: &ProviderRequest) -> Result<EmbeddingVector, EmbedError> {
        let key = serde_json::to_string(request)
            .map_err(|e| EmbedError::Provider(format!("encode request: {e}")))?;
        if let Some(values) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(EmbeddingVector {
                values: values.clone(),
            });
        }
        let text =
            post_with_retries(&self.endpoint, &key, &self.http).map_err(EmbedError::Provider)?;
        let response: ProviderResponse = serde_json::from_str(&text)
            .map_err(|e| EmbedError::Provider(format!("malformed response: {e}")))?;
        if response.vector.is_empty() || response.vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::Provider(
                "vector must be non-empty and finite".to_string(),
            ));
        }
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, response.vector.clone());
        Ok(EmbeddingVector {
            values: response.vector,
        })
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn node(&self, category: &str, state: &str) -> Result<EmbeddingVector, EmbedError> {
        self.fetch(&ProviderRequest::Node {
            category: category.to_string(),
            state: state.to_string(),
        })
    }

    fn text(&self, tokens: &[&str]) -> Result<EmbeddingVector, EmbedError> {
        self.fetch(&ProviderRequest::Text {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        })
    }
}

/// Stable fingerprint of a reason request, used as the fixture key.
pub fn request_fingerprint(req: &ReasonRequest) -> u64 {
    fnv1a(
        serde_json::to_string(req)
            .expect("requests serialize")
            .as_bytes(),
    )
}

/// One recorded request/response pair.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Fixture {
    pub request: ReasonRequest,
    pub response: ReasonResponse,
}

/// Save a fixture under its request fingerprint.
pub fn save_fixture(dir: &Path, req: &ReasonRequest, resp: &ReasonResponse) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let fixture = Fixture {
        request: req.clone(),
        response: resp.clone(),
    };
    let path = dir.join(format!("fixture-{:016x}.json", request_fingerprint(req)));
    std::fs::write(
        path,
        serde_json::to_string_pretty(&fixture).expect("fixtures serialize"),
    )
}

/// Replays recorded responses keyed by request fingerprint; unknown requests
/// fail like a remote error so the rule-based path takes over.
pub struct FixtureReasoner {
    fixtures: BTreeMap<u64, ReasonResponse>,
}

impl FixtureReasoner {
    pub fn empty() -> Self {
        FixtureReasoner {
            fixtures: BTreeMap::new(),
        }
    }

    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut fixtures = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            if entry.path().extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(entry.path())?;
                let fixture: Fixture = serde_json::from_str(&text).map_err(|e| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string())
                })?;
                fixtures.insert(request_fingerprint(&fixture.request), fixture.response);
            }
        }
        Ok(FixtureReasoner { fixtures })
    }

    pub fn insert(&mut self, req: &ReasonRequest, resp: ReasonResponse) {
        self.fixtures.insert(request_fingerprint(req), resp);
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl Reasoner for FixtureReasoner {
    fn reason(&mut self, req: &ReasonRequest) -> Result<(Diagnosis, RecoveryPlan), ReasonerError> {
        match self.fixtures.get(&request_fingerprint(req)) {
            Some(resp) => Ok((resp.diagnosis.clone(), resp.recovery.clone())),
            None => Err(ReasonerError::Remote(
                "no fixture for this request".to_string(),
            )),
        }
    }
}
