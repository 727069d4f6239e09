//! In-process and loopback-HTTP stand-ins for a chat-completions endpoint.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::client::ChatEndpoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    /// Candidate tokens at the single generated position; the first
    /// highest-scoring one is the generated token.
    Logprobs(Vec<(String, f64)>),
    NoLogprobs,
    Status(u16),
}

type Responder = Box<dyn Fn(&str) -> MockReply + Send + Sync>;

pub struct MockEndpoint {
    responder: Responder,
    model: String,
    latency_ms: Option<(u64, u64)>,
    seed: u64,
    fail_first: usize,
    calls: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl MockEndpoint {
    /// Reply to each prompt with `f(prompt)`.
    pub fn from_fn(f: impl Fn(&str) -> MockReply + Send + Sync + 'static) -> Self {
        MockEndpoint {
            responder: Box::new(f),
            model: "mock-model".into(),
            latency_ms: None,
            seed: 0,
            fail_first: 0,
            calls: AtomicUsize::new(0),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn fixed(logprobs: &[(&str, f64)]) -> Self {
        let reply = MockReply::Logprobs(logprobs.iter().map(|(t, l)| (t.to_string(), *l)).collect());
        Self::from_fn(move |_| reply.clone())
    }

    /// Sleep a per-prompt pseudo-random time in `[min_ms, max_ms]` before replying.
    pub fn with_latency(mut self, min_ms: u64, max_ms: u64, seed: u64) -> Self {
        self.latency_ms = Some((min_ms, max_ms));
        self.seed = seed;
        self
    }

    /// The first `n` calls fail with HTTP 503.
    pub fn failing_first(mut self, n: usize) -> Self {
        self.fail_first = n;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Prompts received, in arrival order.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }

    fn reply(&self, body: &Value) -> std::result::Result<Value, u16> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = body["messages"][0]["content"].as_str().unwrap_or_default().to_string();
        self.prompts.lock().unwrap().push(prompt.clone());
        if let Some((lo, hi)) = self.latency_ms {
            let h = prompt.bytes().fold(self.seed ^ 0xcbf2_9ce4_8422_2325, |h, b| {
                (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
            });
            let ms = ChaCha8Rng::seed_from_u64(h).random_range(lo..=hi);
            std::thread::sleep(Duration::from_millis(ms));
        }
        if call < self.fail_first {
            return Err(503);
        }
        let model = body["model"].as_str().unwrap_or(&self.model);
        match (self.responder)(&prompt) {
            MockReply::Logprobs(top) => {
                let top: Vec<(&str, f64)> = top.iter().map(|(t, l)| (t.as_str(), *l)).collect();
                Ok(logprob_response(model, &top))
            }
            MockReply::NoLogprobs => Ok(json!({
                "model": model,
                "choices": [{"index": 0, "message": {"role": "assistant", "content": "1"}, "finish_reason": "stop"}]
            })),
            MockReply::Status(s) => Err(s),
        }
    }
}

impl ChatEndpoint for MockEndpoint {
    fn complete(&self, body: &Value) -> Result<Value> {
        self.reply(body).map_err(|status| Error::HttpStatus {
            status,
            body: "mock failure".into(),
        })
    }
}

fn generated<'a>(top: &[(&'a str, f64)]) -> (&'a str, f64) {
    let mut best = ("", 0.0);
    for (i, &(t, l)) in top.iter().enumerate() {
        if i == 0 || l > best.1 {
            best = (t, l);
        }
    }
    best
}

/// A chat-format response with one generated position whose alternatives are `top`.
pub fn logprob_response(model: &str, top: &[(&str, f64)]) -> Value {
    let (token, lp) = generated(top);
    json!({
        "model": model,
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": token},
            "logprobs": {"content": [{
                "token": token,
                "logprob": lp,
                "top_logprobs": top.iter().map(|(t, l)| json!({"token": t, "logprob": l})).collect::<Vec<_>>(),
            }]},
            "finish_reason": "stop",
        }]
    })
}

/// Same as [`logprob_response`] in the legacy completions layout.
pub fn legacy_logprob_response(model: &str, top: &[(&str, f64)]) -> Value {
    let (token, lp) = generated(top);
    let map: serde_json::Map<String, Value> = top.iter().map(|(t, l)| (t.to_string(), json!(l))).collect();
    json!({
        "model": model,
        "choices": [{
            "text": token,
            "logprobs": {"tokens": [token], "token_logprobs": [lp], "top_logprobs": [map]},
        }]
    })
}

/// Serves a [`MockEndpoint`] over HTTP/1.1 on a loopback port until dropped.
pub struct MockServer {
    addr: SocketAddr,
    endpoint: Arc<MockEndpoint>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(endpoint: MockEndpoint) -> Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let endpoint = Arc::new(endpoint);
        let auth = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let (endpoint, auth, stop) = (endpoint.clone(), auth.clone(), stop.clone());
            std::thread::spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(conn) = conn else { continue };
                    let (endpoint, auth) = (endpoint.clone(), auth.clone());
                    std::thread::spawn(move || {
                        let _ = serve(conn, &endpoint, &auth);
                    });
                }
            })
        };
        Ok(MockServer {
            addr,
            endpoint,
            auth,
            stop,
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn endpoint(&self) -> &MockEndpoint {
        &self.endpoint
    }

    /// `Authorization` header of each request received.
    pub fn authorization_headers(&self) -> Vec<Option<String>> {
        self.auth.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(conn: TcpStream, endpoint: &MockEndpoint, auth: &Mutex<Vec<Option<String>>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(conn.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut length = 0usize;
    let mut authorization = None;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            let v = v.trim();
            if k.eq_ignore_ascii_case("content-length") {
                length = v.parse().unwrap_or(0);
            } else if k.eq_ignore_ascii_case("authorization") {
                authorization = Some(v.to_string());
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    auth.lock().unwrap().push(authorization);

    let (status, payload) = match serde_json::from_slice::<Value>(&body) {
        Ok(req) => match endpoint.reply(&req) {
            Ok(v) => (200, v.to_string()),
            Err(s) => (s, json!({"error": {"message": "mock failure"}}).to_string()),
        },
        Err(e) => (400, json!({"error": {"message": e.to_string()}}).to_string()),
    };
    let mut conn = conn;
    write!(
        conn,
        "HTTP/1.1 {status} Mock\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    conn.flush()
}
