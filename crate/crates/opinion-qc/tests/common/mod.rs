//! Shared helpers for integration tests: an independent Student-t oracle,
//! a scripted chat-completions HTTP server, and fixture builders.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

// ---------------------------------------------------------------------------
// Independent Student-t oracle
//
// Substituting x = √ν·tan θ turns the t density into cos^{ν−1}θ, so
//   two-sided p(t, ν) = 2·∫_{atan(|t|/√ν)}^{π/2} cos^{ν−1}θ dθ
//                       ─────────────────────────────────────────
//                            ∫_{−π/2}^{π/2} cos^{ν−1}θ dθ
// which needs no gamma or beta function — fully independent of the
// continued-fraction implementation under test.
// ---------------------------------------------------------------------------

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    eps: f64,
    whole: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, eps / 2.0, left, depth - 1)
        + adaptive_simpson(f, m, b, eps / 2.0, right, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    adaptive_simpson(f, a, b, 1e-13, simpson(f, a, b), 48)
}

/// Quadrature oracle for the two-sided Student-t p-value (ν ≥ 1).
pub fn t_two_sided_p_oracle(t: f64, nu: f64) -> f64 {
    let f = move |theta: f64| theta.cos().powf(nu - 1.0);
    let half = std::f64::consts::FRAC_PI_2;
    let cut = (t.abs() / nu.sqrt()).atan();
    let tail = integrate(&f, cut, half);
    let total = integrate(&f, -half, half);
    2.0 * tail / total
}

// ---------------------------------------------------------------------------
// Scripted chat-completions mock server
// ---------------------------------------------------------------------------

/// What the mock does with the next request.
#[derive(Clone, Debug)]
pub enum MockAction {
    /// 200 with a well-formed chat response carrying this content.
    Reply(String),
    /// An HTTP error status with an empty body.
    Status(u16),
    /// 200 with a body that is not valid chat-completion JSON.
    Garbage,
    /// 200 with this exact body (for non-chat endpoints).
    Json(String),
}

pub struct MockChatServer {
    addr: String,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
    hits: Arc<Mutex<usize>>,
}

impl MockChatServer {
    /// Start on an ephemeral localhost port. Scripted actions are consumed
    /// in request order; once exhausted, every request gets `fallback`.
    pub fn start(script: Vec<MockAction>, fallback: MockAction) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let shutdown = Arc::new(AtomicBool::new(false));
        let hits = Arc::new(Mutex::new(0usize));
        let script = Arc::new(Mutex::new(VecDeque::from(script)));

        let shutdown_flag = shutdown.clone();
        let hits_counter = hits.clone();
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if shutdown_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let action = script
                    .lock()
                    .unwrap()
                    .pop_front()
                    .unwrap_or_else(|| fallback.clone());
                *hits_counter.lock().unwrap() += 1;
                let _ = handle_request(stream, &action);
            }
        });

        Self {
            addr,
            shutdown,
            handle: Some(handle),
            hits,
        }
    }

    pub fn url(&self) -> &str {
        &self.addr
    }

    pub fn hits(&self) -> usize {
        *self.hits.lock().unwrap()
    }
}

impl Drop for MockChatServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        if let Some(addr) = self
            .addr
            .strip_prefix("http://")
            .and_then(|rest| rest.split('/').next())
        {
            let _ = TcpStream::connect(addr);
        }
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_request(mut stream: TcpStream, action: &MockAction) -> std::io::Result<()> {
    // Read headers, then exactly Content-Length body bytes.
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    let header_end = loop {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Ok(());
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_header_end(&buf) {
            break pos;
        }
        if buf.len() > 1 << 20 {
            return Ok(());
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length = headers
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        body.extend_from_slice(&chunk[..n]);
    }

    let (status_line, body) = match action {
        MockAction::Reply(content) => (
            "HTTP/1.1 200 OK".to_string(),
            serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": content}}]
            })
            .to_string(),
        ),
        MockAction::Status(code) => (format!("HTTP/1.1 {code} Error"), String::new()),
        MockAction::Garbage => ("HTTP/1.1 200 OK".to_string(), "<<not json>>".to_string()),
        MockAction::Json(body) => ("HTTP/1.1 200 OK".to_string(), body.clone()),
    };
    let response = format!(
        "{status_line}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes())?;
    stream.flush()
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

// ---------------------------------------------------------------------------
// Fixture builders
// ---------------------------------------------------------------------------

use opinion_qc::model::{AnnotationRecord, Source, Veracity};

/// Model-sourced record.
pub fn model_record(
    model: &str,
    prompt: &str,
    topic: &str,
    claim: &str,
    condition: &str,
    label: u8,
    sample: usize,
) -> AnnotationRecord {
    AnnotationRecord {
        claim_id: claim.to_string(),
        topic: topic.to_string(),
        veracity: Veracity::Unknown,
        condition: condition.to_string(),
        source: Source::Model {
            name: model.to_string(),
            prompt_id: prompt.to_string(),
        },
        label,
        annotator_id: format!("s{sample}"),
    }
}

/// Deterministic xorshift for fixture randomness that must not depend on
/// the crate under test.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn next_label(&mut self) -> u8 {
        1 + (self.next_f64() * 6.0).floor().min(5.0) as u8
    }

    pub fn next_range(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64).floor().min(n as f64 - 1.0) as usize
    }
}
