//! HTTP transports: a chat-completions client and an embeddings client with
//! a disk cache.
//!
//! The wire format is the interoperable chat-completions JSON shape —
//! request `{model, messages, temperature}`, response
//! `choices[0].message.content` — so any compatible gateway or mock works.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("endpoint returned HTTP {status}")]
    Http { status: u16 },
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

impl TransportError {
    /// Authentication failures abort the run; everything else is retried.
    pub fn is_fatal(&self) -> bool {
        matches!(self, TransportError::Auth(_))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn from_prompt(model: &str, prompt: &super::ChatPrompt, temperature: f64) -> Self {
        let mut messages = Vec::with_capacity(2);
        if let Some(system) = &prompt.system {
            messages.push(ChatMessage {
                role: "system".into(),
                content: system.clone(),
            });
        }
        messages.push(ChatMessage {
            role: "user".into(),
            content: prompt.user.clone(),
        });
        ChatRequest {
            model: model.to_string(),
            messages,
            temperature,
        }
    }
}

/// Anything that can answer a chat request with completion text.
pub trait ChatEndpoint: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

/// Blocking chat-completions client.
pub struct HttpChatEndpoint {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatEndpoint {
    /// `api_key_env` names an environment variable holding the bearer
    /// token; naming a variable that is unset is an authentication error.
    pub fn new(
        url: &str,
        api_key_env: Option<&str>,
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        let api_key = match api_key_env {
            None => None,
            Some(var) => Some(std::env::var(var).map_err(|_| {
                TransportError::Auth(format!("environment variable {var} is not set"))
            })?),
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(Self {
            url: url.to_string(),
            api_key,
            client,
        })
    }
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

impl ChatEndpoint for HttpChatEndpoint {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut builder = self.client.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(TransportError::Auth(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Http {
                status: status.as_u16(),
            });
        }
        let body: ChatResponse = response
            .json()
            .map_err(|e| TransportError::MalformedResponse(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::MalformedResponse("no choices".into()))
    }
}

/// Anything that can embed texts.
pub trait EmbeddingEndpoint {
    fn embed(&self, model: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError>;
}

/// Blocking embeddings client: request `{model, input: [text…]}`, response
/// `{data: [{embedding: […]}…]}`.
pub struct HttpEmbeddingEndpoint {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingEndpoint {
    pub fn new(
        url: &str,
        api_key_env: Option<&str>,
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        let api_key = match api_key_env {
            None => None,
            Some(var) => Some(std::env::var(var).map_err(|_| {
                TransportError::Auth(format!("environment variable {var} is not set"))
            })?),
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(Self {
            url: url.to_string(),
            api_key,
            client,
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

impl EmbeddingEndpoint for HttpEmbeddingEndpoint {
    fn embed(&self, model: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError> {
        let mut builder = self
            .client
            .post(&self.url)
            .json(&serde_json::json!({ "model": model, "input": texts }));
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(TransportError::Auth(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Http {
                status: status.as_u16(),
            });
        }
        let body: EmbeddingResponse = response
            .json()
            .map_err(|e| TransportError::MalformedResponse(e.to_string()))?;
        if body.data.len() != texts.len() {
            return Err(TransportError::MalformedResponse(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                body.data.len()
            )));
        }
        Ok(body.data.into_iter().map(|d| d.embedding).collect())
    }
}

fn text_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Embedding fetcher with a JSON disk cache keyed by text digest, so reruns
/// and resumed collections never re-embed the same claim.
pub struct CachedEmbeddings<'a, E: EmbeddingEndpoint> {
    endpoint: &'a E,
    model: String,
    cache_path: PathBuf,
    cache: BTreeMap<String, Vec<f64>>,
}

impl<'a, E: EmbeddingEndpoint> CachedEmbeddings<'a, E> {
    pub fn open(
        endpoint: &'a E,
        model: &str,
        cache_path: &Path,
    ) -> Result<Self, TransportError> {
        let cache = match std::fs::read_to_string(cache_path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| TransportError::MalformedResponse(format!("cache: {e}")))?,
            Err(_) => BTreeMap::new(),
        };
        Ok(Self {
            endpoint,
            model: model.to_string(),
            cache_path: cache_path.to_path_buf(),
            cache,
        })
    }

    pub fn embed_all(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, TransportError> {
        let missing: Vec<String> = texts
            .iter()
            .filter(|t| !self.cache.contains_key(&text_digest(t)))
            .cloned()
            .collect();
        if !missing.is_empty() {
            let fetched = self.endpoint.embed(&self.model, &missing)?;
            for (text, vector) in missing.iter().zip(fetched) {
                self.cache.insert(text_digest(text), vector);
            }
            let serialized = serde_json::to_string(&self.cache)
                .map_err(|e| TransportError::MalformedResponse(e.to_string()))?;
            std::fs::write(&self.cache_path, serialized)
                .map_err(|e| TransportError::Network(e.to_string()))?;
        }
        Ok(texts
            .iter()
            .map(|t| self.cache[&text_digest(t)].clone())
            .collect())
    }
}
