//! JSON-over-HTTP client for remote experts.
//!
//! ```text
//! POST {url}/generate  {prompt, n, top_p, max_new_tokens, seed} -> {candidates: [{text}]}
//! POST {url}/classify  {text, labels: [..]}                      -> {probs: {label: real}}
//! POST {url}/embed     {texts: [..]}                             -> {vectors: [[real]]}
//! ```
//!
//! Non-2xx responses carry `{error: message}`. Calls are never retried.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ClassDistribution, Classifier, DecodeParams, Embedder, Generator, ProviderError};

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    n: usize,
    top_p: f64,
    max_new_tokens: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct GeneratedText {
    text: String,
}

#[derive(Deserialize)]
struct GenerateResponse {
    candidates: Vec<GeneratedText>,
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    text: &'a str,
    labels: &'a [&'a str],
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

/// Counting semaphore bounding in-flight requests per endpoint.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(cap: usize) -> Self {
        Gate {
            free: Mutex::new(cap.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpProvider {
    base_url: String,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl HttpProvider {
    pub fn new(base_url: &str, timeout: Duration, max_in_flight: usize) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpProvider {
            base_url: base_url.trim_end_matches('/').to_string(),
            client,
            gate: Gate::new(max_in_flight),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, ProviderError> {
        let _permit = self.gate.acquire();
        let url = format!("{}/{}", self.base_url, path);
        let resp = self
            .client
            .post(&url)
            .json(body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            let message = serde_json::from_slice::<ErrorBody>(&bytes)
                .map(|b| b.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
            return Err(ProviderError::Backend(format!("{status}: {message}")));
        }
        serde_json::from_slice(&bytes)
            .map_err(|e| ProviderError::Backend(format!("unparseable response from {url}: {e}")))
    }
}

impl Generator for HttpProvider {
    fn generate_texts(&self, prompt: &str, decode: &DecodeParams) -> Result<Vec<String>, ProviderError> {
        let req = GenerateRequest {
            prompt,
            n: decode.n,
            top_p: decode.top_p,
            max_new_tokens: decode.max_new_tokens,
            seed: decode.seed,
        };
        let resp: GenerateResponse = self.post("generate", &req)?;
        Ok(resp.candidates.into_iter().map(|c| c.text).collect())
    }
}

impl Classifier for HttpProvider {
    fn classify_raw(&self, text: &str, labels: &[&str]) -> Result<ClassDistribution, ProviderError> {
        self.post("classify", &ClassifyRequest { text, labels })
    }
}

impl Embedder for HttpProvider {
    fn embed_raw(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let resp: EmbedResponse = self.post("embed", &EmbedRequest { texts })?;
        Ok(resp.vectors)
    }
}
