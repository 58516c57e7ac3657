use std::collections::HashMap;
use std::io::Read as _;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{PromptBundle, Strategy};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("provider error {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("credentials: environment variable {0} is not set")]
    MissingCredentials(String),
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("no html found in model output")]
    NoHtmlFound,
}

/// Request/response shape of the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provider {
    /// `choices[0].message.content`, bearer auth, data-URL images.
    OpenaiChat,
    /// `content[].text`, `x-api-key` auth, base64 image blocks.
    AnthropicMessages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub provider: Provider,
    /// Full URL of the chat endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key. Keys are never
    /// read from files.
    pub api_key_env: Option<String>,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub repetition_penalty: Option<f64>,
    /// Stack all images into one before sending.
    pub concat_images: bool,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    /// Token bucket refill rate; `None` leaves calls unthrottled.
    pub requests_per_second: Option<f64>,
    pub burst: u32,
    /// Extra revision rounds after the first; the default is one round.
    pub revision_rounds: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            provider: Provider::OpenaiChat,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-2024-05-13".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            max_new_tokens: 4096,
            temperature: 0.0,
            repetition_penalty: None,
            concat_images: false,
            max_retries: 3,
            backoff_ms: 1000,
            timeout_secs: 300,
            requests_per_second: None,
            burst: 1,
            revision_rounds: 1,
        }
    }
}

impl GenerationConfig {
    /// Sampling preset for open-weight models: temperature 0.5, repetition
    /// penalty 1.1, screenshots stacked into one image.
    pub fn open_model(endpoint: &str, model: &str) -> Self {
        GenerationConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: None,
            temperature: 0.5,
            repetition_penalty: Some(1.1),
            concat_images: true,
            ..Default::default()
        }
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "default" | "greedy" => Some(Self::default()),
            "open-model" => Some(Self::open_model("http://127.0.0.1:8000/v1/chat/completions", "local")),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.max_new_tokens == 0 {
            return Err(ModelError::InvalidConfig("max_new_tokens must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(ModelError::InvalidConfig("temperature must be non-negative".into()));
        }
        if self.revision_rounds == 0 {
            return Err(ModelError::InvalidConfig("revision_rounds must be at least 1".into()));
        }
        url::Url::parse(&self.endpoint).map_err(|e| ModelError::InvalidConfig(format!("endpoint: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw: String,
    pub usage: Usage,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Audit record of one call, stored next to the generated page. Images are
/// recorded by hash only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub strategy: Strategy,
    pub provider: Provider,
    pub endpoint: String,
    pub model: String,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub repetition_penalty: Option<f64>,
    pub user_text: String,
    pub image_sha256: Vec<String>,
    pub response: Option<ModelResponse>,
    pub error: Option<String>,
}

impl Transcript {
    pub fn new(bundle: &PromptBundle, config: &GenerationConfig, result: &Result<ModelResponse, ModelError>) -> Self {
        Transcript {
            strategy: bundle.strategy,
            provider: config.provider,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            max_new_tokens: config.max_new_tokens,
            temperature: config.temperature,
            repetition_penalty: config.repetition_penalty,
            user_text: bundle.user_text.clone(),
            image_sha256: bundle
                .images
                .iter()
                .map(|i| format!("{:x}", Sha256::digest(&i.png)))
                .collect(),
            response: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(ToString::to_string),
        }
    }
}

/// Token bucket shared by all calls to one endpoint.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate_per_sec: f64, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        TokenBucket {
            rate: rate_per_sec,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().expect("bucket lock");
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.rate).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

fn limiter_for(endpoint: &str, rate: f64, burst: u32) -> Arc<TokenBucket> {
    static LIMITERS: OnceLock<Mutex<HashMap<String, Arc<TokenBucket>>>> = OnceLock::new();
    LIMITERS
        .get_or_init(Default::default)
        .lock()
        .expect("limiter registry")
        .entry(endpoint.to_string())
        .or_insert_with(|| Arc::new(TokenBucket::new(rate, burst)))
        .clone()
}

/// A configured endpoint. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct ModelClient {
    config: GenerationConfig,
    agent: ureq::Agent,
    limiter: Option<Arc<TokenBucket>>,
}

impl ModelClient {
    pub fn new(config: GenerationConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        let limiter = config
            .requests_per_second
            .filter(|r| *r > 0.0)
            .map(|r| limiter_for(&config.endpoint, r, config.burst));
        Ok(ModelClient { config, agent, limiter })
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    fn api_key(&self) -> Result<Option<String>, ModelError> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ModelError::MissingCredentials(var.clone())),
        }
    }

    /// Request body for the configured provider.
    pub fn request_body(&self, bundle: &PromptBundle) -> Value {
        let c = &self.config;
        let b64 = |png: &[u8]| base64::engine::general_purpose::STANDARD.encode(png);
        let mut body = match c.provider {
            Provider::OpenaiChat => {
                let mut content = vec![json!({"type": "text", "text": bundle.user_text})];
                for img in &bundle.images {
                    content.push(json!({
                        "type": "image_url",
                        "image_url": {"url": format!("data:image/png;base64,{}", b64(&img.png))}
                    }));
                }
                let mut messages = Vec::new();
                if let Some(system) = &bundle.system {
                    messages.push(json!({"role": "system", "content": system}));
                }
                messages.push(json!({"role": "user", "content": content}));
                json!({
                    "model": c.model,
                    "messages": messages,
                    "max_tokens": c.max_new_tokens,
                    "temperature": c.temperature,
                })
            }
            Provider::AnthropicMessages => {
                let mut content = vec![json!({"type": "text", "text": bundle.user_text})];
                for img in &bundle.images {
                    content.push(json!({
                        "type": "image",
                        "source": {"type": "base64", "media_type": "image/png", "data": b64(&img.png)}
                    }));
                }
                let mut body = json!({
                    "model": c.model,
                    "messages": [{"role": "user", "content": content}],
                    "max_tokens": c.max_new_tokens,
                    "temperature": c.temperature,
                });
                if let Some(system) = &bundle.system {
                    body["system"] = json!(system);
                }
                body
            }
        };
        if let Some(p) = c.repetition_penalty {
            body["repetition_penalty"] = json!(p);
        }
        body
    }

    fn parse_response(&self, v: &Value) -> Result<(String, Usage), ModelError> {
        let n = |v: &Value| v.as_u64().unwrap_or(0);
        match self.config.provider {
            Provider::OpenaiChat => {
                let text = v["choices"][0]["message"]["content"]
                    .as_str()
                    .ok_or_else(|| ModelError::BadResponse("missing choices[0].message.content".into()))?;
                let usage = Usage {
                    input_tokens: n(&v["usage"]["prompt_tokens"]),
                    output_tokens: n(&v["usage"]["completion_tokens"]),
                };
                Ok((text.to_string(), usage))
            }
            Provider::AnthropicMessages => {
                let parts = v["content"]
                    .as_array()
                    .ok_or_else(|| ModelError::BadResponse("missing content array".into()))?;
                let text: String = parts.iter().filter_map(|p| p["text"].as_str()).collect();
                let usage = Usage {
                    input_tokens: n(&v["usage"]["input_tokens"]),
                    output_tokens: n(&v["usage"]["output_tokens"]),
                };
                Ok((text, usage))
            }
        }
    }

    /// One generation round trip. Retries 429, 5xx and transport failures
    /// with exponential backoff.
    pub fn call(&self, bundle: &PromptBundle) -> Result<ModelResponse, ModelError> {
        let c = &self.config;
        let key = self.api_key()?;
        let concatenated;
        let bundle = if c.concat_images && bundle.images.len() > 1 {
            concatenated = bundle
                .concatenated()
                .map_err(|e| ModelError::BadResponse(format!("image concatenation: {e}")))?;
            &concatenated
        } else {
            bundle
        };
        let body = self.request_body(bundle).to_string();
        let start = Instant::now();
        let mut attempt = 0;
        loop {
            attempt += 1;
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            let mut req = self.agent.post(&c.endpoint).set("Content-Type", "application/json");
            match (c.provider, &key) {
                (Provider::OpenaiChat, Some(k)) => req = req.set("Authorization", &format!("Bearer {k}")),
                (Provider::AnthropicMessages, Some(k)) => req = req.set("x-api-key", k),
                _ => {}
            }
            if c.provider == Provider::AnthropicMessages {
                req = req.set("anthropic-version", "2023-06-01");
            }
            let transient = match req.send_string(&body) {
                Ok(resp) => {
                    let text = resp.into_string().map_err(|e| ModelError::Transport(e.to_string()))?;
                    let v: Value =
                        serde_json::from_str(&text).map_err(|e| ModelError::BadResponse(e.to_string()))?;
                    let (raw, usage) = self.parse_response(&v)?;
                    return Ok(ModelResponse {
                        raw,
                        usage,
                        latency_ms: start.elapsed().as_millis() as u64,
                        attempts: attempt,
                    });
                }
                Err(ureq::Error::Status(status, resp)) => {
                    let mut message = String::new();
                    let _ = resp.into_reader().take(4096).read_to_string(&mut message);
                    match status {
                        401 | 403 => return Err(ModelError::AuthFailure(message)),
                        429 => ModelError::RateLimited { attempts: attempt },
                        500..=599 => ModelError::Provider { status, message },
                        _ => return Err(ModelError::Provider { status, message }),
                    }
                }
                Err(e) => ModelError::Transport(e.to_string()),
            };
            if attempt > c.max_retries {
                return Err(transient);
            }
            let delay = c.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
            log::debug!("attempt {attempt} failed ({transient}); retrying in {delay} ms");
            std::thread::sleep(Duration::from_millis(delay));
        }
    }
}

/// Convenience wrapper building a client for a single call.
pub fn call_model(bundle: &PromptBundle, config: &GenerationConfig) -> Result<ModelResponse, ModelError> {
    ModelClient::new(config.clone())?.call(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{MockResponse, MockServer};
    use crate::model::PromptImage;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn bundle() -> PromptBundle {
        PromptBundle {
            strategy: Strategy::Direct,
            system: None,
            user_text: "make a page".into(),
            images: vec![PromptImage { png: vec![1, 2, 3] }],
        }
    }

    fn config(url: &str, provider: Provider) -> GenerationConfig {
        GenerationConfig {
            provider,
            endpoint: format!("{url}/v1/chat"),
            api_key_env: None,
            backoff_ms: 1,
            ..Default::default()
        }
    }

    fn openai_reply(text: &str) -> MockResponse {
        MockResponse::json(
            200,
            &json!({"choices": [{"message": {"content": text}}], "usage": {"prompt_tokens": 11, "completion_tokens": 7}}),
        )
    }

    #[test]
    fn openai_round_trip() {
        let server = MockServer::start(|_| openai_reply("<html><body>hi</body></html>")).unwrap();
        let b = bundle();
        let before = b.clone();
        let r = call_model(&b, &config(server.url(), Provider::OpenaiChat)).unwrap();
        assert_eq!(r.raw, "<html><body>hi</body></html>");
        assert_eq!(r.usage, Usage { input_tokens: 11, output_tokens: 7 });
        assert_eq!(b, before);

        let req = &server.requests()[0];
        assert_eq!(req.path, "/v1/chat");
        let body = req.body_json();
        assert_eq!(body["max_tokens"], 4096);
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["content"][0]["text"], "make a page");
        assert_eq!(body["messages"][0]["content"][1]["image_url"]["url"], "data:image/png;base64,AQID");
    }

    #[test]
    fn anthropic_round_trip() {
        let server = MockServer::start(|_| {
            MockResponse::json(
                200,
                &json!({"content": [{"type": "text", "text": "<p>a</p>"}, {"type": "text", "text": "<p>b</p>"}],
                        "usage": {"input_tokens": 3, "output_tokens": 4}}),
            )
        })
        .unwrap();
        let r = call_model(&bundle(), &config(server.url(), Provider::AnthropicMessages)).unwrap();
        assert_eq!(r.raw, "<p>a</p><p>b</p>");
        let req = &server.requests()[0];
        assert_eq!(req.header("anthropic-version"), Some("2023-06-01"));
        assert_eq!(req.body_json()["messages"][0]["content"][1]["source"]["data"], "AQID");
    }

    #[test]
    fn retries_after_rate_limits() {
        let hits = Arc::new(AtomicU32::new(0));
        let h = hits.clone();
        let server = MockServer::start(move |_| {
            if h.fetch_add(1, Ordering::SeqCst) < 3 {
                MockResponse::text(429, "slow down")
            } else {
                openai_reply("ok")
            }
        })
        .unwrap();
        let r = call_model(&bundle(), &config(server.url(), Provider::OpenaiChat)).unwrap();
        assert_eq!(r.raw, "ok");
        assert_eq!(r.attempts, 4);

        hits.store(0, Ordering::SeqCst);
        let mut cfg = config(server.url(), Provider::OpenaiChat);
        cfg.max_retries = 2;
        assert!(matches!(call_model(&bundle(), &cfg), Err(ModelError::RateLimited { attempts: 3 })));
    }

    #[test]
    fn auth_and_provider_errors() {
        let server = MockServer::start(|req| match req.header("authorization") {
            Some("Bearer good") => MockResponse::text(400, "bad request body"),
            _ => MockResponse::text(401, "invalid key"),
        })
        .unwrap();
        let mut cfg = config(server.url(), Provider::OpenaiChat);
        cfg.api_key_env = Some("PF_TEST_KEY_AUTH".into());
        assert!(matches!(call_model(&bundle(), &cfg), Err(ModelError::MissingCredentials(_))));
        std::env::set_var("PF_TEST_KEY_AUTH", "bad");
        assert!(matches!(call_model(&bundle(), &cfg), Err(ModelError::AuthFailure(m)) if m == "invalid key"));
        std::env::set_var("PF_TEST_KEY_AUTH", "good");
        match call_model(&bundle(), &cfg) {
            Err(ModelError::Provider { status: 400, message }) => assert_eq!(message, "bad request body"),
            other => panic!("{other:?}"),
        }
        assert_eq!(server.requests().len(), 2);
    }

    #[test]
    fn open_model_profile() {
        let cfg = GenerationConfig::profile("open-model").unwrap();
        assert_eq!((cfg.temperature, cfg.repetition_penalty), (0.5, Some(1.1)));
        assert!(cfg.concat_images);
        let client = ModelClient::new(cfg).unwrap();
        assert_eq!(client.request_body(&bundle())["repetition_penalty"], 1.1);
        let bad = GenerationConfig { max_new_tokens: 0, ..Default::default() };
        assert!(matches!(ModelClient::new(bad), Err(ModelError::InvalidConfig(_))));
    }

    #[test]
    fn token_bucket_throttles() {
        let bucket = TokenBucket::new(50.0, 1);
        let start = Instant::now();
        for _ in 0..4 {
            bucket.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(55));
    }

    #[test]
    fn transcript_hashes_images() {
        let b = bundle();
        let t = Transcript::new(&b, &GenerationConfig::default(), &Err(ModelError::NoHtmlFound));
        assert_eq!(t.image_sha256[0].len(), 64);
        assert!(t.response.is_none() && t.error.is_some());
    }
}
