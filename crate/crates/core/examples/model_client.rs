//! Calls a chat endpoint through both provider adapters against a local mock
//! that rate-limits the first request, showing the retry and the transcript.
//!
//! cargo run --example model_client

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use image::RgbImage;
use pagefidelity::mock::{MockResponse, MockServer};
use pagefidelity::model::{build_direct_prompt, extract_html, GenerationConfig, ModelClient, PromptImage, Provider, Transcript};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let server = MockServer::start(move |req| {
        if counter.fetch_add(1, Ordering::SeqCst) == 0 {
            return MockResponse::json(429, &serde_json::json!({"error": "slow down"}));
        }
        let page = "```html\n<html><body><h1>Hi</h1></body></html>\n```";
        if req.path.ends_with("/messages") {
            MockResponse::json(200, &serde_json::json!({"content": [{"type": "text", "text": page}], "usage": {"input_tokens": 900, "output_tokens": 40}}))
        } else {
            MockResponse::json(200, &serde_json::json!({"choices": [{"message": {"content": page}}], "usage": {"prompt_tokens": 900, "completion_tokens": 40}}))
        }
    })?;

    let mut png = std::io::Cursor::new(Vec::new());
    RgbImage::from_pixel(64, 48, image::Rgb([240, 240, 240])).write_to(&mut png, image::ImageFormat::Png)?;
    let bundle = build_direct_prompt(PromptImage { png: png.into_inner() })?;

    for (provider, path) in [(Provider::OpenaiChat, "/v1/chat/completions"), (Provider::AnthropicMessages, "/v1/messages")] {
        let config = GenerationConfig {
            provider,
            endpoint: format!("{}{path}", server.url()),
            api_key_env: None,
            backoff_ms: 10,
            ..GenerationConfig::default()
        };
        let client = ModelClient::new(config)?;
        let body = client.request_body(&bundle);
        println!("{provider:?} request keys: {:?}", body.as_object().map(|o| o.keys().collect::<Vec<_>>()));
        let result = client.call(&bundle);
        let transcript = Transcript::new(&bundle, client.config(), &result);
        let resp = result?;
        println!("  {} attempt(s), usage {:?}", resp.attempts, resp.usage);
        println!("  extracted: {}", extract_html(&resp.raw)?);
        println!("  transcript images: {:?}", transcript.image_sha256);
    }
    Ok(())
}
