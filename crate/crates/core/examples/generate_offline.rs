//! Runs the generation pipeline for all three prompting strategies against a
//! local mock model, so no API key is needed.
//!
//! cargo run --example generate_offline -- [out_dir]

use pagefidelity::batch::cmd_generate;
use pagefidelity::mock::{MockResponse, MockServer};
use pagefidelity::model::{GenerationConfig, ModelClient, Strategy};
use pagefidelity::render::{ChromeRenderer, Renderer, RendererConfig, RendererPool, Viewport};
use pagefidelity::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "generate-offline-out".into()));
    let refs = out.join("reference");
    std::fs::create_dir_all(&refs)?;
    for page in synth::corpus(2, 14) {
        std::fs::write(refs.join(format!("{}.html", page.name)), &page.html)?;
    }

    // echoes the number of text lines it was given back as a page
    let server = MockServer::start(|req| {
        let body = req.body_json();
        let text = body["messages"][0]["content"][0]["text"].as_str().unwrap_or("");
        let page = format!("<html><body><h1>Reproduction</h1><p>{} prompt lines</p></body></html>", text.lines().count());
        MockResponse::json(200, &serde_json::json!({"choices": [{"message": {"content": page}}]}))
    })?;
    let client = ModelClient::new(GenerationConfig {
        endpoint: format!("{}/v1/chat/completions", server.url()),
        api_key_env: None,
        ..GenerationConfig::default()
    })?;
    let pool = RendererPool::new(1, || {
        ChromeRenderer::launch(&RendererConfig::default()).map(|r| Box::new(r) as Box<dyn Renderer>)
    })?;

    let prior = out.join(Strategy::TextAugmented.as_str());
    for strategy in Strategy::ALL {
        let dir = out.join(strategy.as_str());
        let summary = cmd_generate(&refs, &dir, strategy, &client, &pool, Viewport::default(), Some(&prior), 1)?;
        println!("{strategy:<15} wrote {:?} failures {}", summary.written, summary.failures.len());
    }
    println!("{} model calls; outputs and transcripts under {}", server.requests().len(), out.display());
    Ok(())
}
