//! Scores one candidate page against a reference page and prints the report
//! as JSON.
//!
//! cargo run --example evaluate_pair -- reference.html candidate.html

use pagefidelity::dom::HtmlDocument;
use pagefidelity::matching::MatchConfig;
use pagefidelity::metrics::{evaluate_pair, FallbackEmbedder};
use pagefidelity::render::{ChromeRenderer, RendererConfig, Viewport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(r), Some(g)) = (args.next(), args.next()) else {
        return Err("usage: evaluate_pair <reference.html> <candidate.html>".into());
    };
    let load = |p: &str| -> Result<HtmlDocument, Box<dyn std::error::Error>> {
        Ok(HtmlDocument::parse_bytes(&std::fs::read(p)?, p)?)
    };
    let (reference, candidate) = (load(&r)?, load(&g)?);
    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;
    let eval = evaluate_pair(
        &mut renderer,
        &reference,
        &candidate,
        &Viewport::default(),
        &FallbackEmbedder,
        &MatchConfig::default(),
    )?;
    println!("{}", serde_json::to_string_pretty(&eval.report)?);
    Ok(())
}
