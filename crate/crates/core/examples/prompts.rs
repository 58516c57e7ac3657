//! Builds the direct, text-augmented and self-revision prompts for a page
//! and prints their text and image sizes.
//!
//! cargo run --example prompts -- page.html [previous.html]

use pagefidelity::dom::{extract_text_segments, HtmlDocument};
use pagefidelity::model::{build_direct_prompt, build_self_revision_prompt, build_text_augmented_prompt};
use pagefidelity::render::{ChromeRenderer, Renderer, RendererConfig, Viewport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next().ok_or("usage: prompts <page.html> [previous.html]")?;
    let doc = HtmlDocument::parse_bytes(&std::fs::read(&input)?, input.clone())?;
    let previous_code = match args.next() {
        Some(p) => std::fs::read_to_string(p)?,
        None => "<html><body><h1>First attempt</h1></body></html>".to_string(),
    };
    let previous = HtmlDocument::parse(&previous_code, "previous")?;

    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;
    let vp = Viewport::default();
    let shot = renderer.render(&doc, &vp)?;
    let prev_shot = renderer.render(&previous, &vp)?;
    let texts: Vec<_> = extract_text_segments(&doc).into_iter().filter(|s| s.visible).collect();

    for bundle in [
        build_direct_prompt(&shot)?,
        build_text_augmented_prompt(&shot, &texts)?,
        build_self_revision_prompt(&shot, &prev_shot, &previous_code, &texts)?,
    ] {
        println!("== {} ({} image(s), {} bytes of png)", bundle.strategy, bundle.images.len(), bundle.images.iter().map(|i| i.png.len()).sum::<usize>());
        println!("{}\n", bundle.user_text);
    }
    Ok(())
}
