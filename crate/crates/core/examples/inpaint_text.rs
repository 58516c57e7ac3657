//! Detects text on a page, paints it out with inpainting, and saves the
//! image the visual score embeds.
//!
//! cargo run --example inpaint_text -- page.html masked.png

use pagefidelity::detect::detect_blocks;
use pagefidelity::dom::HtmlDocument;
use pagefidelity::metrics::mask_and_inpaint;
use pagefidelity::render::{ChromeRenderer, RendererConfig, Viewport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next().ok_or("usage: inpaint_text <page.html> [masked.png]")?;
    let output = args.next().unwrap_or_else(|| "masked.png".into());
    let doc = HtmlDocument::parse_bytes(&std::fs::read(&input)?, input.clone())?;
    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;
    let det = detect_blocks(&mut renderer, &doc, &Viewport::default())?;
    let masked = mask_and_inpaint(&det.baseline, &det.blocks);
    masked.save_png(&output)?;
    let pixels: usize = det.blocks.blocks.iter().map(|b| b.pixel_mask.len()).sum();
    println!("{} blocks, {pixels} text pixels painted out -> {output}", det.blocks.len());
    Ok(())
}
