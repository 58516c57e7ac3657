//! Detects text blocks on a page and compares each against the renderer's
//! own layout box for the same text node.
//!
//! cargo run --example detect_blocks -- page.html [overlay.png]

use pagefidelity::detect::{detect_blocks, write_debug_overlay};
use pagefidelity::dom::{extract_text_segments, HtmlDocument};
use pagefidelity::render::{ChromeRenderer, Renderer, RendererConfig, Viewport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next().ok_or("usage: detect_blocks <page.html> [overlay.png]")?;
    let doc = HtmlDocument::parse_bytes(&std::fs::read(&input)?, input.clone())?;
    let viewport = Viewport::default();
    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;

    let detection = detect_blocks(&mut renderer, &doc, &viewport)?;
    let segments = extract_text_segments(&doc);
    let paths: Vec<_> = segments.iter().map(|s| s.node_path.clone()).collect();
    let layout = renderer.query_layout(&doc, &viewport, &paths)?;

    println!("{:>4} {:>6} {:>22} {:>22}  text", "id", "iou", "detected", "layout");
    for block in &detection.blocks.blocks {
        let truth = layout[block.segment_id];
        let b = block.bbox;
        println!(
            "{:>4} {:>6.3} {:>22} {:>22}  {} {}",
            block.segment_id,
            b.iou(&truth),
            format!("{},{} {}x{}", b.x, b.y, b.w, b.h),
            format!("{},{} {}x{}", truth.x, truth.y, truth.w, truth.h),
            block.text_color.css(),
            block.text,
        );
    }
    for id in &detection.missing {
        println!("{id:>4} missing  {}", segments[*id].text);
    }
    if let Some(out) = args.next() {
        write_debug_overlay(&detection.baseline, &detection.blocks, out.as_ref())?;
    }
    Ok(())
}
