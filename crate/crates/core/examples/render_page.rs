//! Renders an HTML file to PNG and prints the layout box of each text node.
//!
//! cargo run --example render_page -- page.html out.png

use pagefidelity::dom::{text_segments, HtmlDocument};
use pagefidelity::render::{ChromeRenderer, Renderer, RendererConfig, Viewport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next().ok_or("usage: render_page <page.html> [out.png]")?;
    let output = args.next().unwrap_or_else(|| "page.png".into());

    let doc = HtmlDocument::parse_bytes(&std::fs::read(&input)?, input.clone())?;
    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;
    let viewport = Viewport::default();

    let shot = renderer.render(&doc, &viewport)?;
    shot.save_png(&output)?;
    println!("{} {}x{} -> {output}", renderer.version(), shot.width(), shot.height());

    let segments = text_segments(&doc);
    let paths: Vec<_> = segments.iter().map(|s| s.node_path.clone()).collect();
    let rects = renderer.query_layout(&doc, &viewport, &paths)?;
    for (seg, r) in segments.iter().zip(rects) {
        println!("{:>5} {:>5} {:>5} {:>5}  {}", r.x, r.y, r.w, r.h, seg.text);
    }
    Ok(())
}
