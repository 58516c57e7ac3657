//! Scores a few synthetic pages against programmatically degraded copies.
//!
//! cargo run --example degradations -- [pages] [out_dir]

use pagefidelity::matching::MatchConfig;
use pagefidelity::metrics::{evaluate_pair, FallbackEmbedder};
use pagefidelity::render::{ChromeRenderer, RendererConfig, Viewport};
use pagefidelity::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let pages: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let out_dir = args.next();
    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;
    let vp = Viewport::default();
    let cfg = MatchConfig::default();

    println!("{:<8} {:<10} {:>6} {:>6} {:>6} {:>6} {:>6}", "page", "variant", "block", "text", "pos", "color", "visual");
    for page in synth::corpus(pages, 1) {
        let doc = page.document();
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(format!("{dir}/{}.html", page.name), &page.html)?;
        }
        let accent = synth::heading_color(&page).unwrap_or(pagefidelity::blocks::Rgb::BLACK);
        let variants = [
            ("identity", doc.clone()),
            ("delete", synth::delete_last_paragraph(&doc)),
            ("shift", synth::shift_block(&doc, 200)),
            ("recolor", synth::recolor_text(&doc, synth::opposite(accent))),
        ];
        for (name, cand) in variants {
            let eval = evaluate_pair(&mut renderer, &doc, &cand, &vp, &FallbackEmbedder, &cfg)?;
            let r = &eval.report;
            println!(
                "{:<8} {:<10} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                page.name, name, r.block_match, r.text, r.position, r.color, r.visual
            );
        }
    }
    Ok(())
}
