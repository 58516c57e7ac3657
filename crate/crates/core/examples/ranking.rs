//! Scores each ranking triple: reference against a faithful and a degraded
//! candidate.
//!
//! cargo run --example ranking -- [seed]

use pagefidelity::matching::MatchConfig;
use pagefidelity::metrics::{evaluate_pair, FallbackEmbedder};
use pagefidelity::render::{ChromeRenderer, RendererConfig, Viewport};
use pagefidelity::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let mut renderer = ChromeRenderer::launch(&RendererConfig::default())?;
    let vp = Viewport::default();
    let cfg = MatchConfig::default();
    println!("{:<18} {:>6} {:>6} {:>6} {:>6} {:>6}", "candidate", "block", "text", "pos", "color", "visual");
    for t in synth::ranking_triples(seed) {
        for cand in [&t.faithful, &t.degraded] {
            let r = evaluate_pair(&mut renderer, &t.reference, cand, &vp, &FallbackEmbedder, &cfg)?.report;
            println!(
                "{:<18} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                cand.origin_id(), r.block_match, r.text, r.position, r.color, r.visual
            );
        }
    }
    Ok(())
}
