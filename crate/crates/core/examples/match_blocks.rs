//! Optimal block matching with merge search on hand-made block sets, and the
//! Block-Match, text, position and color scores that follow from it.
//!
//! cargo run --example match_blocks

use pagefidelity::blocks::{BlockSet, Rect, Rgb, TextBlock};
use pagefidelity::matching::{exhaustive_merge_optimum, match_blocks, MatchConfig};
use pagefidelity::metrics::low_level_scores;

fn lines(texts: &[(&str, Rgb)], x: u32) -> BlockSet {
    let dims = (1280, 720);
    let blocks = texts
        .iter()
        .enumerate()
        .map(|(i, (t, c))| TextBlock::from_bbox(i, *t, Rect::new(x, 40 + 36 * i as u32, 9 * t.len() as u32, 24), *c, dims))
        .collect();
    BlockSet::new(blocks, dims)
}

fn main() {
    let black = Rgb::BLACK;
    let reference = lines(&[("Quarterly report", black), ("Revenue grew in every region", black), ("Contact us", black)], 40);
    // candidate splits the second line, drops the third and adds a stray line
    let candidate = lines(
        &[("Quarterly report", Rgb([40, 40, 200])), ("Revenue grew", black), ("in every region", black), ("Subscribe now", black)],
        60,
    );

    for budget in [0, 50] {
        let cfg = MatchConfig { merge_budget: budget, ..MatchConfig::default() };
        let out = match_blocks(&reference, &candidate, &cfg);
        println!("merge budget {budget}: {} re-solves, trace {:?}", out.resolves, out.trace);
        for p in &out.matching.pairs {
            println!(
                "  {:?} <-> {:?}  sim {:.3}",
                out.ref_blocks[p.ref_index].text, out.gen_blocks[p.gen_index].text, p.text_sim
            );
        }
        let [block, text, position, color] = low_level_scores(&out);
        println!("  block {block:.3} text {text:.3} position {position:.3} color {color:.3}");
    }
    let cfg = MatchConfig::default();
    println!("exhaustive optimum {:.3}", exhaustive_merge_optimum(&reference, &candidate, &cfg));
}
