//! Tag counts, DOM depth and approximate token length of HTML files.
//!
//! cargo run --example dom_stats -- page.html [more.html ...]

use pagefidelity::dom::{compute_stats, ByteRatioCounter, HtmlDocument};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let files: Vec<String> = std::env::args().skip(1).collect();
    if files.is_empty() {
        return Err("usage: dom_stats <page.html>...".into());
    }
    println!("{:>6} {:>6} {:>6} {:>8}  file", "tags", "unique", "depth", "tokens");
    for f in files {
        let doc = HtmlDocument::parse_bytes(&std::fs::read(&f)?, f.clone())?;
        let s = compute_stats(&doc, &ByteRatioCounter);
        println!("{:>6} {:>6} {:>6} {:>8}  {f}", s.total_tags, s.unique_tags, s.dom_depth, s.approx_tokens);
    }
    Ok(())
}
