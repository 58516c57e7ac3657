//! Makes a directory of scraped pages standalone, filters and deduplicates
//! them, and prints the verdict counts.
//!
//! cargo run --example curate -- raw_dir out_dir
//!
//! Without arguments a small messy corpus is written to a temp dir first.

use pagefidelity::batch::{cmd_curate, CurationConfig};
use pagefidelity::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let tmp = tempfile::tempdir()?;
    let (input, output) = match (args.next(), args.next()) {
        (Some(i), Some(o)) => (i.into(), o.into()),
        _ => {
            let raw = tmp.path().join("raw");
            std::fs::create_dir_all(&raw)?;
            for page in synth::corpus(4, 5) {
                let messy = page.html.replace(
                    "</body>",
                    "<script src=\"https://cdn.example.com/x.js\"></script><iframe src=\"https://example.com\"></iframe></body>",
                );
                std::fs::write(raw.join(format!("{}.html", page.name)), messy)?;
            }
            // an exact copy and a page with no image
            std::fs::copy(raw.join("page000.html"), raw.join("page000-copy.html"))?;
            std::fs::write(raw.join("plain.html"), "<html><body><p>only words here</p></body></html>")?;
            (raw, tmp.path().join("curated"))
        }
    };
    let summary = cmd_curate(&input, &output, &CurationConfig::default())?;
    for (reason, n) in &summary.counts {
        println!("{reason:<12} {n}");
    }
    println!("written to {}: {}", output.display(), summary.written.join(", "));
    Ok(())
}
