//! Evaluates a directory of candidates against a directory of references
//! with a renderer pool, writing report.json, report.csv and a gallery.
//!
//! cargo run --example batch_evaluate -- ref_dir gen_dir out_dir [parallel]
//!
//! Without arguments, scores synthetic pages against degraded copies.

use pagefidelity::batch::{cmd_evaluate, EvalContext, RunConfig};
use pagefidelity::metrics::FallbackEmbedder;
use pagefidelity::render::{ChromeRenderer, Renderer, RendererConfig, RendererPool};
use pagefidelity::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let (ref_dir, gen_dir, out_dir) = if args.len() >= 3 {
        (args[0].clone().into(), args[1].clone().into(), args[2].clone().into())
    } else {
        let (r, g) = (tmp.path().join("ref"), tmp.path().join("gen"));
        std::fs::create_dir_all(&r)?;
        std::fs::create_dir_all(&g)?;
        for page in synth::corpus(4, 21) {
            let doc = page.document();
            std::fs::write(r.join(format!("{}.html", page.name)), &page.html)?;
            std::fs::write(g.join(format!("{}.html", page.name)), synth::shift_block(&doc, 120).serialize())?;
        }
        (r, g, std::path::PathBuf::from("batch-evaluate-out"))
    };
    let parallel: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(2);

    let config = RunConfig { parallel, ..RunConfig::default() };
    let pool = RendererPool::new(parallel, || {
        ChromeRenderer::launch(&RendererConfig::default()).map(|r| Box::new(r) as Box<dyn Renderer>)
    })?;
    let ctx = EvalContext {
        pool: &pool,
        embedder: &FallbackEmbedder,
        viewport: config.viewport,
        matching: config.matching,
        parallel,
        debug_blocks: true,
        output_dir: out_dir,
        config: config.clone(),
    };
    let report = cmd_evaluate(&ref_dir, &gen_dir, &ctx)?;
    for p in &report.pages {
        let [b, t, pos, c, v] = p.scores();
        println!("{:<10} {b:.3} {t:.3} {pos:.3} {c:.3} {v:.3}", p.ref_id);
    }
    for f in &report.failures {
        println!("{:<10} failed at {}: {}", f.page, f.stage, f.kind);
    }
    println!("gallery: {}", ctx.output_dir.join("gallery/index.html").display());
    Ok(())
}
