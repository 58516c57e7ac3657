use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{html_files, stem, write_csv, write_file, write_gallery, BatchError, BatchReport, Failure, Provenance, RunConfig};
use crate::detect::{write_debug_overlay, DetectError};
use crate::dom::HtmlDocument;
use crate::matching::MatchConfig;
use crate::metrics::{evaluate_pair, EmbedError, Embedder, EvalError, MetricReport, Stage};
use crate::render::{RenderError, RendererPool, Viewport};

/// A reference page and the candidate with the same file stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PagePair {
    pub name: String,
    pub reference: PathBuf,
    pub candidate: PathBuf,
}

/// Pairs files by stem. Stems present on one side only come back as
/// `missing_counterpart` failures.
pub fn pair_files(ref_dir: &Path, gen_dir: &Path) -> Result<(Vec<PagePair>, Vec<Failure>), BatchError> {
    let index = |dir: &Path| -> Result<BTreeMap<String, PathBuf>, BatchError> {
        Ok(html_files(dir)?.into_iter().map(|p| (stem(&p), p)).collect())
    };
    let refs = index(ref_dir)?;
    let mut gens = index(gen_dir)?;
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for (name, reference) in refs {
        match gens.remove(&name) {
            Some(candidate) => pairs.push(PagePair { name, reference, candidate }),
            None => failures.push(missing(&name, "candidate")),
        }
    }
    failures.extend(gens.keys().map(|name| missing(name, "reference")));
    Ok((pairs, failures))
}

fn missing(name: &str, side: &str) -> Failure {
    Failure {
        page: name.to_string(),
        stage: Stage::Parse,
        kind: "missing_counterpart".into(),
        message: format!("missing counterpart: no {side} page named {name}"),
    }
}

/// Shared resources for an evaluation run.
pub struct EvalContext<'a> {
    pub pool: &'a RendererPool,
    pub embedder: &'a dyn Embedder,
    pub viewport: Viewport,
    pub matching: MatchConfig,
    pub parallel: usize,
    /// Also write detected-block overlays next to the gallery screenshots.
    pub debug_blocks: bool,
    pub output_dir: PathBuf,
    /// Recorded in the report provenance.
    pub config: RunConfig,
}

fn classify(e: &EvalError) -> &'static str {
    match e {
        EvalError::Render(RenderError::Unavailable(_)) => "renderer_unavailable",
        EvalError::Render(RenderError::Timeout(_)) => "render_timeout",
        EvalError::Render(RenderError::MalformedPage(_)) => "malformed_page",
        EvalError::Render(_) => "render_error",
        EvalError::Detect(DetectError::PaletteExhausted { .. }) => "palette_exhausted",
        EvalError::Detect(DetectError::Degenerate { .. }) => "detection_degenerate",
        EvalError::Detect(_) => "detection_error",
        EvalError::Embed(EmbedError::Unavailable(_)) => "embedder_unavailable",
        EvalError::Embed(_) => "embedder_error",
    }
}

fn evaluate_one(pair: &PagePair, ctx: &EvalContext) -> Result<MetricReport, Failure> {
    let fail = |stage: Stage, kind: &str, message: String| Failure {
        page: pair.name.clone(),
        stage,
        kind: kind.to_string(),
        message,
    };
    let load = |path: &Path| {
        std::fs::read(path)
            .map_err(|e| e.to_string())
            .and_then(|b| HtmlDocument::parse_bytes(&b, pair.name.clone()).map_err(|e| e.to_string()))
            .map_err(|e| fail(Stage::Parse, "parse_error", format!("{}: {e}", path.display())))
    };
    let reference = load(&pair.reference)?;
    let candidate = load(&pair.candidate)?;

    let mut renderer = ctx.pool.get();
    let eval = evaluate_pair(&mut *renderer, &reference, &candidate, &ctx.viewport, ctx.embedder, &ctx.matching)
        .map_err(|e| fail(e.stage(), classify(&e), e.to_string()))?;
    drop(renderer);

    let gallery = ctx.output_dir.join("gallery");
    let save = |shot: &crate::render::Screenshot, suffix: &str| {
        let path = gallery.join(format!("{}.{suffix}.png", pair.name));
        if let Err(e) = std::fs::create_dir_all(&gallery).map_err(|e| e.to_string()).and_then(|_| shot.save_png(&path).map_err(|e| e.to_string())) {
            log::warn!("could not write {}: {e}", path.display());
        }
    };
    save(&eval.reference.baseline, "ref");
    save(&eval.candidate.baseline, "gen");
    if ctx.debug_blocks {
        for (det, suffix) in [(&eval.reference, "ref.blocks"), (&eval.candidate, "gen.blocks")] {
            let path = gallery.join(format!("{}.{suffix}.png", pair.name));
            if let Err(e) = write_debug_overlay(&det.baseline, &det.blocks, &path) {
                log::warn!("could not write {}: {e}", path.display());
            }
        }
    }
    Ok(eval.report)
}

/// Scores every reference/candidate pair and writes `report.json`,
/// `report.csv` and `gallery/index.html` under the output directory.
/// Per-pair failures are recorded, not raised.
pub fn cmd_evaluate(ref_dir: &Path, gen_dir: &Path, ctx: &EvalContext) -> Result<BatchReport, BatchError> {
    let (pairs, mut failures) = pair_files(ref_dir, gen_dir)?;
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.parallel.max(1))
        .build()
        .map_err(|e| BatchError::Other(e.to_string()))?;
    let results: Vec<Result<MetricReport, Failure>> =
        threads.install(|| pairs.par_iter().map(|p| evaluate_one(p, ctx)).collect());

    let mut pages = Vec::new();
    for r in results {
        match r {
            Ok(report) => pages.push(report),
            Err(f) => {
                log::warn!("{} failed at {}: {}", f.page, f.stage, f.message);
                failures.push(f);
            }
        }
    }
    let report = BatchReport::new(
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            renderer_version: ctx.pool.version().to_string(),
            embedder_id: ctx.embedder.embedder_id().to_string(),
            config: ctx.config.clone(),
        },
        pages,
        failures,
    );
    write_file(&ctx.output_dir.join("report.json"), report.to_json())?;
    write_csv(&report, &ctx.output_dir.join("report.csv"))?;
    write_gallery(&report, &ctx.output_dir.join("gallery").join("index.html"))?;
    Ok(report)
}
