//! Batch commands behind the CLI: curation, generation, evaluation, win-rate
//! simulation, and corpus statistics.

mod config;
mod curate;
mod evaluate;
mod generate;
mod report;

pub use config::{CurationConfig, EmbedderConfig, EmbedderKind, RunConfig};
pub use curate::{cmd_curate, CurationSummary};
pub use evaluate::{cmd_evaluate, pair_files, EvalContext, PagePair};
pub use generate::{cmd_generate, GenerationFailure, GenerationSummary};
pub use report::{
    load_reports, write_csv, write_gallery, BatchReport, Failure, Provenance, ScoreMeans, StatsReport,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dom::{compute_stats, ByteRatioCounter, HtmlDocument};
use crate::metrics::{EmbedError, MetricReport};
use crate::render::RenderError;
use crate::winrate::{simulate_win_rate, WinRate, WinRateError, WinRateModel};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    WinRate(#[from] WinRateError),
    #[error("self-revision needs the text-augmented generations: missing initial solution in {0}")]
    MissingInitialSolution(PathBuf),
    #[error("{0}")]
    Other(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `*.html` / `*.htm` files directly inside `dir`, sorted by name.
pub fn html_files(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
        })
        .collect();
    out.sort();
    Ok(out)
}

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), BatchError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), BatchError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| BatchError::Other(e.to_string()))?;
    text.push('\n');
    write_file(path, text)
}

/// Simulated win rate of `candidate` against `baseline`, both evaluation
/// reports over the same reference pages.
pub fn cmd_winrate(
    candidate: &Path,
    baseline: &Path,
    model_file: Option<&Path>,
) -> Result<WinRate, BatchError> {
    for p in [candidate, baseline] {
        if !p.is_file() {
            return Err(BatchError::Usage(format!("{} not found", p.display())));
        }
    }
    let model = match model_file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            WinRateModel::from_json(&text).map_err(|e| BatchError::Usage(format!("{}: {e}", p.display())))?
        }
        None => WinRateModel::published(),
    };
    let cand = load_reports(candidate)?;
    let base = load_reports(baseline)?;
    let (cand, base) = align(cand, base)?;
    Ok(simulate_win_rate(&model, &cand, &base)?)
}

/// Keeps pages present in both sets, ordered by reference id. Pages only one
/// side scored are dropped with a warning.
fn align(
    mut cand: Vec<MetricReport>,
    mut base: Vec<MetricReport>,
) -> Result<(Vec<MetricReport>, Vec<MetricReport>), BatchError> {
    cand.sort_by(|a, b| a.ref_id.cmp(&b.ref_id));
    base.sort_by(|a, b| a.ref_id.cmp(&b.ref_id));
    let keep: std::collections::BTreeSet<String> = cand
        .iter()
        .map(|r| r.ref_id.clone())
        .filter(|id| base.iter().any(|b| &b.ref_id == id))
        .collect();
    let dropped = cand.len() + base.len() - 2 * keep.len();
    if dropped > 0 {
        log::warn!("{dropped} report(s) have no counterpart and are skipped");
    }
    if keep.is_empty() {
        return Err(BatchError::WinRate(WinRateError::Empty));
    }
    cand.retain(|r| keep.contains(&r.ref_id));
    base.retain(|r| keep.contains(&r.ref_id));
    Ok((cand, base))
}

/// Per-page DOM statistics for every HTML file in `dir`.
pub fn cmd_stats(dir: &Path) -> Result<StatsReport, BatchError> {
    let mut pages = Vec::new();
    let mut unreadable = Vec::new();
    for path in html_files(dir)? {
        let parsed = std::fs::read(&path)
            .map_err(|e| e.to_string())
            .and_then(|b| HtmlDocument::parse_bytes(&b, stem(&path)).map_err(|e| e.to_string()));
        match parsed {
            Ok(doc) => pages.push((stem(&path), compute_stats(&doc, &ByteRatioCounter))),
            Err(e) => unreadable.push((stem(&path), e)),
        }
    }
    Ok(StatsReport::new(pages, unreadable))
}
