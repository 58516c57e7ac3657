//! The five similarity scores between a reference page and a candidate.

mod color;
mod embed;
mod inpaint;

pub use color::{ciede2000, color_similarity, LabColor};
pub use embed::{
    cosine, square_resize, visual_score, EmbedError, Embedder, EmbeddingVector, FallbackEmbedder,
    SidecarEmbedder, SidecarHealth, FALLBACK_ID,
};
pub use inpaint::{inpaint, mask_and_inpaint, INPAINT_RADIUS};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{detect_blocks, DetectError, Detection};
use crate::dom::HtmlDocument;
use crate::matching::{match_blocks, MatchConfig, MatchOutcome, MatchedPair, Matching, MergePlan, MergedBlock};
use crate::render::{RenderError, Renderer, Viewport};

/// Size-weighted share of block mass that found a partner. 1 when both
/// sides are empty, 0 when exactly one is.
pub fn block_match_score(matching: &Matching, r: &[MergedBlock], g: &[MergedBlock]) -> f64 {
    match (r.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let matched: f64 = matching
        .pairs
        .iter()
        .map(|p| r[p.ref_index].size + g[p.gen_index].size)
        .fold(0.0, |a, b| a + b);
    let unmatched: f64 = matching.unmatched_ref.iter().map(|&i| r[i].size).sum::<f64>()
        + matching.unmatched_gen.iter().map(|&j| g[j].size).sum::<f64>();
    let total = matched + unmatched;
    if total == 0.0 {
        // Every block has zero area; fall back to counting.
        return if unmatched_count(matching) == 0 { 1.0 } else { 0.0 };
    }
    matched / total
}

fn unmatched_count(m: &Matching) -> usize {
    m.unmatched_ref.len() + m.unmatched_gen.len()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean text similarity over matched pairs; 0 without pairs.
pub fn text_score(matching: &Matching) -> f64 {
    mean(matching.pairs.iter().map(|p| p.text_sim))
}

pub fn pair_position(r: (f64, f64), g: (f64, f64)) -> f64 {
    (1.0 - (g.0 - r.0).abs().max((g.1 - r.1).abs())).clamp(0.0, 1.0)
}

/// Mean of `1 - max(|dx|, |dy|)` over matched pairs' normalized centers.
pub fn position_score(matching: &Matching, r: &[MergedBlock], g: &[MergedBlock]) -> f64 {
    mean(
        matching
            .pairs
            .iter()
            .map(|p| pair_position(r[p.ref_index].center, g[p.gen_index].center)),
    )
}

/// Mean color similarity of matched pairs' text colors.
pub fn color_score(matching: &Matching, r: &[MergedBlock], g: &[MergedBlock]) -> f64 {
    mean(
        matching
            .pairs
            .iter()
            .map(|p| color_similarity(r[p.ref_index].color, g[p.gen_index].color)),
    )
}

/// Five scores plus provenance for one (reference, candidate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ref_id: String,
    pub gen_id: String,
    pub block_match: f64,
    pub text: f64,
    pub position: f64,
    pub color: f64,
    pub visual: f64,
    pub viewport: Viewport,
    pub renderer_version: String,
    pub embedder_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching: Option<MatchSummary>,
}

impl MetricReport {
    pub const DIMENSIONS: [&'static str; 5] = ["block_match", "text", "position", "color", "visual"];

    pub fn score(&self, dim: &str) -> Option<f64> {
        match dim {
            "block_match" => Some(self.block_match),
            "text" => Some(self.text),
            "position" => Some(self.position),
            "color" => Some(self.color),
            "visual" => Some(self.visual),
            _ => None,
        }
    }

    /// A report carrying only scores; provenance fields are left blank.
    pub fn from_scores(ref_id: impl Into<String>, gen_id: impl Into<String>, scores: [f64; 5]) -> Self {
        let [block_match, text, position, color, visual] = scores;
        MetricReport {
            ref_id: ref_id.into(),
            gen_id: gen_id.into(),
            block_match,
            text,
            position,
            color,
            visual,
            viewport: Viewport::default(),
            renderer_version: String::new(),
            embedder_id: String::new(),
            matching: None,
        }
    }

    pub fn scores(&self) -> [f64; 5] {
        [self.block_match, self.text, self.position, self.color, self.visual]
    }
}

/// Matching details kept in reports for debugging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_ref: Vec<usize>,
    pub unmatched_gen: Vec<usize>,
    pub plan_ref: MergePlan,
    pub plan_gen: MergePlan,
    pub ref_texts: Vec<String>,
    pub gen_texts: Vec<String>,
}

impl From<&MatchOutcome> for MatchSummary {
    fn from(o: &MatchOutcome) -> Self {
        MatchSummary {
            pairs: o.matching.pairs.clone(),
            unmatched_ref: o.matching.unmatched_ref.clone(),
            unmatched_gen: o.matching.unmatched_gen.clone(),
            plan_ref: o.plan_ref.clone(),
            plan_gen: o.plan_gen.clone(),
            ref_texts: o.ref_blocks.iter().map(|b| b.text.clone()).collect(),
            gen_texts: o.gen_blocks.iter().map(|b| b.text.clone()).collect(),
        }
    }
}

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parse,
    Render,
    Detect,
    Match,
    Metric,
    Embed,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Parse => "parse",
            Stage::Render => "render",
            Stage::Detect => "detect",
            Stage::Match => "match",
            Stage::Metric => "metric",
            Stage::Embed => "embed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("render: {0}")]
    Render(#[from] RenderError),
    #[error("detect: {0}")]
    Detect(DetectError),
    #[error("embed: {0}")]
    Embed(#[from] EmbedError),
}

impl From<DetectError> for EvalError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Render(r) => EvalError::Render(r),
            other => EvalError::Detect(other),
        }
    }
}

impl EvalError {
    pub fn stage(&self) -> Stage {
        match self {
            EvalError::Render(_) => Stage::Render,
            EvalError::Detect(_) => Stage::Detect,
            EvalError::Embed(_) => Stage::Embed,
        }
    }
}

/// Everything computed for one pair; the report is the durable part.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub report: MetricReport,
    pub reference: Detection,
    pub candidate: Detection,
    pub outcome: MatchOutcome,
}

/// Scores from a finished match, without the visual channel.
pub fn low_level_scores(outcome: &MatchOutcome) -> [f64; 4] {
    let (m, r, g) = (&outcome.matching, &outcome.ref_blocks, &outcome.gen_blocks);
    [
        block_match_score(m, r, g),
        text_score(m),
        position_score(m, r, g),
        color_score(m, r, g),
    ]
}

/// Renders and detects both pages, matches their blocks, and computes all
/// five scores.
pub fn evaluate_pair(
    renderer: &mut dyn Renderer,
    reference: &HtmlDocument,
    candidate: &HtmlDocument,
    viewport: &Viewport,
    embedder: &dyn Embedder,
    match_config: &MatchConfig,
) -> Result<PairEvaluation, EvalError> {
    let ref_det = detect_blocks(renderer, reference, viewport)?;
    let gen_det = detect_blocks(renderer, candidate, viewport)?;
    let outcome = match_blocks(&ref_det.blocks, &gen_det.blocks, match_config);
    let [block_match, text, position, color] = low_level_scores(&outcome);

    let masked_r = mask_and_inpaint(&ref_det.baseline, &ref_det.blocks);
    let masked_g = mask_and_inpaint(&gen_det.baseline, &gen_det.blocks);
    let visual = visual_score(&masked_r, &masked_g, embedder)?;

    let report = MetricReport {
        ref_id: reference.origin_id().to_string(),
        gen_id: candidate.origin_id().to_string(),
        block_match,
        text,
        position,
        color,
        visual,
        viewport: *viewport,
        renderer_version: renderer.version().to_string(),
        embedder_id: embedder.embedder_id().to_string(),
        matching: Some(MatchSummary::from(&outcome)),
    };
    Ok(PairEvaluation {
        report,
        reference: ref_det,
        candidate: gen_det,
        outcome,
    })
}
