use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{html_files, stem, write_file, BatchError};
use crate::dom::{extract_text_segments, HtmlDocument};
use crate::model::{
    build_direct_prompt, build_self_revision_prompt, build_text_augmented_prompt, extract_html, ModelClient,
    PromptBundle, Strategy, Transcript,
};
use crate::render::{RendererPool, Viewport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub page: String,
    /// One of `parse`, `render`, `prompt`, `model`, `extract`.
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub written: Vec<String>,
    pub failures: Vec<GenerationFailure>,
}

struct Job<'a> {
    client: &'a ModelClient,
    pool: &'a RendererPool,
    viewport: Viewport,
    strategy: Strategy,
    prior_dir: Option<&'a Path>,
    out_dir: &'a Path,
}

/// Generates one candidate page per reference page in `ref_dir`. Output
/// `<page>.html` goes to `out_dir` with `<page>.<strategy>.transcript.json`
/// beside it. Self-revision reads its initial solutions (the text-augmented
/// generations) from `prior_dir`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_generate(
    ref_dir: &Path,
    out_dir: &Path,
    strategy: Strategy,
    client: &ModelClient,
    pool: &RendererPool,
    viewport: Viewport,
    prior_dir: Option<&Path>,
    parallel: usize,
) -> Result<GenerationSummary, BatchError> {
    if strategy == Strategy::SelfRevision {
        match prior_dir {
            Some(d) if d.is_dir() => {}
            other => {
                return Err(BatchError::MissingInitialSolution(
                    other.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<none>")),
                ))
            }
        }
    }
    let files = html_files(ref_dir)?;
    let job = Job {
        client,
        pool,
        viewport,
        strategy,
        prior_dir,
        out_dir,
    };
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| BatchError::Other(e.to_string()))?;
    let results: Vec<_> = threads.install(|| files.par_iter().map(|f| generate_one(f, &job)).collect());

    let mut summary = GenerationSummary::default();
    for (file, r) in files.iter().zip(results) {
        match r {
            Ok(()) => summary.written.push(format!("{}.html", stem(file))),
            Err(f) => {
                log::warn!("{}: {} failed: {}", f.page, f.stage, f.message);
                summary.failures.push(f);
            }
        }
    }
    Ok(summary)
}

fn generate_one(path: &Path, job: &Job) -> Result<(), GenerationFailure> {
    let name = stem(path);
    let fail = |stage: &str, message: String| GenerationFailure {
        page: name.clone(),
        stage: stage.to_string(),
        message,
    };
    let parse = |p: &Path| {
        std::fs::read(p)
            .map_err(|e| e.to_string())
            .and_then(|b| HtmlDocument::parse_bytes(&b, name.clone()).map_err(|e| e.to_string()))
            .map_err(|e| fail("parse", format!("{}: {e}", p.display())))
    };
    let reference = parse(path)?;
    let render = |doc: &HtmlDocument| {
        job.pool
            .get()
            .render(doc, &job.viewport)
            .map_err(|e| fail("render", e.to_string()))
    };
    let ref_shot = render(&reference)?;
    let texts: Vec<_> = extract_text_segments(&reference).into_iter().filter(|s| s.visible).collect();

    let mut transcripts = Vec::new();
    let call = |bundle: PromptBundle, transcripts: &mut Vec<Transcript>| {
        let result = job.client.call(&bundle);
        transcripts.push(Transcript::new(&bundle, job.client.config(), &result));
        result.map_err(|e| fail("model", e.to_string()))
    };
    let outcome = (|| {
        let prompt_err = |e: crate::model::PromptError| fail("prompt", e.to_string());
        match job.strategy {
            Strategy::Direct | Strategy::TextAugmented => {
                let bundle = if job.strategy == Strategy::Direct {
                    build_direct_prompt(&ref_shot)
                } else {
                    build_text_augmented_prompt(&ref_shot, &texts)
                }
                .map_err(prompt_err)?;
                let resp = call(bundle, &mut transcripts)?;
                extract_html(&resp.raw).map_err(|e| fail("extract", e.to_string()))
            }
            Strategy::SelfRevision => {
                let prior = job.prior_dir.expect("checked by caller").join(format!("{name}.html"));
                if !prior.is_file() {
                    return Err(fail("parse", format!("missing initial solution {}", prior.display())));
                }
                let mut code = std::fs::read_to_string(&prior).map_err(|e| fail("parse", e.to_string()))?;
                for _ in 0..job.client.config().revision_rounds {
                    let prev_doc = HtmlDocument::parse(&code, name.clone()).map_err(|e| fail("parse", e.to_string()))?;
                    let prev_shot = render(&prev_doc)?;
                    let bundle = build_self_revision_prompt(&ref_shot, &prev_shot, &code, &texts).map_err(prompt_err)?;
                    let resp = call(bundle, &mut transcripts)?;
                    code = extract_html(&resp.raw).map_err(|e| fail("extract", e.to_string()))?;
                }
                Ok(code)
            }
        }
    })();

    let transcript_path = job
        .out_dir
        .join(format!("{name}.{}.transcript.json", job.strategy));
    if !transcripts.is_empty() {
        let json = serde_json::to_string_pretty(&transcripts).expect("transcripts serialize");
        write_file(&transcript_path, json).map_err(|e| fail("extract", e.to_string()))?;
    }
    let html = outcome?;
    write_file(&job.out_dir.join(format!("{name}.html")), html).map_err(|e| fail("extract", e.to_string()))
}
