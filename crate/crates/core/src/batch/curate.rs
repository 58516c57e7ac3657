use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{html_files, io_err, stem, write_file, BatchError, CurationConfig};
use crate::dom::{filter_page, make_standalone, ByteRatioCounter, DedupIndex, FilterReason, HtmlDocument};
use crate::render::placeholder_image;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationSummary {
    /// Pages per verdict reason; every reason is present.
    pub counts: BTreeMap<String, usize>,
    pub written: Vec<String>,
    /// (file, error) for inputs that could not be read or parsed.
    pub unreadable: Vec<(String, String)>,
}

/// Makes every page in `in_dir` standalone, filters and deduplicates it, and
/// writes the survivors to `out_dir` with the placeholder image beside them.
/// Pages are deduplicated in file-name order, so the first copy wins.
pub fn cmd_curate(in_dir: &Path, out_dir: &Path, cfg: &CurationConfig) -> Result<CurationSummary, BatchError> {
    let files = html_files(in_dir)?;
    let prepared: Vec<_> = files
        .par_iter()
        .map(|path| {
            let doc = std::fs::read(path)
                .map_err(|e| e.to_string())
                .and_then(|b| HtmlDocument::parse_bytes(&b, stem(path)).map_err(|e| e.to_string()))?;
            Ok::<_, String>(make_standalone(&doc, &cfg.placeholder))
        })
        .collect();

    let mut summary = CurationSummary {
        counts: FilterReason::ALL.iter().map(|r| (r.as_str().to_string(), 0)).collect(),
        ..Default::default()
    };
    let seen = DedupIndex::new();
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for (path, result) in files.iter().zip(prepared) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let doc = match result {
            Ok(doc) => doc,
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                summary.unreadable.push((name, e));
                continue;
            }
        };
        let verdict = filter_page(&doc, &cfg.policy, &ByteRatioCounter, &seen);
        *summary.counts.entry(verdict.reason.as_str().to_string()).or_default() += 1;
        if verdict.keep {
            write_file(&out_dir.join(&name), doc.serialize())?;
            summary.written.push(name);
        }
    }
    if !summary.written.is_empty() && !Path::new(&cfg.placeholder).is_absolute() {
        write_file(&out_dir.join(&cfg.placeholder), placeholder_image())?;
    }
    Ok(summary)
}
