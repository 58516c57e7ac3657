use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_err, write_file, BatchError, RunConfig};
use crate::dom::DomStats;
use crate::metrics::{MetricReport, Stage};

/// A pair that produced no scores.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Failure {
    pub page: String,
    pub stage: Stage,
    /// Machine-readable cause, e.g. `render_timeout` or `missing_counterpart`.
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeans {
    pub pages: usize,
    pub block_match: f64,
    pub text: f64,
    pub position: f64,
    pub color: f64,
    pub visual: f64,
}

impl ScoreMeans {
    /// Arithmetic means in report order; all zero for no reports.
    pub fn of(reports: &[MetricReport]) -> Self {
        let n = reports.len();
        if n == 0 {
            return ScoreMeans::default();
        }
        let mut sums = [0.0f64; 5];
        for r in reports {
            for (s, v) in sums.iter_mut().zip(r.scores()) {
                *s += v;
            }
        }
        let [block_match, text, position, color, visual] = sums.map(|s| s / n as f64);
        ScoreMeans {
            pages: n,
            block_match,
            text,
            position,
            color,
            visual,
        }
    }

    pub fn scores(&self) -> [f64; 5] {
        [self.block_match, self.text, self.position, self.color, self.visual]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub renderer_version: String,
    pub embedder_id: String,
    pub config: RunConfig,
}

/// Canonical output of an evaluation run. Pages and failures are sorted and
/// nothing time-dependent is recorded, so identical inputs give identical
/// bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub provenance: Provenance,
    pub means: ScoreMeans,
    pub pages: Vec<MetricReport>,
    pub failures: Vec<Failure>,
}

impl BatchReport {
    pub fn new(provenance: Provenance, mut pages: Vec<MetricReport>, mut failures: Vec<Failure>) -> Self {
        pages.sort_by(|a, b| a.ref_id.cmp(&b.ref_id));
        failures.sort();
        BatchReport {
            means: ScoreMeans::of(&pages),
            provenance,
            pages,
            failures,
        }
    }

    pub fn total(&self) -> usize {
        self.pages.len() + self.failures.len()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Reads reports from an evaluation JSON (its `pages`) or from a bare JSON
/// array of reports.
pub fn load_reports(path: &Path) -> Result<Vec<MetricReport>, BatchError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    if let Ok(batch) = serde_json::from_str::<BatchReport>(&text) {
        return Ok(batch.pages);
    }
    #[derive(Deserialize)]
    struct Pages {
        pages: Vec<MetricReport>,
    }
    serde_json::from_str::<Vec<MetricReport>>(&text)
        .or_else(|_| serde_json::from_str::<Pages>(&text).map(|p| p.pages))
        .map_err(|e| BatchError::Usage(format!("{}: not a report file: {e}", path.display())))
}

/// One row per page plus a final `MEAN` row.
pub fn write_csv(report: &BatchReport, path: &Path) -> Result<(), BatchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| BatchError::Other(e.to_string());
    w.write_record(["page", "candidate", "block_match", "text", "position", "color", "visual"])
        .map_err(err)?;
    let row = |page: &str, gen: &str, s: [f64; 5]| {
        let mut r = vec![page.to_string(), gen.to_string()];
        r.extend(s.iter().map(|v| v.to_string()));
        r
    };
    for p in &report.pages {
        w.write_record(row(&p.ref_id, &p.gen_id, p.scores())).map_err(err)?;
    }
    w.write_record(row("MEAN", "", report.means.scores())).map_err(err)?;
    let bytes = w.into_inner().map_err(|e| BatchError::Other(e.to_string()))?;
    write_file(path, bytes)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Static side-by-side gallery. Screenshot paths are relative to the
/// gallery file: `<page>.ref.png` and `<page>.gen.png`.
pub fn write_gallery(report: &BatchReport, path: &Path) -> Result<(), BatchError> {
    let mut html = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Evaluation gallery</title><style>\n\
body { font-family: sans-serif; margin: 20px }\n\
table { border-collapse: collapse }\n\
td, th { border: 1px solid #ccc; padding: 6px; vertical-align: top }\n\
img { width: 360px }\n\
</style></head><body>\n",
    );
    let m = &report.means;
    html += &format!(
        "<h1>Evaluation gallery</h1>\n<p>{} pages scored, {} failed. Renderer {}, embedder {}.</p>\n",
        report.pages.len(),
        report.failures.len(),
        escape(&report.provenance.renderer_version),
        escape(&report.provenance.embedder_id)
    );
    html += "<table>\n<tr><th>page</th><th>reference</th><th>candidate</th><th>block</th><th>text</th><th>position</th><th>color</th><th>visual</th></tr>\n";
    for p in &report.pages {
        let id = escape(&p.ref_id);
        html += &format!("<tr><td>{id}</td><td><img src=\"{id}.ref.png\" alt=\"\"></td><td><img src=\"{id}.gen.png\" alt=\"\"></td>");
        for s in p.scores() {
            html += &format!("<td>{s:.4}</td>");
        }
        html += "</tr>\n";
    }
    html += "<tr><th>mean</th><td></td><td></td>";
    for s in m.scores() {
        html += &format!("<th>{s:.4}</th>");
    }
    html += "</tr>\n</table>\n";
    if !report.failures.is_empty() {
        html += "<h2>Failures</h2>\n<ul>\n";
        for f in &report.failures {
            html += &format!("<li>{} [{}]: {}</li>\n", escape(&f.page), f.stage, escape(&f.message));
        }
        html += "</ul>\n";
    }
    html += "</body></html>\n";
    write_file(path, html)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub pages: Vec<(String, DomStats)>,
    pub unreadable: Vec<(String, String)>,
    pub mean_total_tags: f64,
    pub mean_unique_tags: f64,
    pub mean_dom_depth: f64,
    pub mean_tokens: f64,
}

impl StatsReport {
    pub fn new(pages: Vec<(String, DomStats)>, unreadable: Vec<(String, String)>) -> Self {
        let n = pages.len().max(1) as f64;
        let mean = |f: fn(&DomStats) -> usize| pages.iter().map(|(_, s)| f(s) as f64).sum::<f64>() / n;
        StatsReport {
            mean_total_tags: mean(|s| s.total_tags),
            mean_unique_tags: mean(|s| s.unique_tags),
            mean_dom_depth: mean(|s| s.dom_depth),
            mean_tokens: mean(|s| s.approx_tokens),
            pages,
            unreadable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance {
            tool_version: "t".into(),
            renderer_version: "r".into(),
            embedder_id: "e".into(),
            config: RunConfig::default(),
        }
    }

    #[test]
    fn means_and_csv_agree() {
        let pages = vec![
            MetricReport::from_scores("b", "b", [0.1, 0.2, 0.3, 0.4, 0.5]),
            MetricReport::from_scores("a", "a", [1.0, 0.7, 0.35, 0.9, 1.0 / 3.0]),
        ];
        let failure = Failure { page: "c".into(), stage: Stage::Render, kind: "render_timeout".into(), message: "x".into() };
        let report = BatchReport::new(provenance(), pages, vec![failure]);
        assert_eq!(report.pages[0].ref_id, "a");
        assert_eq!(report.total(), 3);

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("r.csv");
        write_csv(&report, &csv_path).unwrap();
        let mut rd = csv::Reader::from_path(&csv_path).unwrap();
        let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(&rows[2][0], "MEAN");
        let json: BatchReport = serde_json::from_str(&report.to_json()).unwrap();
        for (i, col) in (2..7).enumerate() {
            let from_csv: f64 = rows[2][col].parse().unwrap();
            let recomputed = json.pages.iter().map(|p| p.scores()[i]).sum::<f64>() / json.pages.len() as f64;
            assert_eq!(from_csv, recomputed);
        }
    }

    #[test]
    fn reports_load_from_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let pages = vec![MetricReport::from_scores("a", "a", [1.0; 5])];
        let batch = BatchReport::new(provenance(), pages.clone(), vec![]);
        let p1 = dir.path().join("batch.json");
        std::fs::write(&p1, batch.to_json()).unwrap();
        let p2 = dir.path().join("list.json");
        std::fs::write(&p2, serde_json::to_string(&pages).unwrap()).unwrap();
        assert_eq!(load_reports(&p1).unwrap(), pages);
        assert_eq!(load_reports(&p2).unwrap(), pages);
        std::fs::write(&p2, "{}").unwrap();
        assert!(matches!(load_reports(&p2), Err(BatchError::Usage(_))));
    }

    #[test]
    fn gallery_escapes_names() {
        let dir = tempfile::tempdir().unwrap();
        let report = BatchReport::new(provenance(), vec![MetricReport::from_scores("<x>", "g", [0.5; 5])], vec![]);
        let path = dir.path().join("index.html");
        write_gallery(&report, &path).unwrap();
        let html = std::fs::read_to_string(path).unwrap();
        assert!(html.contains("&lt;x&gt;.ref.png"));
        assert!(!html.contains("<x>"));
    }
}
