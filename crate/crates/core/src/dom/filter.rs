use std::collections::HashSet;
use std::fmt;
use std::sync::{LazyLock, Mutex};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{compute_stats, extract_text_segments, normalize_whitespace, HtmlDocument, TokenCounter};

static COMMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<!--.*?-->").unwrap());

/// Removes `<!-- ... -->` comments from source text.
pub fn strip_comments(source: &str) -> String {
    COMMENT.replace_all(source, "").into_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    TooLong,
    OnlyImages,
    OnlyText,
    Duplicate,
    Ok,
}

impl FilterReason {
    pub const ALL: [FilterReason; 5] = [
        FilterReason::Ok,
        FilterReason::TooLong,
        FilterReason::OnlyImages,
        FilterReason::OnlyText,
        FilterReason::Duplicate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterReason::TooLong => "too_long",
            FilterReason::OnlyImages => "only_images",
            FilterReason::OnlyText => "only_text",
            FilterReason::Duplicate => "duplicate",
            FilterReason::Ok => "ok",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub keep: bool,
    pub reason: FilterReason,
}

impl From<FilterReason> for FilterVerdict {
    fn from(reason: FilterReason) -> Self {
        FilterVerdict {
            keep: reason == FilterReason::Ok,
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    pub max_tokens: usize,
    /// Reject pages without any visible text.
    pub reject_only_images: bool,
    /// Reject pages without any `<img>` or `<video>`.
    pub reject_only_text: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            max_tokens: 100_000,
            reject_only_images: true,
            reject_only_text: true,
        }
    }
}

/// SHA-256 of the comment-stripped, whitespace-normalized source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey(pub [u8; 32]);

impl fmt::Display for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

pub fn dedup_key(doc: &HtmlDocument) -> DedupKey {
    let normalized = normalize_whitespace(&strip_comments(doc.source()));
    DedupKey(Sha256::digest(normalized.as_bytes()).into())
}

/// Set of already-accepted pages, shared across curation workers.
#[derive(Debug, Default)]
pub struct DedupIndex {
    seen: Mutex<HashSet<DedupKey>>,
}

impl DedupIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `key`; returns `false` if it was already present.
    pub fn insert(&self, key: DedupKey) -> bool {
        self.seen.lock().expect("dedup index poisoned").insert(key)
    }

    pub fn contains(&self, key: &DedupKey) -> bool {
        self.seen.lock().expect("dedup index poisoned").contains(key)
    }

    pub fn len(&self) -> usize {
        self.seen.lock().expect("dedup index poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Applies the length, layout, and duplicate filters in that order. A page
/// that reaches the duplicate check is recorded in `seen`.
pub fn filter_page(
    doc: &HtmlDocument,
    policy: &FilterPolicy,
    tokenizer: &dyn TokenCounter,
    seen: &DedupIndex,
) -> FilterVerdict {
    let stats = compute_stats(doc, tokenizer);
    if stats.approx_tokens > policy.max_tokens {
        return FilterReason::TooLong.into();
    }
    if policy.reject_only_images && extract_text_segments(doc).is_empty() {
        return FilterReason::OnlyImages.into();
    }
    let has_media = doc
        .root()
        .elements()
        .any(|e| e.name == "img" || e.name == "video");
    if policy.reject_only_text && !has_media {
        return FilterReason::OnlyText.into();
    }
    if !seen.insert(dedup_key(doc)) {
        return FilterReason::Duplicate.into();
    }
    FilterReason::Ok.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::ByteRatioCounter;

    fn doc(src: &str) -> HtmlDocument {
        HtmlDocument::parse(src, "x").unwrap()
    }

    #[test]
    fn keys_ignore_trailing_whitespace_and_comments() {
        let a = doc("<p>hello</p>");
        assert_eq!(dedup_key(&a), dedup_key(&doc("<p>hello</p>")));
        assert_eq!(dedup_key(&a), dedup_key(&doc("<p>hello</p>\n")));
        assert_eq!(dedup_key(&a), dedup_key(&doc("<p>hello</p><!-- x -->")));
        assert_ne!(dedup_key(&a), dedup_key(&doc("<p>hellp</p>")));
        assert_eq!(dedup_key(&a).to_string().len(), 64);
    }

    #[test]
    fn verdicts() {
        let policy = FilterPolicy::default();
        let seen = DedupIndex::new();
        let both = doc("<body><p>text</p><img src=a.png></body>");
        let v = filter_page(&both, &policy, &ByteRatioCounter, &seen);
        assert_eq!(v, FilterVerdict { keep: true, reason: FilterReason::Ok });

        let v = filter_page(&both, &policy, &ByteRatioCounter, &seen);
        assert_eq!(v.reason, FilterReason::Duplicate);
        assert!(!v.keep);

        let images = doc("<body><img src=a.png></body>");
        assert_eq!(
            filter_page(&images, &policy, &ByteRatioCounter, &seen).reason,
            FilterReason::OnlyImages
        );
        let text = doc("<body><p>just words</p></body>");
        assert_eq!(
            filter_page(&text, &policy, &ByteRatioCounter, &seen).reason,
            FilterReason::OnlyText
        );
        let tight = FilterPolicy { max_tokens: 3, ..policy };
        let long = doc("<body><p>more text</p><img src=b.png></body>");
        assert_eq!(
            filter_page(&long, &tight, &ByteRatioCounter, &seen).reason,
            FilterReason::TooLong
        );
    }

    #[test]
    fn keep_iff_ok() {
        for reason in FilterReason::ALL {
            let v = FilterVerdict::from(reason);
            assert_eq!(v.keep, reason == FilterReason::Ok);
        }
    }

    #[test]
    fn concurrent_inserts_admit_one_winner() {
        let index = DedupIndex::new();
        let key = dedup_key(&doc("<p>same</p>"));
        let wins: usize = std::thread::scope(|s| {
            let handles: Vec<_> = (0..8).map(|_| s.spawn(|| index.insert(key) as usize)).collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        });
        assert_eq!(wins, 1);
    }
}
