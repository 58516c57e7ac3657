use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{strip_comments, Element, HtmlDocument, Node};

/// Counts tokens in a piece of source text.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

/// `ceil(bytes / 4)`, a cheap stand-in for a subword tokenizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteRatioCounter;

impl TokenCounter for ByteRatioCounter {
    fn count(&self, text: &str) -> usize {
        text.len().div_ceil(4)
    }
}

impl<F: Fn(&str) -> usize> TokenCounter for F {
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomStats {
    pub total_tags: usize,
    pub unique_tags: usize,
    /// Element nodes on the longest root-to-leaf path; the root counts as 1.
    pub dom_depth: usize,
    pub approx_tokens: usize,
}

pub fn compute_stats(doc: &HtmlDocument, tokenizer: &dyn TokenCounter) -> DomStats {
    let root = doc.root();
    let mut names = BTreeSet::new();
    let mut total = 0;
    for el in root.elements() {
        total += 1;
        names.insert(el.name.as_str());
    }
    DomStats {
        total_tags: total,
        unique_tags: names.len(),
        dom_depth: depth(root),
        approx_tokens: tokenizer.count(&strip_comments(doc.source())),
    }
}

fn depth(el: &Element) -> usize {
    // Explicit stack: generated pages can nest deeply enough to matter.
    let mut best = 0;
    let mut stack = vec![(el, 1usize)];
    while let Some((el, d)) = stack.pop() {
        best = best.max(d);
        for child in &el.children {
            if let Node::Element(c) = child {
                stack.push((c, d + 1));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_depth(el: &Element) -> usize {
        1 + el
            .children
            .iter()
            .filter_map(|c| match c {
                Node::Element(e) => Some(brute_depth(e)),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn counts_tags_and_depth() {
        let doc = HtmlDocument::parse(
            "<html><head/><body><div><p>hi</p></div></body></html>",
            "x",
        )
        .unwrap();
        let s = compute_stats(&doc, &ByteRatioCounter);
        assert_eq!(s.total_tags, 5);
        assert_eq!(s.unique_tags, 5);
        assert_eq!(s.dom_depth, 4);
    }

    #[test]
    fn bare_html_document() {
        // The parser always synthesizes head and body; an html element with
        // nothing else only exists as a tree we build by hand.
        let doc = HtmlDocument::parse("<html></html>", "x").unwrap();
        let mut root = doc.root().clone();
        root.children.clear();
        assert_eq!(depth(&root), 1);
        assert_eq!(root.elements().count(), 1);
    }

    #[test]
    fn token_count_ignores_comments() {
        let doc = HtmlDocument::parse("<p>abcd</p><!-- a very long comment here -->", "x").unwrap();
        let s = compute_stats(&doc, &ByteRatioCounter);
        assert_eq!(s.approx_tokens, "<p>abcd</p>".len().div_ceil(4));
        let custom = compute_stats(&doc, &|t: &str| t.split_whitespace().count());
        assert_eq!(custom.approx_tokens, 1);
    }

    #[test]
    fn depth_matches_recursive_search() {
        let pages = [
            "<div><div><div><span>a</span></div></div><p>b</p></div>",
            "<table><tr><td><ul><li><a>x</a></li></ul></td></tr></table>",
            "<p>a<p>b<b><i>c</i></b>",
        ];
        for src in pages {
            let doc = HtmlDocument::parse(src, "x").unwrap();
            assert_eq!(depth(doc.root()), brute_depth(doc.root()), "{src}");
        }
    }
}
