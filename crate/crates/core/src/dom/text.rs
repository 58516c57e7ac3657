use serde::{Deserialize, Serialize};

use super::{Element, HtmlDocument, Node};

/// A text node of the document, addressed by its child-index path from `<html>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub node_path: Vec<usize>,
    pub text: String,
    pub visible: bool,
}

/// Subtrees whose text never renders as page content, or renders inside a
/// form control that cannot be instrumented.
const NON_CONTENT: &[&str] = &[
    "head", "title", "style", "script", "noscript", "template", "textarea", "select", "option",
    "optgroup", "datalist", "iframe", "object",
];

/// Collapses whitespace runs to single spaces and trims both ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Every non-empty content text node in document order, with a visibility
/// flag derived from `hidden` attributes and inline `display`/`visibility`.
pub fn text_segments(doc: &HtmlDocument) -> Vec<TextSegment> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk(doc.root(), true, &mut path, &mut out);
    out
}

/// Visible text nodes in document order, whitespace-normalized.
pub fn extract_text_segments(doc: &HtmlDocument) -> Vec<TextSegment> {
    text_segments(doc).into_iter().filter(|s| s.visible).collect()
}

fn walk(el: &Element, visible: bool, path: &mut Vec<usize>, out: &mut Vec<TextSegment>) {
    if NON_CONTENT.contains(&el.name.as_str()) {
        return;
    }
    let visible = visible && !hides(el);
    for (i, child) in el.children.iter().enumerate() {
        path.push(i);
        match child {
            Node::Text(t) => {
                let text = normalize_whitespace(t);
                if !text.is_empty() {
                    out.push(TextSegment {
                        node_path: path.clone(),
                        text,
                        visible,
                    });
                }
            }
            Node::Element(c) => walk(c, visible, path, out),
            Node::Comment(_) => {}
        }
        path.pop();
    }
}

fn hides(el: &Element) -> bool {
    if el.attr("hidden").is_some() {
        return true;
    }
    let Some(style) = el.attr("style") else {
        return false;
    };
    style.split(';').any(|decl| {
        let Some((prop, value)) = decl.split_once(':') else {
            return false;
        };
        let prop = prop.trim().to_ascii_lowercase();
        let value = value.trim().to_ascii_lowercase();
        let value = value.trim_end_matches("!important").trim();
        (prop == "display" && value == "none") || (prop == "visibility" && value == "hidden")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        let doc = HtmlDocument::parse(src, "x").unwrap();
        extract_text_segments(&doc).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn document_order() {
        assert_eq!(texts("<body><p>a</p><div>b</div></body>"), vec!["a", "b"]);
    }

    #[test]
    fn text_free_page() {
        assert!(texts("<body><img src=x><div></div></body>").is_empty());
    }

    #[test]
    fn style_excluded_and_whitespace_collapsed() {
        assert_eq!(
            texts("<body><style>p{}</style><p> x  y </p></body>"),
            vec!["x y"]
        );
    }

    #[test]
    fn head_and_title_excluded() {
        assert_eq!(
            texts("<html><head><title>T</title></head><body>\n  <p>z</p>\n</body></html>"),
            vec!["z"]
        );
    }

    #[test]
    fn hidden_content_is_flagged() {
        let doc = HtmlDocument::parse(
            "<body><p hidden>a</p><p style=\"display: none\">b</p><p>c</p></body>",
            "x",
        )
        .unwrap();
        let all = text_segments(&doc);
        assert_eq!(all.len(), 3);
        assert_eq!(
            all.iter().map(|s| s.visible).collect::<Vec<_>>(),
            vec![false, false, true]
        );
        assert_eq!(extract_text_segments(&doc).len(), 1);
    }

    #[test]
    fn paths_resolve_to_text_nodes() {
        let doc = HtmlDocument::parse(
            "<body><div><p>one <b>two</b> three</p></div><ul><li>four</li></ul></body>",
            "x",
        )
        .unwrap();
        for seg in extract_text_segments(&doc) {
            match doc.node_at(&seg.node_path).unwrap() {
                Node::Text(t) => assert_eq!(normalize_whitespace(t), seg.text),
                other => panic!("expected text node, got {other:?}"),
            }
        }
    }
}
