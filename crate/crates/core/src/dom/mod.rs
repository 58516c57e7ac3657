//! HTML documents: error-tolerant parsing, serialization, and the
//! curation-side analyses (stats, standalone rewriting, text extraction,
//! filtering).
//!
//! Parsing follows the standard HTML tree-construction rules (via
//! `html5ever`), so malformed markup is recovered the same way a browser
//! would recover it. The tree is then copied into a small owned [`Node`]
//! representation that the rest of the crate edits and serializes.

mod filter;
mod standalone;
mod stats;
mod text;

pub use filter::{
    dedup_key, filter_page, strip_comments, DedupIndex, DedupKey, FilterPolicy, FilterReason,
    FilterVerdict,
};
pub use standalone::make_standalone;
pub use stats::{compute_stats, ByteRatioCounter, DomStats, TokenCounter};
pub use text::{extract_text_segments, normalize_whitespace, text_segments, TextSegment};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomError {
    #[error("empty input")]
    Empty,
    #[error("input is not valid UTF-8: {0}")]
    InvalidUtf8(#[from] std::str::Utf8Error),
    #[error("node path {0:?} does not resolve in the document")]
    UnresolvedPath(Vec<usize>),
}

/// A node of the owned element tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Element(Element),
    Text(String),
    Comment(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

impl Element {
    pub fn new(name: impl Into<String>) -> Self {
        Element {
            name: name.into(),
            attrs: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn set_attr(&mut self, name: &str, value: impl Into<String>) {
        let value = value.into();
        match self.attrs.iter_mut().find(|(k, _)| k == name) {
            Some(slot) => slot.1 = value,
            None => self.attrs.push((name.to_string(), value)),
        }
    }

    pub fn remove_attr(&mut self, name: &str) -> Option<String> {
        let pos = self.attrs.iter().position(|(k, _)| k == name)?;
        Some(self.attrs.remove(pos).1)
    }

    /// Depth-first iterator over this element and all descendant elements.
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let next = stack.pop()?;
            for child in next.children.iter().rev() {
                if let Node::Element(el) = child {
                    stack.push(el);
                }
            }
            Some(next)
        })
    }
}

/// A parsed page: the source text plus its element tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HtmlDocument {
    source: String,
    doctype: Option<String>,
    /// Top-level nodes: comments outside `<html>` and the `<html>` element.
    nodes: Vec<Node>,
    origin_id: String,
}

impl PartialEq for HtmlDocument {
    /// Documents compare by tree, not by source bytes or origin.
    fn eq(&self, other: &Self) -> bool {
        self.doctype == other.doctype && self.nodes == other.nodes
    }
}

impl HtmlDocument {
    /// Parses UTF-8 bytes. Fails only on empty or non-UTF-8 input.
    pub fn parse_bytes(bytes: &[u8], origin_id: impl Into<String>) -> Result<Self, DomError> {
        let source = std::str::from_utf8(bytes)?;
        Self::parse(source, origin_id)
    }

    pub fn parse(source: &str, origin_id: impl Into<String>) -> Result<Self, DomError> {
        if source.is_empty() {
            return Err(DomError::Empty);
        }
        let html = scraper::Html::parse_document(source);
        let mut doctype = None;
        let mut nodes = Vec::new();
        for child in html.tree.root().children() {
            match child.value() {
                scraper::Node::Doctype(d) => doctype = Some(format_doctype(d)),
                _ => {
                    if let Some(node) = convert(child) {
                        nodes.push(node);
                    }
                }
            }
        }
        Ok(HtmlDocument {
            source: source.to_string(),
            doctype,
            nodes,
            origin_id: origin_id.into(),
        })
    }

    /// Returns a copy with the `<html>` element edited by `edit`. The result
    /// is re-parsed from its serialization, so its tree is exactly what a
    /// parser produces for its source.
    pub fn edited(&self, edit: impl FnOnce(&mut Element)) -> Self {
        let mut staged = self.clone();
        edit(staged.root_mut());
        staged.reparsed()
    }

    fn reparsed(&self) -> Self {
        let text = self.serialize();
        // Serialization of a non-empty tree is never empty.
        HtmlDocument::parse(&text, self.origin_id.clone()).expect("serialized document parses")
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn origin_id(&self) -> &str {
        &self.origin_id
    }

    pub fn doctype(&self) -> Option<&str> {
        self.doctype.as_deref()
    }

    pub fn top_level(&self) -> &[Node] {
        &self.nodes
    }

    /// The `<html>` element. The parser always creates one.
    pub fn root(&self) -> &Element {
        self.nodes
            .iter()
            .find_map(|n| match n {
                Node::Element(el) => Some(el),
                _ => None,
            })
            .expect("parser always produces an html element")
    }

    pub fn root_mut(&mut self) -> &mut Element {
        self.nodes
            .iter_mut()
            .find_map(|n| match n {
                Node::Element(el) => Some(el),
                _ => None,
            })
            .expect("parser always produces an html element")
    }

    pub fn body(&self) -> Option<&Element> {
        self.root().elements().find(|e| e.name == "body")
    }

    /// Resolves a child-index path starting at the `<html>` element.
    pub fn node_at(&self, path: &[usize]) -> Result<&Node, DomError> {
        let mut current = self.root();
        for (depth, &idx) in path.iter().enumerate() {
            let child = current
                .children
                .get(idx)
                .ok_or_else(|| DomError::UnresolvedPath(path.to_vec()))?;
            if depth + 1 == path.len() {
                return Ok(child);
            }
            match child {
                Node::Element(el) => current = el,
                _ => return Err(DomError::UnresolvedPath(path.to_vec())),
            }
        }
        Err(DomError::UnresolvedPath(path.to_vec()))
    }

    /// Serializes per the HTML fragment serialization algorithm.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.source.len() + 64);
        if let Some(dt) = &self.doctype {
            out.push_str(dt);
        }
        for node in &self.nodes {
            serialize_node(node, None, &mut out);
        }
        out
    }

    /// Number of element nodes in the document.
    pub fn element_count(&self) -> usize {
        self.root().elements().count()
    }
}

fn format_doctype(d: &scraper::node::Doctype) -> String {
    let mut s = format!("<!DOCTYPE {}", &*d.name);
    if !d.public_id.is_empty() {
        let _ = write!(s, " PUBLIC \"{}\"", &*d.public_id);
        if !d.system_id.is_empty() {
            let _ = write!(s, " \"{}\"", &*d.system_id);
        }
    } else if !d.system_id.is_empty() {
        let _ = write!(s, " SYSTEM \"{}\"", &*d.system_id);
    }
    s.push('>');
    s
}

fn convert(node: ego_tree::NodeRef<'_, scraper::Node>) -> Option<Node> {
    match node.value() {
        scraper::Node::Element(el) => {
            let attrs = el
                .attrs
                .iter()
                .map(|(qn, v)| {
                    let name = match &qn.prefix {
                        Some(p) => format!("{}:{}", &**p, &*qn.local),
                        None => qn.local.to_string(),
                    };
                    (name, v.to_string())
                })
                .collect();
            let children = node.children().filter_map(convert).collect();
            Some(Node::Element(Element {
                name: el.name.local.to_string(),
                attrs,
                children,
            }))
        }
        scraper::Node::Text(t) => Some(Node::Text(t.text.to_string())),
        scraper::Node::Comment(c) => Some(Node::Comment(c.comment.to_string())),
        _ => None,
    }
}

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "basefont", "bgsound", "br", "col", "embed", "frame", "hr", "img", "input",
    "keygen", "link", "meta", "param", "source", "track", "wbr",
];

const RAW_TEXT_ELEMENTS: &[&str] = &[
    "style", "script", "xmp", "iframe", "noembed", "noframes", "plaintext", "noscript",
];

pub(crate) fn is_void(name: &str) -> bool {
    VOID_ELEMENTS.contains(&name)
}

fn serialize_node(node: &Node, parent: Option<&str>, out: &mut String) {
    match node {
        Node::Text(t) => {
            if parent.is_some_and(|p| RAW_TEXT_ELEMENTS.contains(&p)) {
                out.push_str(t);
            } else {
                escape_into(t, false, out);
            }
        }
        Node::Comment(c) => {
            out.push_str("<!--");
            out.push_str(c);
            out.push_str("-->");
        }
        Node::Element(el) => serialize_element(el, out),
    }
}

fn serialize_element(el: &Element, out: &mut String) {
    out.push('<');
    out.push_str(&el.name);
    for (k, v) in &el.attrs {
        out.push(' ');
        out.push_str(k);
        out.push_str("=\"");
        escape_into(v, true, out);
        out.push('"');
    }
    out.push('>');
    if is_void(&el.name) {
        return;
    }
    if matches!(el.name.as_str(), "pre" | "textarea" | "listing") {
        if let Some(Node::Text(t)) = el.children.first() {
            if t.starts_with('\n') {
                out.push('\n');
            }
        }
    }
    for child in &el.children {
        serialize_node(child, Some(&el.name), out);
    }
    out.push_str("</");
    out.push_str(&el.name);
    out.push('>');
}

fn escape_into(text: &str, attr: bool, out: &mut String) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '\u{a0}' => out.push_str("&nbsp;"),
            '"' if attr => out.push_str("&quot;"),
            '<' if !attr => out.push_str("&lt;"),
            '>' if !attr => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
}
