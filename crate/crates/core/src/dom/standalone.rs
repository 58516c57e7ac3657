use std::sync::LazyLock;

use regex::Regex;

use super::{Element, HtmlDocument, Node};

/// Elements removed outright, with their content.
const STRIPPED: &[&str] = &["script", "audio", "iframe", "map", "svg"];

static ABSOLUTE_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[a-zA-Z][a-zA-Z0-9+.\-]*:|//)").unwrap());
static CSS_IMPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)@import\s+(?:url\([^)]*\)|"[^"]*"|'[^']*')[^;]*;?"#).unwrap());
static CSS_URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)url\(\s*(?:"([^"]*)"|'([^']*)'|([^)'"]*))\s*\)"#).unwrap());

/// Strips every external dependency so the page renders in isolation.
///
/// Removes script/audio/iframe/map/svg elements, `<link>` elements that point
/// at another file, every anchor `href`, and `<object>` data; points every
/// image and video source at `placeholder_path`. CSS `@import` rules are
/// dropped and absolute `url(...)` references are pointed at the placeholder.
/// Any remaining `src`/`href`/`data` attribute holding an absolute URL is
/// removed. Idempotent.
pub fn make_standalone(doc: &HtmlDocument, placeholder_path: &str) -> HtmlDocument {
    assert!(!placeholder_path.is_empty(), "placeholder path must be non-empty");
    doc.edited(|root| clean(root, placeholder_path))
}

fn is_external(url: &str) -> bool {
    let url = url.trim_start();
    ABSOLUTE_URL.is_match(url) && !url.get(..5).is_some_and(|s| s.eq_ignore_ascii_case("data:"))
}

fn clean(el: &mut Element, placeholder: &str) {
    let parent = el.name.clone();
    el.children.retain(|child| match child {
        Node::Element(c) => !drop_element(c),
        _ => true,
    });
    for child in &mut el.children {
        match child {
            Node::Element(c) => {
                rewrite_attrs(c, &parent, placeholder);
                clean(c, placeholder);
            }
            Node::Text(t) if parent == "style" => *t = rewrite_css(t, placeholder),
            _ => {}
        }
    }
}

fn drop_element(el: &Element) -> bool {
    if STRIPPED.contains(&el.name.as_str()) {
        return true;
    }
    match el.name.as_str() {
        "link" => el
            .attr("href")
            .is_some_and(|h| !h.trim().is_empty() && !h.trim_start().starts_with("data:")),
        "base" => true,
        _ => false,
    }
}

fn rewrite_attrs(el: &mut Element, parent: &str, placeholder: &str) {
    match el.name.as_str() {
        "a" => {
            el.remove_attr("href");
        }
        "img" => {
            el.set_attr("src", placeholder);
            el.remove_attr("srcset");
        }
        "video" => {
            if el.attr("src").is_some() {
                el.set_attr("src", placeholder);
            }
            if el.attr("poster").is_some() {
                el.set_attr("poster", placeholder);
            }
        }
        "source" if matches!(parent, "video" | "picture") => {
            if el.attr("src").is_some() {
                el.set_attr("src", placeholder);
            }
            el.remove_attr("srcset");
        }
        "input" if el.attr("type").is_some_and(|t| t.eq_ignore_ascii_case("image")) => {
            el.set_attr("src", placeholder);
        }
        "object" => {
            el.remove_attr("data");
        }
        _ => {}
    }
    el.attrs.retain(|(k, v)| !(matches!(k.as_str(), "src" | "href" | "data") && is_external(v)));
    if let Some(style) = el.attr("style") {
        let rewritten = rewrite_css(style, placeholder);
        if rewritten != style {
            el.set_attr("style", rewritten);
        }
    }
}

fn rewrite_css(css: &str, placeholder: &str) -> String {
    let without_imports = CSS_IMPORT.replace_all(css, "");
    CSS_URL
        .replace_all(&without_imports, |caps: &regex::Captures<'_>| {
            let url = caps
                .get(1)
                .or_else(|| caps.get(2))
                .or_else(|| caps.get(3))
                .map_or("", |m| m.as_str());
            if is_external(url) {
                format!("url(\"{placeholder}\")")
            } else {
                caps[0].to_string()
            }
        })
        .into_owned()
}
