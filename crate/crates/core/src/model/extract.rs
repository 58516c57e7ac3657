use super::ModelError;
use crate::dom::{HtmlDocument, Node};

/// Pulls the HTML document out of a model reply: the span from the first
/// doctype or `<html` to the last `</html>` if present, else the body of the
/// first code fence, else the whole reply.
pub fn extract_html(raw: &str) -> Result<String, ModelError> {
    let fenced = fence_body(raw);
    let scope = fenced.unwrap_or(raw);
    let text = match html_span(scope).or_else(|| html_span(raw)) {
        Some(span) => span,
        None => scope.trim(),
    };
    if text.is_empty() {
        return Err(ModelError::NoHtmlFound);
    }
    let doc = HtmlDocument::parse(text, "model-output").map_err(|_| ModelError::NoHtmlFound)?;
    if !has_markup(&doc) {
        return Err(ModelError::NoHtmlFound);
    }
    Ok(text.to_string())
}

fn fence_body(raw: &str) -> Option<&str> {
    let open = raw.find("```")?;
    let after = &raw[open + 3..];
    // Skip the info string (```html).
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    Some(&body[..end])
}

fn html_span(text: &str) -> Option<&str> {
    let lower = text.to_ascii_lowercase();
    let start = match (lower.find("<!doctype"), lower.find("<html")) {
        (Some(a), Some(b)) => a.min(b),
        (a, b) => a.or(b)?,
    };
    let end = lower.rfind("</html>").map(|i| i + "</html>".len()).filter(|&e| e > start);
    Some(text[start..end.unwrap_or(text.len())].trim_end())
}

/// True if the tree holds anything besides the implied html/head/body and
/// bare text.
fn has_markup(doc: &HtmlDocument) -> bool {
    fn walk(nodes: &[Node]) -> bool {
        nodes.iter().any(|n| match n {
            Node::Element(e) => !matches!(e.name.as_str(), "html" | "head" | "body") || walk(&e.children),
            _ => false,
        })
    }
    let explicit_root = doc.source().to_ascii_lowercase().contains("<html");
    explicit_root || walk(doc.top_level())
}
