//! Seeded synthetic pages and programmatic degradations.
//!
//! Pages are standalone, use only system fonts and the `rick.jpg`
//! placeholder, and fit inside one 1280x720 viewport so that edits to one
//! block never move the normalized centers of the others.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::Rgb;
use crate::dom::{Element, HtmlDocument, Node};

const WORDS: &[&str] = &[
    "river", "market", "garden", "silver", "planet", "window", "harbor", "lantern", "meadow",
    "signal", "quartz", "orchid", "summit", "velvet", "canyon", "ember", "falcon", "glacier",
    "horizon", "island", "jasmine", "kettle", "lagoon", "marble", "nectar", "oasis", "pepper",
    "quiver", "ribbon", "saddle", "timber", "umbra", "valley", "willow", "yonder", "zephyr",
    "copper", "delta", "fable", "granite", "hollow", "ivory", "juniper", "kindle", "lumen",
];

const FAMILIES: &[&str] = &["sans-serif", "serif", "monospace"];

const BACKGROUNDS: &[[u8; 3]] = &[
    [255, 255, 255],
    [250, 248, 240],
    [236, 242, 250],
    [34, 40, 49],
    [244, 236, 247],
    [230, 245, 233],
];

fn words(rng: &mut ChaCha8Rng, n: impl rand::distributions::uniform::SampleRange<usize>) -> String {
    let n = rng.gen_range(n);
    let picked: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    let joined = picked.join(" ");
    let mut out = joined[..1].to_uppercase();
    out.push_str(&joined[1..]);
    out
}

fn contrast_color(rng: &mut ChaCha8Rng, bg: [u8; 3]) -> Rgb {
    let dark = u32::from(bg[0]) + u32::from(bg[1]) + u32::from(bg[2]) > 384;
    let (lo, hi) = if dark { (0u8, 110u8) } else { (170, 255) };
    Rgb([rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)])
}

/// A synthetic page and the seed it came from.
#[derive(Debug, Clone)]
pub struct SynthPage {
    pub name: String,
    pub html: String,
}

impl SynthPage {
    pub fn document(&self) -> HtmlDocument {
        HtmlDocument::parse(&self.html, self.name.clone()).expect("synthetic pages parse")
    }
}

/// Generates `count` pages cycling through five layout families.
pub fn corpus(count: usize, seed: u64) -> Vec<SynthPage> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            SynthPage {
                name: format!("page{i:03}"),
                html: page(&mut rng, i % 5),
            }
        })
        .collect()
}

fn page(rng: &mut ChaCha8Rng, layout: usize) -> String {
    let bg = *BACKGROUNDS.choose(rng).expect("non-empty");
    let text = contrast_color(rng, bg);
    let accent = contrast_color(rng, bg);
    let family = *FAMILIES.choose(rng).expect("non-empty");
    let base: u32 = rng.gen_range(14..=18);
    let dense = rng.gen_bool(0.5);
    let para_words = if dense { 28..48 } else { 8..18 };
    let bgc = Rgb(bg).css();

    let mut body = String::new();
    let para = |rng: &mut ChaCha8Rng| format!("<p>{}.</p>", words(rng, para_words.clone()));
    match layout {
        0 => {
            body += &format!("<h1>{}</h1>", words(rng, 3..=3));
            for _ in 0..rng.gen_range(2..4) {
                body += &para(rng);
            }
            body += r#"<img src="rick.jpg" width="160" height="90" alt="">"#;
            body += &para(rng);
        }
        1 => {
            body += &format!("<h2>{}</h2>", words(rng, 2..=2));
            body += r#"<div style="display: flex; gap: 40px">"#;
            for _ in 0..2 {
                body += r#"<div style="flex: 1">"#;
                body += &format!("<h3>{}</h3>", words(rng, 2..=2));
                body += &para(rng);
                body += "</div>";
            }
            body += "</div>";
            body += r#"<img src="rick.jpg" width="120" height="120" alt="">"#;
            body += &para(rng);
        }
        2 => {
            body += &format!(
                r#"<div style="text-align: center; padding: 20px 0"><h1>{}</h1><p>{}.</p></div>"#,
                words(rng, 2..=2),
                words(rng, 6..=6)
            );
            body += r#"<div style="display: grid; grid-template-columns: repeat(3, 1fr); gap: 24px">"#;
            for _ in 0..3 {
                body += &format!(
                    r#"<div style="border: 1px solid {}; padding: 12px"><img src="rick.jpg" width="80" height="60" alt=""><h4>{}</h4><p>{}.</p></div>"#,
                    accent.css(),
                    words(rng, 2..=2),
                    words(rng, 6..14)
                );
            }
            body += "</div>";
            body += &para(rng);
        }
        3 => {
            body += &format!(
                r#"<div style="display: flex; gap: 28px; padding: 10px 0; border-bottom: 2px solid {}">"#,
                accent.css()
            );
            for _ in 0..4 {
                body += &format!("<span>{}</span>", words(rng, 1..=1));
            }
            body += "</div>";
            body += &format!("<h2>{}</h2><ul>", words(rng, 3..=3));
            for _ in 0..rng.gen_range(3..6) {
                body += &format!("<li>{}</li>", words(rng, 3..8));
            }
            body += "</ul>";
            body += r#"<img src="rick.jpg" width="200" height="70" alt="">"#;
            body += &para(rng);
        }
        _ => {
            body += &format!("<h1>{}</h1>", words(rng, 2..=2));
            body += r#"<table style="border-collapse: collapse"><tr>"#;
            for _ in 0..3 {
                body += &format!(r#"<th style="padding: 6px 18px">{}</th>"#, words(rng, 1..=1));
            }
            body += "</tr>";
            for _ in 0..rng.gen_range(2..4) {
                body += "<tr>";
                for _ in 0..3 {
                    body += &format!(r#"<td style="padding: 6px 18px">{}</td>"#, words(rng, 2..=2));
                }
                body += "</tr>";
            }
            body += "</table>";
            body += r#"<img src="rick.jpg" width="100" height="50" alt="">"#;
            body += &para(rng);
            body += &para(rng);
        }
    }

    format!(
        "<!DOCTYPE html>\n<html><head><title>synthetic</title><style>\
body {{ margin: 24px 40px; background: {bgc}; color: {text}; font-family: {family}; font-size: {base}px; line-height: 1.4 }}\n\
h1, h2, h3, h4 {{ color: {accent}; margin: 10px 0 }}\n\
p {{ margin: 8px 0; max-width: 1000px }}\n\
</style></head><body>{body}</body></html>\n",
        text = text.css(),
        accent = accent.css(),
    )
}

/// Path (child indices from `<html>`) of every element matching `pred`, in
/// document order.
pub fn element_paths(root: &Element, pred: &dyn Fn(&Element) -> bool) -> Vec<Vec<usize>> {
    fn walk(el: &Element, pred: &dyn Fn(&Element) -> bool, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for (i, child) in el.children.iter().enumerate() {
            if let Node::Element(c) = child {
                path.push(i);
                if pred(c) {
                    out.push(path.clone());
                }
                walk(c, pred, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(root, pred, &mut Vec::new(), &mut out);
    out
}

fn element_at<'a>(root: &'a mut Element, path: &[usize]) -> &'a mut Element {
    path.iter().fold(root, |el, &i| match &mut el.children[i] {
        Node::Element(c) => c,
        _ => panic!("path does not lead to an element"),
    })
}

fn append_style(el: &mut Element, css: &str) {
    let style = match el.attr("style") {
        Some(s) if !s.trim().is_empty() => format!("{}; {css}", s.trim_end_matches(';')),
        _ => css.to_string(),
    };
    el.set_attr("style", style);
}

fn is_heading(el: &Element) -> bool {
    matches!(el.name.as_str(), "h1" | "h2" | "h3" | "h4" | "h5" | "h6")
}

/// The first heading, else the first paragraph.
fn anchor_block(root: &Element) -> Option<Vec<usize>> {
    element_paths(root, &is_heading)
        .into_iter()
        .next()
        .or_else(|| element_paths(root, &|e| e.name == "p").into_iter().next())
}

/// Removes the last `<p>` element.
pub fn delete_last_paragraph(doc: &HtmlDocument) -> HtmlDocument {
    let Some(path) = element_paths(doc.root(), &|e| e.name == "p").pop() else {
        return doc.clone();
    };
    doc.edited(|root| {
        let (last, parent) = path.split_last().expect("non-empty path");
        element_at(root, parent).children.remove(*last);
    })
}

/// Moves the first heading `px` pixels right with relative positioning.
pub fn shift_block(doc: &HtmlDocument, px: i32) -> HtmlDocument {
    let Some(path) = anchor_block(doc.root()) else {
        return doc.clone();
    };
    doc.edited(|root| {
        append_style(element_at(root, &path), &format!("position: relative; left: {px}px"));
    })
}

/// Sets the text color of the first heading.
pub fn recolor_text(doc: &HtmlDocument, color: Rgb) -> HtmlDocument {
    let Some(path) = anchor_block(doc.root()) else {
        return doc.clone();
    };
    doc.edited(|root| {
        append_style(element_at(root, &path), &format!("color: {}", color.css()));
    })
}

/// Replaces the text of the last paragraph.
pub fn rewrite_last_paragraph(doc: &HtmlDocument, text: &str) -> HtmlDocument {
    let Some(path) = element_paths(doc.root(), &|e| e.name == "p").pop() else {
        return doc.clone();
    };
    doc.edited(|root| {
        let p = element_at(root, &path);
        p.children = vec![Node::Text(text.to_string())];
    })
}

/// Replaces every second word of the last paragraph or list item with
/// "lorem", keeping enough characters that it still matches its original.
pub fn garble_last_paragraph(doc: &HtmlDocument) -> HtmlDocument {
    let Some(path) = element_paths(doc.root(), &|e| e.name == "p" || e.name == "li").pop() else {
        return doc.clone();
    };
    doc.edited(|root| {
        let p = element_at(root, &path);
        for child in &mut p.children {
            if let Node::Text(t) = child {
                *t = t
                    .split_whitespace()
                    .enumerate()
                    .map(|(i, w)| if i % 2 == 1 { "lorem" } else { w })
                    .collect::<Vec<_>>()
                    .join(" ");
            }
        }
    })
}

/// A color far from `c` in every channel.
pub fn opposite(c: Rgb) -> Rgb {
    Rgb(c.0.map(|v| if v < 128 { v.saturating_add(160) } else { v - 160 }))
}

/// Text color of the first heading as written in the page's stylesheet or
/// inline style. Used to pick a recolor target.
pub fn heading_color(page: &SynthPage) -> Option<Rgb> {
    let start = page.html.find("h1, h2, h3, h4 { color: rgb(")? + "h1, h2, h3, h4 { color: rgb(".len();
    let end = page.html[start..].find(')')? + start;
    let parts: Vec<u8> = page.html[start..end]
        .split(',')
        .filter_map(|s| s.trim().parse().ok())
        .collect();
    (parts.len() == 3).then(|| Rgb([parts[0], parts[1], parts[2]]))
}

/// (reference, faithful candidate, degraded candidate).
#[derive(Debug, Clone)]
pub struct RankingTriple {
    pub reference: HtmlDocument,
    pub faithful: HtmlDocument,
    pub degraded: HtmlDocument,
}

/// Five triples: the faithful candidate nudges page margins by a few pixels;
/// the degraded one drops a paragraph, garbles another, shifts and recolors
/// the heading.
pub fn ranking_triples(seed: u64) -> Vec<RankingTriple> {
    corpus(5, seed)
        .into_iter()
        .map(|page| {
            let reference = page.document();
            let faithful = HtmlDocument::parse(
                &page.html.replace("margin: 24px 40px", "margin: 26px 43px"),
                format!("{}-faithful", page.name),
            )
            .expect("parses");
            let accent = heading_color(&page).unwrap_or(Rgb::BLACK);
            let degraded = recolor_text(
                &shift_block(&garble_last_paragraph(&delete_last_paragraph(&reference)), 200),
                opposite(accent),
            );
            RankingTriple {
                reference,
                faithful,
                degraded,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::{extract_text_segments, make_standalone};

    #[test]
    fn corpus_is_deterministic_and_standalone() {
        let a = corpus(10, 7);
        let b = corpus(10, 7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.html, y.html);
            let doc = x.document();
            assert_eq!(make_standalone(&doc, "rick.jpg"), doc);
            assert!(!extract_text_segments(&doc).is_empty());
        }
        assert_ne!(corpus(1, 8)[0].html, a[0].html);
    }

    #[test]
    fn degradations_touch_one_block() {
        let doc = corpus(1, 3)[0].document();
        let n = element_paths(doc.root(), &|e| e.name == "p").len();
        let cut = delete_last_paragraph(&doc);
        assert_eq!(element_paths(cut.root(), &|e| e.name == "p").len(), n - 1);

        let shifted = shift_block(&doc, 200).serialize();
        assert!(shifted.contains("position: relative; left: 200px"));
        let recolored = recolor_text(&doc, Rgb([1, 2, 3])).serialize();
        assert!(recolored.contains("color: rgb(1, 2, 3)"));
    }

    #[test]
    fn heading_color_parses() {
        let page = &corpus(1, 11)[0];
        let c = heading_color(page).unwrap();
        assert!(page.html.contains(&c.css()));
        assert_ne!(opposite(c), c);
    }
}
