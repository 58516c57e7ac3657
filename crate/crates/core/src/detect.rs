//! Text block detection by color instrumentation.
//!
//! Every visible text node is wrapped in an inline element that forces a
//! probe color. The page is rendered three times: unmodified (baseline), and
//! with two color assignments A and B. A pixel whose A and B colors both
//! match one segment's probe pair is a core pixel of that segment. The
//! remaining pixels where A and B differ are anti-aliased glyph edges; each
//! is attributed to the nearest core region it touches whose probe pair
//! could have produced its A-B difference.
//!
//! Probe pairs differ by exactly 128 in every channel (`b = a ^ 0x80`), so
//! the sign of `A - B` in each channel is known per segment. Ids are dealt
//! round-robin over the eight sign patterns so that neighbors in document
//! order never share one.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{BlockSet, Rect, Rgb, TextBlock};
use crate::dom::{extract_text_segments, Element, HtmlDocument, Node, TextSegment};
use crate::render::{RenderError, Renderer, Screenshot, Viewport};

/// Per-channel match tolerance for core pixels.
pub const TOLERANCE: u8 = 3;
/// Probe colors closer than this (Chebyshev) to the background are skipped.
pub const BACKGROUND_MARGIN: u8 = 8;
const CLASSES: usize = 8;
const PER_CLASS: usize = 4096;
/// Total distinct probe pairs before background exclusion.
pub const PALETTE_SIZE: usize = CLASSES * PER_CLASS;
/// Odd multiplier that scatters consecutive ids across the digit space.
const SCRAMBLE: usize = 1597;
/// Max distance in pixels from a coreless edge fragment to its segment.
const ORPHAN_RADIUS: u32 = 12;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("palette exhausted: {requested} segments, capacity {capacity}")]
    PaletteExhausted { requested: usize, capacity: usize },
    #[error("detection degenerate: {missing} of {total} segments produced no pixels")]
    Degenerate { missing: usize, total: usize },
    #[error("instrumented renders differ in size: {0:?} vs {1:?}")]
    LayoutShift((u32, u32), (u32, u32)),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbePair {
    pub segment_id: usize,
    pub color_a: Rgb,
    pub color_b: Rgb,
}

impl ProbePair {
    /// Sign pattern of `a - b`: bit c set when channel c is positive.
    pub fn class(&self) -> u8 {
        class_of(self.color_a)
    }
}

fn class_of(a: Rgb) -> u8 {
    (0..3).fold(0, |acc, c| acc | (((a.0[c] >> 7) & 1) << c))
}

/// Injective segment-to-color-pair mapping for the two instrumented renders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeAssignment {
    pub pairs: Vec<ProbePair>,
    pub background: Rgb,
}

impl ProbeAssignment {
    pub fn get(&self, segment_id: usize) -> Option<&ProbePair> {
        self.pairs.get(segment_id).filter(|p| p.segment_id == segment_id)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn grid(k: usize) -> u8 {
    (8 * k + 4) as u8
}

/// Assigns probe pairs to `segments` by index.
pub fn assign_probe_colors(
    segments: &[TextSegment],
    background: Rgb,
) -> Result<ProbeAssignment, DetectError> {
    probe_palette(segments.len(), background)
}

/// Assigns probe pairs to ids `0..count`.
pub fn probe_palette(count: usize, background: Rgb) -> Result<ProbeAssignment, DetectError> {
    let exhausted = || DetectError::PaletteExhausted {
        requested: count,
        capacity: palette_capacity(background),
    };
    if count > PALETTE_SIZE {
        return Err(exhausted());
    }
    let mut next = [0usize; CLASSES];
    let mut pairs = Vec::with_capacity(count);
    for id in 0..count {
        let class = id % CLASSES;
        let pair = loop {
            if next[class] >= PER_CLASS {
                return Err(exhausted());
            }
            let pair = pair_for(class, next[class]);
            next[class] += 1;
            if pair.0.chebyshev(background) > BACKGROUND_MARGIN
                && pair.1.chebyshev(background) > BACKGROUND_MARGIN
            {
                break pair;
            }
        };
        pairs.push(ProbePair {
            segment_id: id,
            color_a: pair.0,
            color_b: pair.1,
        });
    }
    Ok(ProbeAssignment { pairs, background })
}

fn pair_for(class: usize, ordinal: usize) -> (Rgb, Rgb) {
    let digits = (ordinal * SCRAMBLE) % PER_CLASS;
    let mut a = [0u8; 3];
    for (c, slot) in a.iter_mut().enumerate() {
        let digit = (digits >> (8 - 4 * c)) & 15;
        let high = (class >> c) & 1;
        *slot = grid((high << 4) | digit);
    }
    let a = Rgb(a);
    (a, Rgb(a.0.map(|v| v ^ 0x80)))
}

/// Number of pairs usable against `background`, counting the smallest class
/// eight times since ids are dealt round-robin.
pub fn palette_capacity(background: Rgb) -> usize {
    (0..CLASSES)
        .map(|class| {
            (0..PER_CLASS)
                .map(|o| pair_for(class, o))
                .filter(|(a, b)| {
                    a.chebyshev(background) > BACKGROUND_MARGIN && b.chebyshev(background) > BACKGROUND_MARGIN
                })
                .count()
        })
        .min()
        .unwrap_or(0)
        * CLASSES
}

/// Tag of the instrumentation wrapper. Not a valid HTML element, so page
/// styles keyed on real tag names never match it.
pub const PROBE_TAG: &str = "pf-seg";

/// Returns `doc` with each segment's text node wrapped in a color-forcing
/// inline element.
pub fn instrument(doc: &HtmlDocument, segments: &[TextSegment], colors: &[Rgb]) -> HtmlDocument {
    doc.edited(|root| {
        for (i, (seg, color)) in segments.iter().zip(colors).enumerate() {
            wrap_text(root, &seg.node_path, i, *color);
        }
    })
}

fn wrap_text(root: &mut Element, path: &[usize], id: usize, color: Rgb) {
    let Some((&last, parents)) = path.split_last() else {
        return;
    };
    let mut el = root;
    for &i in parents {
        match el.children.get_mut(i) {
            Some(Node::Element(child)) => el = child,
            _ => return,
        }
    }
    let Some(slot) = el.children.get_mut(last) else {
        return;
    };
    let Node::Text(text) = slot else {
        return;
    };
    let css = color.css();
    let mut wrapper = Element::new(PROBE_TAG);
    wrapper.set_attr("data-pfseg", id.to_string());
    wrapper.set_attr(
        "style",
        format!("all: unset !important; color: {css} !important; -webkit-text-fill-color: {css} !important"),
    );
    wrapper.children.push(Node::Text(std::mem::take(text)));
    *slot = Node::Element(wrapper);
}

/// Most frequent color of a screenshot; ties go to the smallest color.
pub fn modal_color(image: &RgbImage) -> Rgb {
    let mut counts: HashMap<[u8; 3], u64> = HashMap::new();
    for p in image.pixels() {
        *counts.entry(p.0).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map_or(Rgb::WHITE, |(c, _)| Rgb(c))
}

/// Blocks plus the baseline render they were detected on.
#[derive(Debug, Clone)]
pub struct Detection {
    pub blocks: BlockSet,
    pub baseline: Screenshot,
    pub probes: ProbeAssignment,
    /// Segments that produced no pixels.
    pub missing: Vec<usize>,
}

/// Renders `doc` three times and extracts one block per visible segment.
pub fn detect_blocks(
    renderer: &mut dyn Renderer,
    doc: &HtmlDocument,
    viewport: &Viewport,
) -> Result<Detection, DetectError> {
    let baseline = renderer.render(doc, viewport)?;
    let segments = extract_text_segments(doc);
    let background = modal_color(&baseline.image);
    let probes = assign_probe_colors(&segments, background)?;
    if segments.is_empty() {
        return Ok(Detection {
            blocks: BlockSet::empty(baseline.dims()),
            baseline,
            probes,
            missing: Vec::new(),
        });
    }
    let colors_a: Vec<Rgb> = probes.pairs.iter().map(|p| p.color_a).collect();
    let colors_b: Vec<Rgb> = probes.pairs.iter().map(|p| p.color_b).collect();
    let shot_a = renderer.render(&instrument(doc, &segments, &colors_a), viewport)?;
    let shot_b = renderer.render(&instrument(doc, &segments, &colors_b), viewport)?;
    let (blocks, missing) = decode(&segments, &probes, &baseline.image, &shot_a.image, &shot_b.image)?;
    if missing.len() * 2 > segments.len() {
        return Err(DetectError::Degenerate {
            missing: missing.len(),
            total: segments.len(),
        });
    }
    Ok(Detection {
        blocks,
        baseline,
        probes,
        missing,
    })
}

fn diff_signs(pa: [u8; 3], pb: [u8; 3]) -> Option<(u8, u8)> {
    // (mask of nonzero channels, sign bits of those channels)
    let mut mask = 0;
    let mut sign = 0;
    for c in 0..3 {
        if pa[c] != pb[c] {
            mask |= 1 << c;
            if pa[c] > pb[c] {
                sign |= 1 << c;
            }
        }
    }
    (mask != 0).then_some((mask, sign))
}

fn compatible(signs: (u8, u8), class: u8) -> bool {
    (class & signs.0) == signs.1
}

fn snap(v: u8) -> Option<u8> {
    let r = v % 8;
    (r.abs_diff(4) <= TOLERANCE).then_some(v - r + 4)
}

/// Attributes pixels of the A and B renders to segments.
pub fn decode(
    segments: &[TextSegment],
    probes: &ProbeAssignment,
    baseline: &RgbImage,
    shot_a: &RgbImage,
    shot_b: &RgbImage,
) -> Result<(BlockSet, Vec<usize>), DetectError> {
    if shot_a.dimensions() != shot_b.dimensions() {
        return Err(DetectError::LayoutShift(shot_a.dimensions(), shot_b.dimensions()));
    }
    let (w, h) = shot_a.dimensions();
    let n = (w as usize) * (h as usize);
    let by_a: HashMap<[u8; 3], usize> = probes.pairs.iter().map(|p| (p.color_a.0, p.segment_id)).collect();
    let classes: Vec<u8> = probes.pairs.iter().map(ProbePair::class).collect();
    let raw_a = shot_a.as_raw();
    let raw_b = shot_b.as_raw();
    let px = |raw: &[u8], i: usize| [raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]];

    let mut label = vec![NONE; n];
    let mut signs: Vec<Option<(u8, u8)>> = vec![None; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        let (pa, pb) = (px(raw_a, i), px(raw_b, i));
        signs[i] = diff_signs(pa, pb);
        if signs[i].is_none() {
            continue;
        }
        let Some(key) = snap(pa[0]).zip(snap(pa[1])).zip(snap(pa[2])).map(|((r, g), b)| [r, g, b]) else {
            continue;
        };
        if let Some(&id) = by_a.get(&key) {
            let expected = probes.pairs[id].color_b.0;
            if (0..3).all(|c| pb[c].abs_diff(expected[c]) <= TOLERANCE) {
                label[i] = id as u32;
                queue.push_back(i);
            }
        }
    }

    // Grow core regions over edge pixels, nearest core first.
    let neighbors = |i: usize| {
        let (x, y) = ((i % w as usize) as i64, (i / w as usize) as i64);
        (-1i64..=1)
            .flat_map(move |dy| (-1i64..=1).map(move |dx| (x + dx, y + dy)))
            .filter(move |&(nx, ny)| {
                (nx, ny) != (x, y) && nx >= 0 && ny >= 0 && nx < i64::from(w) && ny < i64::from(h)
            })
            .map(move |(nx, ny)| ny as usize * w as usize + nx as usize)
    };
    while let Some(i) = queue.pop_front() {
        let id = label[i];
        for j in neighbors(i) {
            if label[j] == NONE {
                if let Some(s) = signs[j] {
                    if compatible(s, classes[id as usize]) {
                        label[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
    }

    let mut bounds: Vec<Option<Rect>> = vec![None; segments.len()];
    let extend = |b: &mut Option<Rect>, x: u32, y: u32| {
        let px = Rect::new(x, y, 1, 1);
        *b = Some(b.map_or(px, |r| r.union(&px)));
    };
    for (i, &l) in label.iter().enumerate() {
        if l != NONE {
            extend(&mut bounds[l as usize], (i % w as usize) as u32, (i / w as usize) as u32);
        }
    }

    // Edge fragments no core region reached (thin glyphs, dots): give each
    // connected fragment to the nearest compatible segment within reach.
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] || label[start] != NONE || signs[start].is_none() {
            continue;
        }
        let mut component = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < component.len() {
            let i = component[k];
            k += 1;
            for j in neighbors(i) {
                if !seen[j] && label[j] == NONE && signs[j].is_some() {
                    seen[j] = true;
                    component.push(j);
                }
            }
        }
        let mut area = None;
        for &i in &component {
            extend(&mut area, (i % w as usize) as u32, (i / w as usize) as u32);
        }
        let area = area.expect("component is non-empty");
        let best = bounds
            .iter()
            .enumerate()
            .filter_map(|(id, b)| b.map(|b| (id, rect_gap(&area, &b))))
            .filter(|&(id, gap)| {
                gap <= ORPHAN_RADIUS
                    && component
                        .iter()
                        .all(|&i| compatible(signs[i].expect("edge pixel"), classes[id]))
            })
            .min_by_key(|&(id, gap)| (gap, id));
        if let Some((id, _)) = best {
            for &i in &component {
                label[i] = id as u32;
            }
            bounds[id] = Some(bounds[id].expect("filtered on Some").union(&area));
        }
    }

    let mut masks: Vec<Vec<u32>> = vec![Vec::new(); segments.len()];
    for (i, &l) in label.iter().enumerate() {
        if l != NONE {
            masks[l as usize].push(i as u32);
        }
    }
    let attributed: usize = masks.iter().map(Vec::len).sum();
    assert_eq!(
        attributed,
        label.iter().filter(|&&l| l != NONE).count(),
        "pixel attributed to more than one segment"
    );

    let mut blocks = Vec::new();
    let mut missing = Vec::new();
    for (id, mask) in masks.into_iter().enumerate() {
        let Some(bbox) = bounds[id] else {
            missing.push(id);
            continue;
        };
        let color = modal_over(baseline, &mask, w);
        let mut block = TextBlock::from_bbox(id, segments[id].text.clone(), bbox, color, (w, h));
        block.pixel_mask = mask;
        blocks.push(block);
    }
    Ok((BlockSet::new(blocks, (w, h)), missing))
}

fn rect_gap(a: &Rect, b: &Rect) -> u32 {
    let gap = |a0: u32, a1: u32, b0: u32, b1: u32| {
        if a1 <= b0 {
            b0 - a1 + 1
        } else if b1 <= a0 {
            a0 - b1 + 1
        } else {
            0
        }
    };
    gap(a.x, a.right(), b.x, b.right()).max(gap(a.y, a.bottom(), b.y, b.bottom()))
}

fn modal_over(image: &RgbImage, mask: &[u32], width: u32) -> Rgb {
    let mut counts: HashMap<[u8; 3], u32> = HashMap::new();
    for &i in mask {
        let (x, y) = (i % width, i / width);
        if x < image.width() && y < image.height() {
            *counts.entry(image.get_pixel(x, y).0).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map_or(Rgb::BLACK, |(c, _)| Rgb(c))
}

/// Writes `shot` with every block's bbox outlined in red.
pub fn write_debug_overlay(shot: &Screenshot, blocks: &BlockSet, path: &Path) -> image::ImageResult<()> {
    let mut img = shot.image.clone();
    let red = image::Rgb([255, 0, 0]);
    for b in &blocks.blocks {
        let r = b.bbox;
        if r.is_empty() {
            continue;
        }
        for x in r.x..r.right().min(img.width()) {
            for y in [r.y, r.bottom() - 1] {
                if y < img.height() {
                    img.put_pixel(x, y, red);
                }
            }
        }
        for y in r.y..r.bottom().min(img.height()) {
            for x in [r.x, r.right() - 1] {
                if x < img.width() {
                    img.put_pixel(x, y, red);
                }
            }
        }
    }
    img.save_with_format(path, image::ImageFormat::Png)
}
