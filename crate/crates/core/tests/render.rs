//! Browser-backed rendering and detection. Skipped (with a note on stderr)
//! when no browser binary can be found.

use std::time::Duration;

use pagefidelity::blocks::Rgb;
use pagefidelity::detect::detect_blocks;
use pagefidelity::dom::{extract_text_segments, HtmlDocument};
use pagefidelity::render::{find_chrome, ChromeRenderer, RenderError, Renderer, RendererConfig, Viewport};
use pagefidelity::synth;

fn renderer() -> Option<ChromeRenderer> {
    if find_chrome(None).is_none() {
        eprintln!("no browser found; skipping");
        return None;
    }
    Some(ChromeRenderer::launch(&RendererConfig::default()).expect("browser launches"))
}

fn page(body: &str) -> HtmlDocument {
    HtmlDocument::parse(
        &format!("<!DOCTYPE html><html><head><style>body {{ margin: 20px; font: 20px sans-serif; background: #fff }}</style></head><body>{body}</body></html>"),
        "fixture",
    )
    .unwrap()
}

#[test]
fn repeated_renders_agree() {
    let Some(mut r) = renderer() else { return };
    let vp = Viewport::default();
    for p in synth::corpus(3, 41) {
        let doc = p.document();
        let a = r.render(&doc, &vp).unwrap();
        let b = r.render(&doc, &vp).unwrap();
        assert_eq!(a.dims(), b.dims());
        let close = a
            .pixels()
            .chunks(3)
            .zip(b.pixels().chunks(3))
            .filter(|(x, y)| x.iter().zip(y.iter()).all(|(u, v)| u.abs_diff(*v) <= 2))
            .count();
        let total = a.pixels().len() / 3;
        assert!(close as f64 >= 0.999 * total as f64, "{}: {close}/{total}", p.name);

        let d1 = detect_blocks(&mut r, &doc, &vp).unwrap();
        let d2 = detect_blocks(&mut r, &doc, &vp).unwrap();
        assert_eq!(d1.blocks.len(), d2.blocks.len());
        for (x, y) in d1.blocks.blocks.iter().zip(&d2.blocks.blocks) {
            assert_eq!(x.segment_id, y.segment_id);
            for (u, v) in [(x.bbox.x, y.bbox.x), (x.bbox.y, y.bbox.y), (x.bbox.w, y.bbox.w), (x.bbox.h, y.bbox.h)] {
                assert!(u.abs_diff(v) <= 1, "{}: {:?} vs {:?}", p.name, x.bbox, y.bbox);
            }
        }
    }
}

#[test]
fn viewport_width_and_height() {
    let Some(mut r) = renderer() else { return };
    let short = r.render(&page("<p>short</p>"), &Viewport::default()).unwrap();
    assert_eq!(short.dims(), (1280, 720));
    let tall = r.render(&page("<div style=\"height: 2000px\">tall</div>"), &Viewport::default()).unwrap();
    assert_eq!(tall.width(), 1280);
    assert!(tall.height() >= 2000, "{}", tall.height());
    let narrow = Viewport { width: 640, ..Viewport::default() };
    assert_eq!(r.render(&page("<p>x</p>"), &narrow).unwrap().width(), 640);
}

#[test]
fn detection_fixtures() {
    let Some(mut r) = renderer() else { return };
    let vp = Viewport::default();

    let doc = page("<p style=\"color: rgb(200, 30, 60)\">A single visible paragraph of text</p>");
    let det = detect_blocks(&mut r, &doc, &vp).unwrap();
    assert_eq!(det.blocks.len(), 1);
    let block = &det.blocks.blocks[0];
    assert_eq!(block.text_color, Rgb([200, 30, 60]));
    let paths: Vec<_> = extract_text_segments(&doc).iter().map(|s| s.node_path.clone()).collect();
    let truth = r.query_layout(&doc, &vp, &paths).unwrap();
    assert!(block.bbox.iou(&truth[0]) >= 0.9, "{:?} vs {:?}", block.bbox, truth[0]);
    let (w, h) = det.baseline.dims();
    assert!(block.bbox.right() <= w && block.bbox.bottom() <= h);
    assert!(block.pixel_mask.iter().all(|&p| block.bbox.contains(p % w, p / w)));

    let empty = detect_blocks(&mut r, &page("<div style=\"height: 50px; background: #eee\"></div>"), &vp).unwrap();
    assert!(empty.blocks.is_empty());

    // invisible in the baseline, visible once instrumented
    let ghost = page("<h2>Shown</h2><p style=\"color: #fff\">white on white</p>");
    let det = detect_blocks(&mut r, &ghost, &vp).unwrap();
    let white = det.blocks.blocks.iter().find(|b| b.text == "white on white").expect("ghost block");
    assert_eq!(white.text_color, Rgb::WHITE);
}

#[test]
fn layout_rectangles_stay_in_bounds() {
    let Some(mut r) = renderer() else { return };
    let vp = Viewport::default();
    for p in synth::corpus(5, 42) {
        let doc = p.document();
        let shot = r.render(&doc, &vp).unwrap();
        let paths: Vec<_> = extract_text_segments(&doc).iter().map(|s| s.node_path.clone()).collect();
        let rects = r.query_layout(&doc, &vp, &paths).unwrap();
        assert_eq!(rects.len(), paths.len());
        for rect in rects {
            assert!(rect.right() <= shot.width() && rect.bottom() <= shot.height(), "{}: {rect:?}", p.name);
        }
    }
    let doc = page("<p>x</p>");
    assert!(matches!(r.query_layout(&doc, &vp, &[vec![9, 9, 9]]), Err(RenderError::UnresolvedNode(_))));
}

#[test]
fn stalled_load_times_out() {
    if find_chrome(None).is_none() {
        return;
    }
    // accepts connections and never answers, so the load event never fires
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let _hold = std::thread::spawn(move || {
        let held: Vec<_> = listener.incoming().take(4).collect();
        std::thread::sleep(Duration::from_secs(30));
        drop(held);
    });
    let cfg = RendererConfig { timeout_secs: 2.0, ..RendererConfig::default() };
    let mut r = ChromeRenderer::launch(&cfg).unwrap();
    let doc = page(&format!("<p>waiting</p><img src=\"http://127.0.0.1:{port}/slow.png\">"));
    let err = r.render(&doc, &Viewport::default()).unwrap_err();
    assert!(matches!(err, RenderError::Timeout(d) if d == Duration::from_secs(2)), "{err}");
}

#[test]
fn unreachable_renderer_is_unavailable() {
    let cfg = RendererConfig { command: Some("/nonexistent/chromium".into()), ..RendererConfig::default() };
    assert!(matches!(ChromeRenderer::launch(&cfg), Err(RenderError::Unavailable(_))));

    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let cfg = RendererConfig {
        ws_url: Some(format!("ws://127.0.0.1:{port}/devtools/browser/none")),
        timeout_secs: 2.0,
        ..RendererConfig::default()
    };
    assert!(matches!(ChromeRenderer::launch(&cfg), Err(RenderError::Unavailable(_))));
}
