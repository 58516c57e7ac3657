//! Fast-marching inpainting (Telea 2004), zero-order variant.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use image::RgbImage;

use crate::blocks::BlockSet;
use crate::render::Screenshot;

/// Neighborhood radius used when estimating a masked pixel.
pub const INPAINT_RADIUS: i64 = 3;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flag {
    Known,
    Band,
    Inside,
}

#[derive(PartialEq)]
struct Entry {
    t: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on arrival time, then index.
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Replaces every block bbox of `blocks` in `shot` with pixels propagated
/// inward from the surrounding ring.
pub fn mask_and_inpaint(shot: &Screenshot, blocks: &BlockSet) -> Screenshot {
    let (w, h) = shot.dims();
    let mut mask = vec![false; (w as usize) * (h as usize)];
    let mut any = false;
    for b in &blocks.blocks {
        let r = b.bbox;
        for y in r.y..r.bottom().min(h) {
            for x in r.x..r.right().min(w) {
                mask[y as usize * w as usize + x as usize] = true;
                any = true;
            }
        }
    }
    if !any {
        return shot.clone();
    }
    shot.with_image(inpaint(&shot.image, &mask))
}

/// Inpaints the pixels where `mask` is true. When the mask covers the whole
/// image the outermost pixel ring is kept as the known boundary.
pub fn inpaint(image: &RgbImage, mask: &[bool]) -> RgbImage {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let n = (w * h) as usize;
    assert_eq!(mask.len(), n, "mask size must match image");
    let mut mask = mask.to_vec();
    if mask.iter().all(|&m| m) {
        for y in 0..h {
            for x in 0..w {
                if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                    mask[(y * w + x) as usize] = false;
                }
            }
        }
    }

    let at = |x: i64, y: i64| (y * w + x) as usize;
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h;
    let mut flag: Vec<Flag> = mask.iter().map(|&m| if m { Flag::Inside } else { Flag::Known }).collect();
    let mut t = vec![0.0f64; n];
    let mut out: Vec<[f64; 3]> = image.pixels().map(|p| p.0.map(f64::from)).collect();
    let mut heap = BinaryHeap::new();

    const N4: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    for y in 0..h {
        for x in 0..w {
            let i = at(x, y);
            if flag[i] == Flag::Inside {
                t[i] = f64::INFINITY;
                continue;
            }
            let borders_mask = N4
                .iter()
                .any(|&(dx, dy)| inside(x + dx, y + dy) && flag[at(x + dx, y + dy)] == Flag::Inside);
            if borders_mask {
                flag[i] = Flag::Band;
                heap.push(Entry { t: 0.0, idx: i });
            }
        }
    }

    let solve = |flag: &[Flag], t: &[f64], a: (i64, i64), b: (i64, i64)| -> f64 {
        let ka = inside(a.0, a.1) && flag[at(a.0, a.1)] != Flag::Inside;
        let kb = inside(b.0, b.1) && flag[at(b.0, b.1)] != Flag::Inside;
        match (ka, kb) {
            (true, true) => {
                let (t1, t2) = (t[at(a.0, a.1)], t[at(b.0, b.1)]);
                let d = t1 - t2;
                let r = (2.0 - d * d).max(0.0).sqrt();
                let s = (t1 + t2 - r) / 2.0;
                if s >= t1 && s >= t2 {
                    s
                } else {
                    let s = s + r;
                    if s >= t1 && s >= t2 {
                        s
                    } else {
                        1.0 + t1.min(t2)
                    }
                }
            }
            (true, false) => 1.0 + t[at(a.0, a.1)],
            (false, true) => 1.0 + t[at(b.0, b.1)],
            (false, false) => f64::INFINITY,
        }
    };

    while let Some(Entry { idx, .. }) = heap.pop() {
        if flag[idx] == Flag::Known {
            continue;
        }
        flag[idx] = Flag::Known;
        let (x0, y0) = (idx as i64 % w, idx as i64 / w);
        for (dx, dy) in N4 {
            let (x, y) = (x0 + dx, y0 + dy);
            if !inside(x, y) || flag[at(x, y)] != Flag::Inside {
                continue;
            }
            let i = at(x, y);
            let tt = solve(&flag, &t, (x - 1, y), (x, y - 1))
                .min(solve(&flag, &t, (x + 1, y), (x, y - 1)))
                .min(solve(&flag, &t, (x - 1, y), (x, y + 1)))
                .min(solve(&flag, &t, (x + 1, y), (x, y + 1)));
            t[i] = tt;
            out[i] = estimate(&flag, &t, &out, x, y, w, h);
            flag[i] = Flag::Band;
            heap.push(Entry { t: tt, idx: i });
        }
    }

    let mut result = image.clone();
    for (i, p) in result.pixels_mut().enumerate() {
        if mask[i] {
            p.0 = out[i].map(|v| v.round().clamp(0.0, 255.0) as u8);
        }
    }
    result
}

fn estimate(flag: &[Flag], t: &[f64], img: &[[f64; 3]], x: i64, y: i64, w: i64, h: i64) -> [f64; 3] {
    let at = |x: i64, y: i64| (y * w + x) as usize;
    let known = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && flag[at(x, y)] != Flag::Inside;
    let ti = t[at(x, y)];
    let grad = |fwd: (i64, i64), back: (i64, i64)| -> f64 {
        match (known(fwd.0, fwd.1), known(back.0, back.1)) {
            (true, true) => (t[at(fwd.0, fwd.1)] - t[at(back.0, back.1)]) * 0.5,
            (true, false) => t[at(fwd.0, fwd.1)] - ti,
            (false, true) => ti - t[at(back.0, back.1)],
            (false, false) => 0.0,
        }
    };
    let gx = grad((x + 1, y), (x - 1, y));
    let gy = grad((x, y + 1), (x, y - 1));

    let mut acc = [0.0f64; 3];
    let mut total = 0.0;
    for ky in (y - INPAINT_RADIUS)..=(y + INPAINT_RADIUS) {
        for kx in (x - INPAINT_RADIUS)..=(x + INPAINT_RADIUS) {
            if !known(kx, ky) || (kx == x && ky == y) {
                continue;
            }
            let (rx, ry) = ((x - kx) as f64, (y - ky) as f64);
            let len2 = rx * rx + ry * ry;
            if len2 > (INPAINT_RADIUS * INPAINT_RADIUS) as f64 {
                continue;
            }
            let dst = 1.0 / (len2 * len2.sqrt());
            let lev = 1.0 / (1.0 + (t[at(kx, ky)] - ti).abs());
            let mut dir = rx * gx + ry * gy;
            if dir.abs() <= 0.01 {
                dir = 1e-6;
            }
            let wgt = (dst * lev * dir).abs();
            let p = img[at(kx, ky)];
            for c in 0..3 {
                acc[c] += wgt * p[c];
            }
            total += wgt;
        }
    }
    if total > 0.0 {
        acc.map(|v| v / total)
    } else {
        img[at(x, y)]
    }
}
