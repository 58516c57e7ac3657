//! Detected text blocks and the small geometry types they carry.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const WHITE: Rgb = Rgb([255, 255, 255]);
    pub const BLACK: Rgb = Rgb([0, 0, 0]);

    /// Largest per-channel absolute difference.
    pub fn chebyshev(self, other: Rgb) -> u8 {
        (0..3)
            .map(|c| self.0[c].abs_diff(other.0[c]))
            .max()
            .unwrap_or(0)
    }

    pub fn css(self) -> String {
        format!("rgb({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Axis-aligned pixel rectangle; `x + w` and `y + h` are exclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn union(&self, other: &Rect) -> Rect {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        Rect {
            x,
            y,
            w: self.right().max(other.right()) - x,
            h: self.bottom().max(other.bottom()) - y,
        }
    }

    pub fn intersection(&self, other: &Rect) -> Rect {
        let x = self.x.max(other.x);
        let y = self.y.max(other.y);
        let r = self.right().min(other.right());
        let b = self.bottom().min(other.bottom());
        if r <= x || b <= y {
            return Rect::default();
        }
        Rect { x, y, w: r - x, h: b - y }
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection(other).area();
        let union = self.area() + other.area() - inter;
        if union == 0 {
            return 0.0;
        }
        inter as f64 / union as f64
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    /// Center in `[0, 1]` coordinates relative to a `width` x `height` canvas.
    pub fn normalized_center(&self, width: u32, height: u32) -> (f64, f64) {
        (
            (f64::from(self.x) + f64::from(self.w) / 2.0) / f64::from(width.max(1)),
            (f64::from(self.y) + f64::from(self.h) / 2.0) / f64::from(height.max(1)),
        )
    }
}

/// One detected text segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    pub segment_id: usize,
    pub text: String,
    pub bbox: Rect,
    /// Bbox center normalized by the block's own screenshot dimensions.
    pub center: (f64, f64),
    pub text_color: Rgb,
    /// Linear pixel indices (`y * width + x`) attributed to this segment, sorted.
    #[serde(skip)]
    pub pixel_mask: Vec<u32>,
}

impl TextBlock {
    /// Builds a block whose center is derived from `bbox`; the mask is left empty.
    pub fn from_bbox(
        segment_id: usize,
        text: impl Into<String>,
        bbox: Rect,
        text_color: Rgb,
        dims: (u32, u32),
    ) -> Self {
        TextBlock {
            segment_id,
            text: text.into(),
            bbox,
            center: bbox.normalized_center(dims.0, dims.1),
            text_color,
            pixel_mask: Vec::new(),
        }
    }
}

/// Blocks detected on one screenshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSet {
    pub blocks: Vec<TextBlock>,
    pub screenshot_dims: (u32, u32),
}

impl BlockSet {
    pub fn new(blocks: Vec<TextBlock>, screenshot_dims: (u32, u32)) -> Self {
        BlockSet {
            blocks,
            screenshot_dims,
        }
    }

    pub fn empty(screenshot_dims: (u32, u32)) -> Self {
        Self::new(Vec::new(), screenshot_dims)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Sorts blocks top-to-bottom by bbox top, ties left-to-right.
    pub fn sort_reading_order(&mut self) {
        self.blocks
            .sort_by_key(|b| (b.bbox.y, b.bbox.x, b.segment_id));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_of_identical_and_disjoint() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(20, 20, 5, 5)), 0.0);
        let half = Rect::new(5, 0, 10, 10);
        assert!((a.iou(&half) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn union_and_center() {
        let u = Rect::new(0, 0, 10, 10).union(&Rect::new(20, 5, 10, 10));
        assert_eq!(u, Rect::new(0, 0, 30, 15));
        assert_eq!(u.normalized_center(60, 30), (0.25, 0.25));
    }
}
