//! Screenshots and layout queries from an external headless browser.
//!
//! The engine never lays out HTML itself. [`ChromeRenderer`] drives a
//! Chromium-family browser over the DevTools protocol; [`RendererPool`]
//! hands instances to parallel workers.

mod cdp;
mod chrome;
mod pool;

use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{Rect, Rgb};
use crate::dom::HtmlDocument;

pub use chrome::{find_chrome, ChromeRenderer, RendererConfig, CHROME_ENV};
pub use pool::{PooledRenderer, RendererPool};

/// Height of the layout viewport. Full-page captures grow past it.
pub const VIEWPORT_HEIGHT: u32 = 720;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Viewport {
    pub width: u32,
    pub device_scale: f64,
    pub full_page: bool,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            width: 1280,
            device_scale: 1.0,
            full_page: true,
        }
    }
}

impl Viewport {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || !(self.device_scale > 0.0 && self.device_scale.is_finite()) {
            return Err(RenderError::InvalidViewport(*self));
        }
        Ok(())
    }

    /// Screenshot width in device pixels.
    pub fn pixel_width(&self) -> u32 {
        (f64::from(self.width) * self.device_scale).round() as u32
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("renderer unavailable: {0}")]
    Unavailable(String),
    #[error("render exceeded {0:?}")]
    Timeout(std::time::Duration),
    #[error("renderer refused the page: {0}")]
    MalformedPage(String),
    #[error("node path {0:?} does not resolve")]
    UnresolvedNode(Vec<usize>),
    #[error("invalid viewport {0:?}")]
    InvalidViewport(Viewport),
}

/// An immutable RGB capture of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Screenshot {
    pub image: RgbImage,
    pub viewport: Viewport,
    pub doc_ref: String,
}

impl Screenshot {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.image.dimensions()
    }

    /// Row-major RGB bytes.
    pub fn pixels(&self) -> &[u8] {
        self.image.as_raw()
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        Rgb(self.image.get_pixel(x, y).0)
    }

    /// Same pixels, new buffer.
    pub fn with_image(&self, image: RgbImage) -> Screenshot {
        Screenshot {
            image,
            viewport: self.viewport,
            doc_ref: self.doc_ref.clone(),
        }
    }

    pub fn png_bytes(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.image
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("in-memory png encode");
        out.into_inner()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> image::ImageResult<()> {
        self.image.save_with_format(path, image::ImageFormat::Png)
    }
}

/// Anything that can turn a document into pixels.
pub trait Renderer: Send {
    fn render(&mut self, doc: &HtmlDocument, viewport: &Viewport) -> Result<Screenshot, RenderError>;

    /// Renderer-reported rectangles for the given node paths, in screenshot
    /// pixels. Element paths yield their border box; text-node paths yield
    /// the union of the glyph ink boxes on each line the text occupies.
    fn query_layout(
        &mut self,
        doc: &HtmlDocument,
        viewport: &Viewport,
        node_paths: &[Vec<usize>],
    ) -> Result<Vec<Rect>, RenderError>;

    /// Identifier recorded in reports, e.g. `HeadlessChrome/147.0.0.0`.
    fn version(&self) -> &str;
}

impl<R: Renderer + ?Sized> Renderer for Box<R> {
    fn render(&mut self, doc: &HtmlDocument, viewport: &Viewport) -> Result<Screenshot, RenderError> {
        (**self).render(doc, viewport)
    }

    fn query_layout(
        &mut self,
        doc: &HtmlDocument,
        viewport: &Viewport,
        node_paths: &[Vec<usize>],
    ) -> Result<Vec<Rect>, RenderError> {
        (**self).query_layout(doc, viewport, node_paths)
    }

    fn version(&self) -> &str {
        (**self).version()
    }
}

/// 100x100 solid blue JPEG-named PNG used as the standalone image placeholder.
pub fn placeholder_image() -> Vec<u8> {
    let img = RgbImage::from_pixel(100, 100, image::Rgb([0, 0, 255]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory png encode");
    out.into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viewport_validation() {
        assert!(Viewport::default().validate().is_ok());
        let bad = Viewport { width: 0, ..Viewport::default() };
        assert!(matches!(bad.validate(), Err(RenderError::InvalidViewport(_))));
        let bad = Viewport { device_scale: 0.0, ..Viewport::default() };
        assert!(bad.validate().is_err());
        let hi = Viewport { device_scale: 2.0, ..Viewport::default() };
        assert_eq!(hi.pixel_width(), 2560);
    }

    #[test]
    fn placeholder_decodes() {
        let img = image::load_from_memory(&placeholder_image()).unwrap().to_rgb8();
        assert_eq!(img.get_pixel(50, 50).0, [0, 0, 255]);
    }
}
