use std::io::Read as _;
use std::time::Duration;

use image::imageops::FilterType;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::Screenshot;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedder unavailable: {0}")]
    Unavailable(String),
    #[error("embedder returned vectors of length {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedder response invalid: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub embedder_id: String,
}

/// Maps a square RGB image to a fixed-length vector.
pub trait Embedder: Send + Sync {
    fn embedder_id(&self) -> &str;

    /// Side length of the square input the embedder expects.
    fn input_side(&self) -> u32;

    fn embed(&self, square: &RgbImage) -> Result<EmbeddingVector, EmbedError>;
}

/// Offline stand-in: 32x32 grayscale thumbnail, flattened and L2-normalized.
/// Not comparable with learned image embeddings.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackEmbedder;

pub const FALLBACK_ID: &str = "fallback-gray32";

impl Embedder for FallbackEmbedder {
    fn embedder_id(&self) -> &str {
        FALLBACK_ID
    }

    fn input_side(&self) -> u32 {
        32
    }

    fn embed(&self, square: &RgbImage) -> Result<EmbeddingVector, EmbedError> {
        let mut values: Vec<f64> = square
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0.map(f64::from);
                (0.299 * r + 0.587 * g + 0.114 * b) / 255.0
            })
            .collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(EmbeddingVector {
            values,
            embedder_id: FALLBACK_ID.to_string(),
        })
    }
}

/// Health report of an embedding service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarHealth {
    pub model_loaded: bool,
    pub embedder_id: String,
    pub vector_length: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
    embedder_id: String,
    #[serde(default)]
    request_id: Option<String>,
}

/// HTTP client for an embedding service: `POST /embed` with a PNG body,
/// `GET /health`.
#[derive(Debug)]
pub struct SidecarEmbedder {
    base: String,
    agent: ureq::Agent,
    embedder_id: String,
    side: u32,
    counter: std::sync::atomic::AtomicU64,
}

impl SidecarEmbedder {
    /// Connects and checks `/health`; the service must report a loaded model.
    pub fn connect(base_url: &str, timeout: Duration) -> Result<Self, EmbedError> {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        let base = base_url.trim_end_matches('/').to_string();
        let health = Self::fetch_health(&agent, &base)?;
        if !health.model_loaded {
            return Err(EmbedError::Unavailable(format!("{base}: model not loaded")));
        }
        Ok(SidecarEmbedder {
            base,
            agent,
            embedder_id: health.embedder_id,
            side: 224,
            counter: Default::default(),
        })
    }

    fn fetch_health(agent: &ureq::Agent, base: &str) -> Result<SidecarHealth, EmbedError> {
        let resp = agent
            .get(&format!("{base}/health"))
            .call()
            .map_err(|e| EmbedError::Unavailable(e.to_string()))?;
        let body = resp
            .into_string()
            .map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        serde_json::from_str(&body).map_err(|e| EmbedError::BadResponse(e.to_string()))
    }

    pub fn health(&self) -> Result<SidecarHealth, EmbedError> {
        Self::fetch_health(&self.agent, &self.base)
    }
}

impl Embedder for SidecarEmbedder {
    fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    fn input_side(&self) -> u32 {
        self.side
    }

    fn embed(&self, square: &RgbImage) -> Result<EmbeddingVector, EmbedError> {
        let mut png = std::io::Cursor::new(Vec::new());
        square
            .write_to(&mut png, image::ImageFormat::Png)
            .map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        let request_id = format!(
            "pf-{}",
            self.counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
        );
        let resp = self
            .agent
            .post(&format!("{}/embed", self.base))
            .set("Content-Type", "image/png")
            .set("X-Request-Id", &request_id)
            .send_bytes(png.get_ref())
            .map_err(|e| match e {
                ureq::Error::Status(code, r) => {
                    let mut body = String::new();
                    let _ = r.into_reader().take(512).read_to_string(&mut body);
                    if code == 503 {
                        EmbedError::Unavailable(format!("{code}: {body}"))
                    } else {
                        EmbedError::BadResponse(format!("{code}: {body}"))
                    }
                }
                other => EmbedError::Unavailable(other.to_string()),
            })?;
        let body = resp
            .into_string()
            .map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| EmbedError::BadResponse(e.to_string()))?;
        if let Some(echo) = &parsed.request_id {
            if echo != &request_id {
                return Err(EmbedError::BadResponse(format!("request id {echo} != {request_id}")));
            }
        }
        if parsed.vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::BadResponse("non-finite vector entry".into()));
        }
        Ok(EmbeddingVector {
            values: parsed.vector,
            embedder_id: parsed.embedder_id,
        })
    }
}

/// Bilinear resize to a `side` x `side` square.
pub fn square_resize(image: &RgbImage, side: u32) -> RgbImage {
    image::imageops::resize(image, side, side, FilterType::Triangle)
}

/// Cosine similarity clamped to `[0, 1]`. Two zero vectors count as equal.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(if na == nb { 1.0 } else { 0.0 });
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Embedding cosine of two (already masked) screenshots.
pub fn visual_score(shot_r: &Screenshot, shot_g: &Screenshot, embedder: &dyn Embedder) -> Result<f64, EmbedError> {
    let side = embedder.input_side();
    let er = embedder.embed(&square_resize(&shot_r.image, side))?;
    let eg = embedder.embed(&square_resize(&shot_g.image, side))?;
    cosine(&er.values, &eg.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::Viewport;

    fn shot(img: RgbImage) -> Screenshot {
        Screenshot {
            image: img,
            viewport: Viewport::default(),
            doc_ref: "t".into(),
        }
    }

    fn pattern() -> RgbImage {
        RgbImage::from_fn(90, 60, |x, y| image::Rgb([(x * 3) as u8, (y * 4) as u8, ((x + y) % 256) as u8]))
    }

    #[test]
    fn identical_images_score_one() {
        let s = shot(pattern());
        let v = visual_score(&s, &s, &FallbackEmbedder).unwrap();
        assert!((v - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn negative_scores_lower() {
        let img = pattern();
        let mut neg = img.clone();
        image::imageops::invert(&mut neg);
        let same = visual_score(&shot(img.clone()), &shot(img.clone()), &FallbackEmbedder).unwrap();
        let inv = visual_score(&shot(img), &shot(neg), &FallbackEmbedder).unwrap();
        assert!(inv < same, "{inv} vs {same}");
    }

    #[test]
    fn fallback_vector_is_unit_length() {
        let e = FallbackEmbedder.embed(&square_resize(&pattern(), 32)).unwrap();
        assert_eq!(e.values.len(), 1024);
        let n: f64 = e.values.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_checks_lengths() {
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(EmbedError::DimensionMismatch(1, 2))));
        assert_eq!(cosine(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn unreachable_sidecar() {
        let err = SidecarEmbedder::connect("http://127.0.0.1:9", Duration::from_millis(500)).unwrap_err();
        assert!(matches!(err, EmbedError::Unavailable(_)));
    }
}
