//! Visual similarity through an embedding service. Talks to the service at
//! the given URL, or to a local stand-in when none is given.
//!
//! cargo run --example sidecar_client -- [http://127.0.0.1:8765]

use std::time::Duration;

use image::RgbImage;
use pagefidelity::metrics::{visual_score, SidecarEmbedder};
use pagefidelity::mock::{MockResponse, MockServer};
use pagefidelity::render::{Screenshot, Viewport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stand_in;
    let url = match std::env::args().nth(1) {
        Some(u) => u,
        None => {
            // mean color of the image, repeated; enough to exercise the protocol
            stand_in = MockServer::start(|req| match req.path.as_str() {
                "/health" => MockResponse::json(200, &serde_json::json!({"model_loaded": true, "embedder_id": "stand-in", "vector_length": 512})),
                _ => {
                    let img = image::load_from_memory(&req.body).map(|i| i.to_rgb8());
                    let Ok(img) = img else { return MockResponse::text(400, "bad image") };
                    let n = f64::from(img.width() * img.height());
                    let mean = [0, 1, 2].map(|c| img.pixels().map(|p| f64::from(p.0[c])).sum::<f64>() / n);
                    let v: Vec<f64> = (0..512).map(|i| mean[i % 3] + 1.0).collect();
                    MockResponse::json(200, &serde_json::json!({"vector": v, "embedder_id": "stand-in", "request_id": req.header("x-request-id")}))
                }
            })?;
            stand_in.url().to_string()
        }
    };
    let embedder = SidecarEmbedder::connect(&url, Duration::from_secs(60))?;
    println!("health: {:?}", embedder.health()?);

    let shot = |rgb: [u8; 3]| Screenshot {
        image: RgbImage::from_fn(320, 200, |x, _| if x < 160 { image::Rgb(rgb) } else { image::Rgb([255, 255, 255]) }),
        viewport: Viewport::default(),
        doc_ref: "demo".into(),
    };
    let (a, b) = (shot([30, 60, 200]), shot([200, 60, 30]));
    println!("same image  {:.5}", visual_score(&a, &a, &embedder)?);
    println!("recolored   {:.5}", visual_score(&a, &b, &embedder)?);
    Ok(())
}
