//! Embedding-service client against a scripted server.

use std::time::Duration;

use image::RgbImage;
use pagefidelity::metrics::{visual_score, EmbedError, Embedder, FallbackEmbedder, SidecarEmbedder};
use pagefidelity::mock::{MockRequest, MockResponse, MockServer};
use pagefidelity::render::{Screenshot, Viewport};

const ID: &str = "mock-clip-vit-b-32";

/// 512-bin histogram of the decoded pixels; deterministic in the image.
fn fake_clip(req: &MockRequest) -> MockResponse {
    match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/health") => MockResponse::json(
            200,
            &serde_json::json!({"model_loaded": true, "embedder_id": ID, "vector_length": 512}),
        ),
        ("POST", "/embed") => {
            let Ok(img) = image::load_from_memory(&req.body) else {
                return MockResponse::json(400, &serde_json::json!({"error": "not an image"}));
            };
            let img = img.to_rgb8();
            let mut v = vec![0.0f64; 512];
            for p in img.pixels() {
                let [r, g, b] = p.0;
                v[(usize::from(r >> 5) << 6) | (usize::from(g >> 5) << 3) | usize::from(b >> 5)] += 1.0;
            }
            MockResponse::json(
                200,
                &serde_json::json!({
                    "vector": v,
                    "embedder_id": ID,
                    "request_id": req.header("x-request-id"),
                }),
            )
        }
        _ => MockResponse::text(404, "not found"),
    }
}

fn shot(seed: u32) -> Screenshot {
    Screenshot {
        image: RgbImage::from_fn(120, 80, |x, y| image::Rgb([(x * seed) as u8, (y * 3) as u8, ((x + y) / 2) as u8])),
        viewport: Viewport::default(),
        doc_ref: "t".into(),
    }
}

#[test]
fn health_reports_vector_length() {
    let server = MockServer::start(fake_clip).unwrap();
    let emb = SidecarEmbedder::connect(server.url(), Duration::from_secs(5)).unwrap();
    let health = emb.health().unwrap();
    assert_eq!(health.vector_length, 512);
    assert!(health.model_loaded);
    assert_eq!(emb.embedder_id(), ID);
}

#[test]
fn identical_images_have_cosine_one() {
    let server = MockServer::start(fake_clip).unwrap();
    let emb = SidecarEmbedder::connect(server.url(), Duration::from_secs(5)).unwrap();
    let s = shot(2);
    let v = visual_score(&s, &s, &emb).unwrap();
    assert!((v - 1.0).abs() <= 1e-5, "{v}");

    let embeds: Vec<_> = server.requests().into_iter().filter(|r| r.path == "/embed").collect();
    assert_eq!(embeds.len(), 2);
    assert_eq!(embeds[0].header("content-type"), Some("image/png"));
    let sent = image::load_from_memory(&embeds[0].body).unwrap();
    assert_eq!((sent.width(), sent.height()), (224, 224));
    assert_ne!(embeds[0].header("x-request-id"), embeds[1].header("x-request-id"));
}

#[test]
fn same_scoring_path_for_both_embedders() {
    let server = MockServer::start(fake_clip).unwrap();
    let sidecar = SidecarEmbedder::connect(server.url(), Duration::from_secs(5)).unwrap();
    let (a, b) = (shot(2), shot(5));
    for emb in [&sidecar as &dyn Embedder, &FallbackEmbedder] {
        let same = visual_score(&a, &a, emb).unwrap();
        let diff = visual_score(&a, &b, emb).unwrap();
        assert!((same - 1.0).abs() <= 1e-5);
        assert!(diff < same && (0.0..=1.0).contains(&diff), "{}: {diff}", emb.embedder_id());
    }
}

#[test]
fn absent_service_is_unavailable() {
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = SidecarEmbedder::connect(&format!("http://127.0.0.1:{port}"), Duration::from_secs(2)).unwrap_err();
    assert!(matches!(err, EmbedError::Unavailable(_)), "{err}");
}

#[test]
fn unloaded_model_and_overload_are_unavailable() {
    let server = MockServer::start(|req| match req.path.as_str() {
        "/health" => MockResponse::json(200, &serde_json::json!({"model_loaded": false, "embedder_id": ID, "vector_length": 512})),
        _ => MockResponse::text(503, "busy"),
    })
    .unwrap();
    let err = SidecarEmbedder::connect(server.url(), Duration::from_secs(5)).unwrap_err();
    assert!(matches!(err, EmbedError::Unavailable(_)));

    let server = MockServer::start(|req| match req.path.as_str() {
        "/health" => MockResponse::json(200, &serde_json::json!({"model_loaded": true, "embedder_id": ID, "vector_length": 512})),
        _ => MockResponse::text(503, "busy"),
    })
    .unwrap();
    let emb = SidecarEmbedder::connect(server.url(), Duration::from_secs(5)).unwrap();
    let err = visual_score(&shot(1), &shot(1), &emb).unwrap_err();
    assert!(matches!(err, EmbedError::Unavailable(_)));
}

#[test]
fn malformed_vectors_are_rejected() {
    let server = MockServer::start(|req| match req.path.as_str() {
        "/health" => MockResponse::json(200, &serde_json::json!({"model_loaded": true, "embedder_id": ID, "vector_length": 512})),
        _ => MockResponse::json(200, &serde_json::json!({"vector": [1.0, 2.0], "embedder_id": ID, "request_id": "wrong"})),
    })
    .unwrap();
    let emb = SidecarEmbedder::connect(server.url(), Duration::from_secs(5)).unwrap();
    let err = visual_score(&shot(1), &shot(1), &emb).unwrap_err();
    assert!(matches!(err, EmbedError::BadResponse(_)), "{err}");
}
