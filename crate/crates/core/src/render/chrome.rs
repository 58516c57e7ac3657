use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::cdp::{CdpError, Connection};
use super::{placeholder_image, RenderError, Renderer, Screenshot, Viewport, VIEWPORT_HEIGHT};
use crate::blocks::Rect;
use crate::dom::HtmlDocument;

/// Environment variable naming a browser binary.
pub const CHROME_ENV: &str = "PAGEFIDELITY_CHROME";

/// Device-pixel height cap; larger captures exceed the compositor's texture limit.
const MAX_CAPTURE_PX: f64 = 16_384.0;

const LAUNCH_TIMEOUT: Duration = Duration::from_secs(30);

const LAYOUT_JS: &str = include_str!("layout.js");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RendererConfig {
    /// Browser binary to launch.
    pub command: Option<PathBuf>,
    /// DevTools browser endpoint of an already running browser; wins over
    /// `command` when both are set.
    pub ws_url: Option<String>,
    pub timeout_secs: f64,
    /// Extra command-line flags for launched browsers.
    pub args: Vec<String>,
}

impl Default for RendererConfig {
    fn default() -> Self {
        RendererConfig {
            command: None,
            ws_url: None,
            timeout_secs: 30.0,
            args: Vec::new(),
        }
    }
}

impl RendererConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }
}

/// Locates a browser binary: explicit path, then `PAGEFIDELITY_CHROME`, then
/// common names on `PATH`, then the location `scripts/fetch-chromium.sh`
/// extracts to.
pub fn find_chrome(explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    if let Some(p) = std::env::var_os(CHROME_ENV) {
        return Some(PathBuf::from(p));
    }
    let names = [
        "chromium",
        "chromium-browser",
        "google-chrome",
        "google-chrome-stable",
        "chrome",
        "chrome-headless-shell",
    ];
    if let Some(paths) = std::env::var_os("PATH") {
        for dir in std::env::split_paths(&paths) {
            for name in names {
                let candidate = dir.join(name);
                if candidate.is_file() {
                    return Some(candidate);
                }
            }
        }
    }
    let fetched = PathBuf::from("/tmp/chromium");
    fetched.is_file().then_some(fetched)
}

/// One browser tab driven over the DevTools protocol. Owns the browser
/// process when it launched it.
pub struct ChromeRenderer {
    conn: Connection,
    child: Option<Child>,
    target_id: String,
    session: String,
    version: String,
    workdir: tempfile::TempDir,
    timeout: Duration,
    seq: u64,
    stale: bool,
}

impl std::fmt::Debug for ChromeRenderer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChromeRenderer")
            .field("version", &self.version)
            .field("target_id", &self.target_id)
            .finish_non_exhaustive()
    }
}

fn unavailable(e: impl std::fmt::Display) -> RenderError {
    RenderError::Unavailable(e.to_string())
}

fn spawn_browser(bin: &Path, profile: &Path, extra: &[String]) -> Result<(Child, String), RenderError> {
    let mut child = Command::new(bin)
        .args([
            "--headless",
            "--no-sandbox",
            "--no-zygote",
            "--disable-gpu",
            "--hide-scrollbars",
            "--mute-audio",
            "--no-first-run",
            "--no-default-browser-check",
            "--disable-extensions",
            "--disable-background-networking",
            "--disable-dev-shm-usage",
            "--force-color-profile=srgb",
            "--font-render-hinting=none",
            "--remote-debugging-port=0",
            "--remote-debugging-address=127.0.0.1",
        ])
        .arg(format!("--user-data-dir={}", profile.display()))
        .args(extra)
        .arg("about:blank")
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| unavailable(format!("cannot start {}: {e}", bin.display())))?;

    // Keep draining stderr for the life of the process so the browser never
    // blocks on a full pipe.
    let stderr = child.stderr.take().expect("stderr is piped");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut tx = Some(tx);
        for line in BufReader::new(stderr).lines() {
            let Ok(line) = line else { break };
            if let Some(url) = line.strip_prefix("DevTools listening on ") {
                if let Some(tx) = tx.take() {
                    let _ = tx.send(url.trim().to_string());
                }
            }
        }
    });
    match rx.recv_timeout(LAUNCH_TIMEOUT) {
        Ok(url) => Ok((child, url)),
        Err(_) => {
            let _ = child.kill();
            let status = child.wait().ok();
            Err(unavailable(format!(
                "{} did not open a DevTools endpoint (exit: {status:?})",
                bin.display()
            )))
        }
    }
}

impl ChromeRenderer {
    /// Connects to `config.ws_url` or launches a browser.
    pub fn launch(config: &RendererConfig) -> Result<Self, RenderError> {
        let workdir = tempfile::Builder::new()
            .prefix("pagefidelity-")
            .tempdir()
            .map_err(unavailable)?;
        std::fs::write(workdir.path().join("rick.jpg"), placeholder_image()).map_err(unavailable)?;

        let (child, ws_url) = match &config.ws_url {
            Some(url) => (None, url.clone()),
            None => {
                let bin = find_chrome(config.command.as_deref())
                    .ok_or_else(|| unavailable(format!("no browser found; set {CHROME_ENV}")))?;
                let (child, url) = spawn_browser(&bin, &workdir.path().join("profile"), &config.args)?;
                (Some(child), url)
            }
        };
        let timeout = config.timeout();
        let deadline = Instant::now() + LAUNCH_TIMEOUT;
        let mut conn = Connection::connect(&ws_url, LAUNCH_TIMEOUT).map_err(|e| unavailable(format!("{e:?}")))?;
        let version = conn
            .call(None, "Browser.getVersion", json!({}), deadline)
            .map_err(|e| unavailable(format!("{e:?}")))?
            .get("product")
            .and_then(Value::as_str)
            .unwrap_or("unknown")
            .to_string();
        let mut renderer = ChromeRenderer {
            conn,
            child,
            target_id: String::new(),
            session: String::new(),
            version,
            workdir,
            timeout,
            seq: 0,
            stale: true,
        };
        renderer.open_tab()?;
        Ok(renderer)
    }

    fn open_tab(&mut self) -> Result<(), RenderError> {
        let deadline = Instant::now() + LAUNCH_TIMEOUT;
        if !self.target_id.is_empty() {
            let _ = self.conn.call(
                None,
                "Target.closeTarget",
                json!({ "targetId": self.target_id }),
                deadline,
            );
        }
        self.conn.clear_events();
        let err = |e: CdpError| unavailable(format!("{e:?}"));
        let target = self
            .conn
            .call(None, "Target.createTarget", json!({ "url": "about:blank" }), deadline)
            .map_err(err)?;
        self.target_id = target["targetId"].as_str().unwrap_or_default().to_string();
        let attached = self
            .conn
            .call(
                None,
                "Target.attachToTarget",
                json!({ "targetId": self.target_id, "flatten": true }),
                deadline,
            )
            .map_err(err)?;
        self.session = attached["sessionId"].as_str().unwrap_or_default().to_string();
        let session = Some(self.session.as_str());
        self.conn.call(session, "Page.enable", json!({}), deadline).map_err(err)?;
        self.conn
            .call(session, "Emulation.setScriptExecutionDisabled", json!({ "value": true }), deadline)
            .map_err(err)?;
        self.stale = false;
        Ok(())
    }

    fn map_err(&mut self, e: CdpError) -> RenderError {
        match e {
            CdpError::Timeout => {
                self.stale = true;
                RenderError::Timeout(self.timeout)
            }
            CdpError::Closed(m) => {
                self.stale = true;
                RenderError::Unavailable(m)
            }
            CdpError::Protocol(m) => RenderError::Unavailable(m),
        }
    }

    fn call(&mut self, method: &str, params: Value, deadline: Instant) -> Result<Value, RenderError> {
        let session = self.session.clone();
        self.conn
            .call(Some(&session), method, params, deadline)
            .map_err(|e| self.map_err(e))
    }

    fn evaluate(&mut self, expression: &str, deadline: Instant) -> Result<Value, RenderError> {
        let out = self.call(
            "Runtime.evaluate",
            json!({ "expression": expression, "awaitPromise": true, "returnByValue": true }),
            deadline,
        )?;
        if let Some(ex) = out.get("exceptionDetails") {
            return Err(RenderError::Unavailable(format!("page evaluation failed: {ex}")));
        }
        Ok(out["result"]["value"].clone())
    }

    fn set_metrics(&mut self, viewport: &Viewport, height: u32, deadline: Instant) -> Result<(), RenderError> {
        self.call(
            "Emulation.setDeviceMetricsOverride",
            json!({
                "width": viewport.width,
                "height": height,
                "deviceScaleFactor": viewport.device_scale,
                "mobile": false,
            }),
            deadline,
        )?;
        Ok(())
    }

    /// Loads `doc` and sizes the viewport; returns the deadline of this job.
    fn load(&mut self, doc: &HtmlDocument, viewport: &Viewport) -> Result<Instant, RenderError> {
        viewport.validate()?;
        if self.stale {
            self.open_tab()?;
        }
        let deadline = Instant::now() + self.timeout;
        self.seq += 1;
        let file = self.workdir.path().join(format!("page-{}.html", self.seq));
        std::fs::write(&file, doc.serialize()).map_err(unavailable)?;
        let url = url::Url::from_file_path(&file)
            .map_err(|_| unavailable("temporary path is not absolute"))?;

        self.set_metrics(viewport, VIEWPORT_HEIGHT, deadline)?;
        self.conn.clear_events();
        let nav = self.call("Page.navigate", json!({ "url": url.as_str() }), deadline);
        let _ = std::fs::remove_file(&file);
        let nav = nav?;
        if let Some(err) = nav.get("errorText").and_then(Value::as_str) {
            if !err.is_empty() {
                return Err(RenderError::MalformedPage(err.to_string()));
            }
        }
        let session = self.session.clone();
        self.conn
            .wait_event(&session, "Page.loadEventFired", deadline)
            .map_err(|e| self.map_err(e))?;
        let height = self.evaluate(
            "document.fonts.ready.then(() => Math.ceil(Math.max(\
                document.documentElement.scrollHeight, \
                document.body ? document.body.scrollHeight : 0)))",
            deadline,
        )?;
        let height = height.as_f64().unwrap_or(0.0);
        if viewport.full_page && height > f64::from(VIEWPORT_HEIGHT) {
            let cap = (MAX_CAPTURE_PX / viewport.device_scale).floor();
            self.set_metrics(viewport, height.min(cap) as u32, deadline)?;
        }
        Ok(deadline)
    }
}

impl Renderer for ChromeRenderer {
    fn render(&mut self, doc: &HtmlDocument, viewport: &Viewport) -> Result<Screenshot, RenderError> {
        let deadline = self.load(doc, viewport)?;
        let shot = self.call(
            "Page.captureScreenshot",
            json!({ "format": "png", "fromSurface": true, "captureBeyondViewport": false }),
            deadline,
        )?;
        let data = shot["data"]
            .as_str()
            .ok_or_else(|| unavailable("screenshot carried no data"))?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(data)
            .map_err(unavailable)?;
        let image = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(unavailable)?
            .to_rgb8();
        if image.width() != viewport.pixel_width() {
            log::warn!(
                "screenshot width {} differs from viewport width {}",
                image.width(),
                viewport.pixel_width()
            );
        }
        Ok(Screenshot {
            image,
            viewport: *viewport,
            doc_ref: doc.origin_id().to_string(),
        })
    }

    fn query_layout(
        &mut self,
        doc: &HtmlDocument,
        viewport: &Viewport,
        node_paths: &[Vec<usize>],
    ) -> Result<Vec<Rect>, RenderError> {
        for path in node_paths {
            doc.node_at(path)
                .map_err(|_| RenderError::UnresolvedNode(path.clone()))?;
        }
        let deadline = self.load(doc, viewport)?;
        let dims = self.evaluate(
            "[Math.round(window.innerWidth * devicePixelRatio), Math.round(window.innerHeight * devicePixelRatio)]",
            deadline,
        )?;
        let (w, h) = (
            dims[0].as_u64().unwrap_or(0) as u32,
            dims[1].as_u64().unwrap_or(0) as u32,
        );
        let expr = format!("({LAYOUT_JS})({})", serde_json::to_string(node_paths).unwrap());
        let boxes = self.evaluate(&expr, deadline)?;
        let boxes = boxes.as_array().cloned().unwrap_or_default();
        node_paths
            .iter()
            .zip(boxes.iter().chain(std::iter::repeat(&Value::Null)))
            .map(|(path, b)| {
                let Some(b) = b.as_array() else {
                    return Err(RenderError::UnresolvedNode(path.clone()));
                };
                let v: Vec<i64> = b.iter().map(|x| x.as_i64().unwrap_or(0)).collect();
                let clamp = |x: i64, hi: u32| x.clamp(0, i64::from(hi)) as u32;
                let (x0, y0) = (clamp(v[0], w), clamp(v[1], h));
                let (x1, y1) = (clamp(v[2], w), clamp(v[3], h));
                Ok(Rect::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0)))
            })
            .collect()
    }

    fn version(&self) -> &str {
        &self.version
    }
}

impl Drop for ChromeRenderer {
    fn drop(&mut self) {
        match self.child.as_mut() {
            Some(child) => {
                let _ = child.kill();
                let _ = child.wait();
            }
            None => {
                let deadline = Instant::now() + Duration::from_secs(2);
                let _ = self.conn.call(
                    None,
                    "Target.closeTarget",
                    json!({ "targetId": self.target_id }),
                    deadline,
                );
            }
        }
    }
}
