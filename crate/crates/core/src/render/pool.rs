use std::ops::{Deref, DerefMut};
use std::sync::{Condvar, Mutex};

use super::{RenderError, Renderer};

/// Fixed set of renderer instances shared by worker threads. Each instance
/// serves one job at a time.
pub struct RendererPool {
    idle: Mutex<Vec<Box<dyn Renderer>>>,
    ready: Condvar,
    size: usize,
    version: String,
}

impl RendererPool {
    pub fn new<F>(size: usize, mut make: F) -> Result<Self, RenderError>
    where
        F: FnMut() -> Result<Box<dyn Renderer>, RenderError>,
    {
        let size = size.max(1);
        let idle = (0..size).map(|_| make()).collect::<Result<Vec<_>, _>>()?;
        let version = idle[0].version().to_string();
        Ok(RendererPool {
            idle: Mutex::new(idle),
            ready: Condvar::new(),
            size,
            version,
        })
    }

    pub fn from_renderers(renderers: Vec<Box<dyn Renderer>>) -> Self {
        assert!(!renderers.is_empty(), "pool needs at least one renderer");
        let version = renderers[0].version().to_string();
        RendererPool {
            size: renderers.len(),
            idle: Mutex::new(renderers),
            ready: Condvar::new(),
            version,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Blocks until an instance is free.
    pub fn get(&self) -> PooledRenderer<'_> {
        let mut idle = self.idle.lock().expect("renderer pool poisoned");
        loop {
            if let Some(r) = idle.pop() {
                return PooledRenderer { pool: self, inner: Some(r) };
            }
            idle = self.ready.wait(idle).expect("renderer pool poisoned");
        }
    }
}

/// A checked-out renderer; returns to the pool on drop.
pub struct PooledRenderer<'a> {
    pool: &'a RendererPool,
    inner: Option<Box<dyn Renderer>>,
}

impl Deref for PooledRenderer<'_> {
    type Target = dyn Renderer;

    fn deref(&self) -> &Self::Target {
        self.inner.as_deref().expect("present until drop")
    }
}

impl DerefMut for PooledRenderer<'_> {
    fn deref_mut(&mut self) -> &mut Self::Target {
        self.inner.as_deref_mut().expect("present until drop")
    }
}

impl Drop for PooledRenderer<'_> {
    fn drop(&mut self) {
        if let Some(r) = self.inner.take() {
            self.pool.idle.lock().expect("renderer pool poisoned").push(r);
            self.pool.ready.notify_one();
        }
    }
}
