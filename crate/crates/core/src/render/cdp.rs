//! Minimal synchronous DevTools protocol connection.

use std::collections::VecDeque;
use std::io;
use std::net::TcpStream;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tungstenite::protocol::WebSocketConfig;
use tungstenite::{Message, WebSocket};

#[derive(Debug)]
pub(crate) enum CdpError {
    /// The socket or the browser went away.
    Closed(String),
    Timeout,
    /// The browser answered with a protocol-level error.
    Protocol(String),
}

impl CdpError {
    fn from_ws(err: tungstenite::Error) -> Self {
        match err {
            tungstenite::Error::Io(e)
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) =>
            {
                CdpError::Timeout
            }
            other => CdpError::Closed(other.to_string()),
        }
    }
}

pub(crate) struct Connection {
    socket: WebSocket<TcpStream>,
    next_id: u64,
    events: VecDeque<Value>,
}

impl Connection {
    pub fn connect(ws_url: &str, timeout: Duration) -> Result<Self, CdpError> {
        let url = url::Url::parse(ws_url).map_err(|e| CdpError::Closed(e.to_string()))?;
        let host = url.host_str().unwrap_or("127.0.0.1");
        let port = url.port().unwrap_or(9222);
        let addr = std::net::ToSocketAddrs::to_socket_addrs(&(host, port))
            .map_err(|e| CdpError::Closed(e.to_string()))?
            .next()
            .ok_or_else(|| CdpError::Closed(format!("no address for {host}")))?;
        let stream = TcpStream::connect_timeout(&addr, timeout)
            .map_err(|e| CdpError::Closed(e.to_string()))?;
        stream.set_read_timeout(Some(timeout)).ok();
        stream.set_nodelay(true).ok();
        let mut config = WebSocketConfig::default();
        config.max_message_size = Some(512 << 20);
        config.max_frame_size = Some(512 << 20);
        let (socket, _) = tungstenite::client::client_with_config(ws_url, stream, Some(config))
            .map_err(|e| CdpError::Closed(e.to_string()))?;
        Ok(Connection {
            socket,
            next_id: 1,
            events: VecDeque::new(),
        })
    }

    fn read(&mut self, deadline: Instant) -> Result<Value, CdpError> {
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(CdpError::Timeout);
            }
            self.socket
                .get_mut()
                .set_read_timeout(Some(left))
                .map_err(|e| CdpError::Closed(e.to_string()))?;
            match self.socket.read().map_err(CdpError::from_ws)? {
                Message::Text(text) => {
                    return serde_json::from_str(&text).map_err(|e| CdpError::Protocol(e.to_string()))
                }
                Message::Close(_) => return Err(CdpError::Closed("socket closed".into())),
                _ => {}
            }
        }
    }

    /// Sends a command and blocks for its result, queueing events that
    /// arrive in the meantime.
    pub fn call(
        &mut self,
        session: Option<&str>,
        method: &str,
        params: Value,
        deadline: Instant,
    ) -> Result<Value, CdpError> {
        let id = self.next_id;
        self.next_id += 1;
        let mut msg = json!({ "id": id, "method": method, "params": params });
        if let Some(s) = session {
            msg["sessionId"] = json!(s);
        }
        self.socket
            .send(Message::Text(msg.to_string()))
            .map_err(CdpError::from_ws)?;
        loop {
            let v = self.read(deadline)?;
            if v.get("id").and_then(Value::as_u64) == Some(id) {
                if let Some(err) = v.get("error") {
                    return Err(CdpError::Protocol(
                        err.get("message")
                            .and_then(Value::as_str)
                            .unwrap_or("unknown error")
                            .to_string(),
                    ));
                }
                return Ok(v.get("result").cloned().unwrap_or(Value::Null));
            }
            if v.get("method").is_some() {
                self.events.push_back(v);
            }
        }
    }

    /// Waits for an event by name on `session`, consuming queued events.
    pub fn wait_event(&mut self, session: &str, method: &str, deadline: Instant) -> Result<Value, CdpError> {
        let matches = |v: &Value| {
            v.get("method").and_then(Value::as_str) == Some(method)
                && v.get("sessionId").and_then(Value::as_str) == Some(session)
        };
        while let Some(v) = self.events.pop_front() {
            if matches(&v) {
                return Ok(v.get("params").cloned().unwrap_or(Value::Null));
            }
        }
        loop {
            let v = self.read(deadline)?;
            if matches(&v) {
                return Ok(v.get("params").cloned().unwrap_or(Value::Null));
            }
        }
    }

    pub fn clear_events(&mut self) {
        self.events.clear();
    }
}
