//! Client side of the line-delimited JSON adapter protocol.
//!
//! ```text
//! -> {"op":"hello"}
//! <- {"name":"echo","max_tokens":128}
//! -> {"id":"req-1","op":"predict","texts":["...","..."]}
//! <- {"id":"req-1","scores":[0.9,0.1]}        or {"id":"req-1","error":"..."}
//! ```
//!
//! One JSON object per line, UTF-8, one request in flight per connection.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case")]
pub enum Transport {
    /// Spawn `command[0]` with the remaining arguments and talk over its
    /// stdin/stdout.
    Stdio { command: Vec<String> },
    Tcp { address: String },
}

fn default_max_tokens() -> usize {
    128
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_batch_size() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalClassifierHandle {
    #[serde(flatten)]
    pub transport: Transport,
    /// Forwarded to spawned adapters as `--max-tokens`; truncation itself
    /// happens in the adapter.
    #[serde(default = "default_max_tokens")]
    pub max_text_tokens: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
}

impl ExternalClassifierHandle {
    pub fn new(transport: Transport) -> Self {
        ExternalClassifierHandle {
            transport,
            max_text_tokens: default_max_tokens(),
            timeout_ms: default_timeout_ms(),
            batch_size: default_batch_size(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::Config("adapter timeout must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("adapter batch_size must be positive".into()));
        }
        match &self.transport {
            Transport::Stdio { command } if command.is_empty() => {
                Err(Error::Config("adapter command is empty".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterInfo {
    pub name: String,
    pub max_tokens: usize,
}

/// An open connection to an adapter. Dropping it kills a spawned adapter.
pub struct AdapterClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    timeout: Duration,
    timeout_ms: u64,
    batch_size: usize,
    next_id: u64,
    info: AdapterInfo,
}

impl AdapterClient {
    /// Open the transport and perform the `hello` handshake.
    pub fn connect(handle: &ExternalClassifierHandle) -> Result<Self> {
        handle.validate()?;
        let (writer, reader, child): (Box<dyn Write + Send>, Box<dyn std::io::Read + Send>, Option<Child>) =
            match &handle.transport {
                Transport::Stdio { command } => {
                    let mut cmd = Command::new(&command[0]);
                    cmd.args(&command[1..]);
                    if !command.iter().any(|a| a == "--max-tokens") {
                        cmd.arg("--max-tokens").arg(handle.max_text_tokens.to_string());
                    }
                    let mut child = cmd
                        .stdin(Stdio::piped())
                        .stdout(Stdio::piped())
                        .stderr(Stdio::inherit())
                        .spawn()
                        .map_err(|e| Error::adapter(format!("failed to spawn `{}`: {e}", command[0]), ""))?;
                    let stdin = child.stdin.take().expect("piped stdin");
                    let stdout = child.stdout.take().expect("piped stdout");
                    (Box::new(stdin), Box::new(stdout), Some(child))
                }
                Transport::Tcp { address } => {
                    let stream = TcpStream::connect(address)
                        .map_err(|e| Error::adapter(format!("failed to connect to {address}: {e}"), ""))?;
                    let read_half = stream
                        .try_clone()
                        .map_err(|e| Error::adapter(format!("failed to clone socket: {e}"), ""))?;
                    (Box::new(stream), Box::new(read_half), None)
                }
            };

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let mut client = AdapterClient {
            writer,
            lines,
            child,
            timeout: Duration::from_millis(handle.timeout_ms),
            timeout_ms: handle.timeout_ms,
            batch_size: handle.batch_size,
            next_id: 0,
            info: AdapterInfo { name: String::new(), max_tokens: 0 },
        };
        let raw = client.round_trip(&json!({"op": "hello"}))?;
        client.info = serde_json::from_str(&raw)
            .map_err(|e| Error::adapter(format!("malformed hello response: {e}"), &raw))?;
        Ok(client)
    }

    pub fn info(&self) -> &AdapterInfo {
        &self.info
    }

    fn round_trip(&mut self, request: &Value) -> Result<String> {
        let mut line = serde_json::to_string(request)?;
        line.push('\n');
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::adapter(format!("failed to send request: {e}"), ""))?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::adapter(format!("failed to read response: {e}"), "")),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout(self.timeout_ms)),
            Err(RecvTimeoutError::Disconnected) => Err(Error::adapter("adapter closed the connection", "")),
        }
    }

    /// Probability of label 1 for each text, in order. Large inputs are sent
    /// in batches of the handle's `batch_size`.
    pub fn predict(&mut self, texts: &[String]) -> Result<Vec<f64>> {
        if texts.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut scores = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            scores.extend(self.predict_batch(batch)?);
        }
        Ok(scores)
    }

    fn predict_batch(&mut self, texts: &[String]) -> Result<Vec<f64>> {
        self.next_id += 1;
        let id = format!("req-{}", self.next_id);
        let raw = self.round_trip(&json!({"id": id, "op": "predict", "texts": texts}))?;
        parse_predict_response(&raw, &id, texts.len())
    }
}

impl Drop for AdapterClient {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[derive(Deserialize)]
struct PredictResponse {
    id: Option<String>,
    scores: Option<Vec<f64>>,
    error: Option<String>,
}

pub(crate) fn parse_predict_response(raw: &str, id: &str, expected: usize) -> Result<Vec<f64>> {
    let response: PredictResponse =
        serde_json::from_str(raw).map_err(|e| Error::adapter(format!("malformed response: {e}"), raw))?;
    if response.id.as_deref() != Some(id) {
        return Err(Error::adapter(format!("response id does not match request id {id:?}"), raw));
    }
    if let Some(message) = response.error {
        return Err(Error::adapter(format!("adapter reported: {message}"), raw));
    }
    let scores = response
        .scores
        .ok_or_else(|| Error::adapter("response has no scores", raw))?;
    if scores.len() != expected {
        return Err(Error::adapter(
            format!("length mismatch: sent {expected} texts, got {} scores", scores.len()),
            raw,
        ));
    }
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::adapter(format!("score {bad} outside [0, 1]"), raw));
    }
    Ok(scores)
}

/// Connect, handshake, score `texts`, disconnect.
pub fn predict_external(handle: &ExternalClassifierHandle, texts: &[String]) -> Result<Vec<f64>> {
    if texts.is_empty() {
        return Err(Error::EmptyBatch);
    }
    AdapterClient::connect(handle)?.predict(texts)
}
