//! Bridge to external agents over newline-delimited TCP or HTTP POST.
//!
//! Both transports carry the same request and reply documents.

use std::fmt;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{format_prompt, AgentError, Policy, PolicyQuery, PolicyResponse};
use crate::engine::GoalSpec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp://host:port`
    Tcp(String),
    /// `http://...` or `https://...`
    Http(String),
}

impl FromStr for Endpoint {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, AgentError> {
        let bad = || AgentError::InvalidSpec(s.to_string());
        if let Some(addr) = s.strip_prefix("tcp://") {
            let (host, port) = addr.rsplit_once(':').ok_or_else(bad)?;
            if host.is_empty() || port.parse::<u16>().is_err() {
                return Err(bad());
            }
            Ok(Endpoint::Tcp(addr.to_string()))
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(Endpoint::Http(s.to_string()))
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "tcp://{a}"),
            Endpoint::Http(u) => f.write_str(u),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemoteConfig {
    pub timeout_ms: u64,
    /// Additional attempts after the first one.
    pub retries: u32,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            timeout_ms: 30_000,
            retries: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMeta {
    pub step: usize,
    pub budget: usize,
}

/// One past step as sent on the wire. `success` is left out when the run
/// hides execution feedback.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireHistory {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub prompt: String,
    pub scene_graph: serde_json::Value,
    pub instruction: String,
    pub history: Vec<WireHistory>,
    pub meta: WireMeta,
}

impl WireRequest {
    pub fn from_query(query: &PolicyQuery) -> Self {
        let scene_graph = serde_json::from_str(&query.observation)
            .unwrap_or_else(|_| serde_json::Value::String(query.observation.clone()));
        Self {
            prompt: format_prompt(query),
            scene_graph,
            instruction: query.instruction.clone(),
            history: query
                .history
                .iter()
                .map(|h| WireHistory {
                    command: h.command.clone(),
                    success: query.feedback.then_some(h.success),
                })
                .collect(),
            meta: WireMeta {
                step: query.step,
                budget: query.budget,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireReply {
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

pub struct RemoteAgent {
    endpoint: Endpoint,
    config: RemoteConfig,
    http: Option<ureq::Agent>,
}

impl RemoteAgent {
    pub fn new(endpoint: Endpoint, config: RemoteConfig) -> Self {
        let http = matches!(endpoint, Endpoint::Http(_)).then(|| {
            ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
                .http_status_as_error(false)
                .build()
                .into()
        });
        Self {
            endpoint,
            config,
            http,
        }
    }

    fn timeout(&self) -> Duration {
        Duration::from_millis(self.config.timeout_ms.max(1))
    }

    fn send_tcp(&self, addr: &str, body: &str) -> Result<String, AgentError> {
        let sock = addr
            .to_socket_addrs()
            .map_err(|e| AgentError::Transport(e.to_string()))?
            .next()
            .ok_or_else(|| AgentError::Transport(format!("{addr} did not resolve")))?;
        let mut stream = TcpStream::connect_timeout(&sock, self.timeout()).map_err(|e| io_error(e, addr))?;
        stream
            .set_read_timeout(Some(self.timeout()))
            .and_then(|_| stream.set_write_timeout(Some(self.timeout())))
            .map_err(|e| io_error(e, addr))?;
        stream.write_all(body.as_bytes()).map_err(|e| io_error(e, addr))?;
        stream.write_all(b"\n").map_err(|e| io_error(e, addr))?;
        stream.flush().map_err(|e| io_error(e, addr))?;
        let mut line = String::new();
        BufReader::new(stream)
            .read_line(&mut line)
            .map_err(|e| io_error(e, addr))?;
        if line.is_empty() {
            return Err(AgentError::MalformedReply("connection closed without a reply".into()));
        }
        Ok(line)
    }

    fn send_http(&self, url: &str, body: &str) -> Result<String, AgentError> {
        let agent = self.http.as_ref().expect("http endpoint has a client");
        let mut resp = agent
            .post(url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => AgentError::Timeout { attempts: 1 },
                ureq::Error::Io(io) => io_error(io, url),
                ureq::Error::ConnectionFailed => AgentError::ConnectionRefused(url.to_string()),
                other => AgentError::Transport(other.to_string()),
            })?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(AgentError::Transport(format!("{url} answered {status}")));
        }
        Ok(text)
    }

    fn attempt(&self, body: &str) -> Result<WireReply, AgentError> {
        let text = match &self.endpoint {
            Endpoint::Tcp(a) => self.send_tcp(a, body)?,
            Endpoint::Http(u) => self.send_http(u, body)?,
        };
        serde_json::from_str(text.trim()).map_err(|e| AgentError::MalformedReply(e.to_string()))
    }
}

fn io_error(e: std::io::Error, target: &str) -> AgentError {
    match e.kind() {
        ErrorKind::ConnectionRefused => AgentError::ConnectionRefused(target.to_string()),
        ErrorKind::TimedOut | ErrorKind::WouldBlock => AgentError::Timeout { attempts: 1 },
        _ => AgentError::Transport(e.to_string()),
    }
}

impl Policy for RemoteAgent {
    fn id(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn respond(&mut self, query: &PolicyQuery, _goal: &GoalSpec) -> Result<PolicyResponse, AgentError> {
        let body = serde_json::to_string(&WireRequest::from_query(query))
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        let attempts = self.config.retries + 1;
        let mut last = AgentError::Timeout { attempts };
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(r) => {
                    return Ok(PolicyResponse {
                        text: r.response_text,
                        reasoning: r.reasoning,
                    })
                }
                // a malformed document will not improve on retry
                Err(e @ AgentError::MalformedReply(_)) => return Err(e),
                Err(AgentError::Timeout { .. }) => last = AgentError::Timeout { attempts: n },
                Err(e) => last = e,
            }
            log::warn!("{} attempt {n}/{attempts} failed: {last}", self.endpoint);
        }
        Err(last)
    }
}
