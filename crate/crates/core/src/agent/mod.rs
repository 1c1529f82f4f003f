//! Policies that answer planning queries: the built-in oracle and remote agents.

mod oracle;
mod prompt;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::GoalSpec;

pub use oracle::{plan, OracleAgent, DEFAULT_EXPANSION_CAP};
pub use prompt::format_prompt;
pub use remote::{Endpoint, RemoteAgent, RemoteConfig, WireHistory, WireReply, WireRequest};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub command: String,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyQuery {
    /// Structured serialization of the (possibly noisy) scene graph.
    pub observation: String,
    pub instruction: String,
    pub history: Vec<HistoryEntry>,
    pub step: usize,
    pub budget: usize,
    /// Whether history lines carry the execution outcome.
    #[serde(default = "yes")]
    pub feedback: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

impl PolicyResponse {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            reasoning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("agent timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("malformed reply: {0}")]
    MalformedReply(String),
    #[error("connection refused by {0}")]
    ConnectionRefused(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("invalid agent spec `{0}`")]
    InvalidSpec(String),
}

/// Anything that can choose the next action.
pub trait Policy: Send {
    /// Stable identifier written into result files.
    fn id(&self) -> String;

    /// The goal is supplied for reference planners; external agents see only
    /// the query.
    fn respond(&mut self, query: &PolicyQuery, goal: &GoalSpec) -> Result<PolicyResponse, AgentError>;
}

/// `oracle` or `remote:<endpoint>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AgentSpec {
    Oracle,
    Remote(Endpoint),
}

impl std::str::FromStr for AgentSpec {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, AgentError> {
        if s.eq_ignore_ascii_case("oracle") {
            return Ok(AgentSpec::Oracle);
        }
        match s.strip_prefix("remote:") {
            Some(rest) => Ok(AgentSpec::Remote(rest.parse()?)),
            None => Err(AgentError::InvalidSpec(s.to_string())),
        }
    }
}

impl TryFrom<String> for AgentSpec {
    type Error = AgentError;

    fn try_from(s: String) -> Result<Self, AgentError> {
        s.parse()
    }
}

impl From<AgentSpec> for String {
    fn from(a: AgentSpec) -> String {
        a.to_string()
    }
}

impl std::fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentSpec::Oracle => f.write_str("oracle"),
            AgentSpec::Remote(e) => write!(f, "remote:{e}"),
        }
    }
}

impl AgentSpec {
    pub fn build(&self, remote: &RemoteConfig) -> Box<dyn Policy> {
        match self {
            AgentSpec::Oracle => Box::new(OracleAgent::default()),
            AgentSpec::Remote(e) => Box::new(RemoteAgent::new(e.clone(), remote.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agent_spec_round_trip() {
        for s in ["oracle", "remote:tcp://127.0.0.1:9000", "remote:http://localhost:8080/act"] {
            let spec: AgentSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("gpt".parse::<AgentSpec>().is_err());
        assert!("remote:ftp://x".parse::<AgentSpec>().is_err());
    }
}
