//! Rewriting of goal instructions and scene descriptions.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Text in, text out. Variant 0 is always the original text.
pub trait Rephraser: Send + Sync {
    fn rephrase(&self, text: &str, variant: usize) -> Result<String, DataError>;
}

/// Deterministic offline fallback built from fixed templates.
#[derive(Clone, Copy, Debug, Default)]
pub struct TemplateRephraser;

const TEMPLATES: [(&str, &str); 4] = [
    ("Please ", ""),
    ("Your task: ", ""),
    ("", " Complete this carefully."),
    ("I need you to ", ""),
];

impl Rephraser for TemplateRephraser {
    fn rephrase(&self, text: &str, variant: usize) -> Result<String, DataError> {
        if variant == 0 {
            return Ok(text.to_string());
        }
        let (pre, post) = TEMPLATES[(variant - 1) % TEMPLATES.len()];
        let body = text.trim();
        let body = if pre.is_empty() || pre.ends_with(": ") {
            body.to_string()
        } else {
            lower_first(body)
        };
        Ok(format!("{pre}{body}{post}"))
    }
}

fn lower_first(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_lowercase().collect::<String>() + cs.as_str(),
        None => String::new(),
    }
}

#[derive(Serialize)]
struct Request<'a> {
    text: &'a str,
    variant: usize,
}

#[derive(Deserialize)]
struct Reply {
    text: String,
}

/// Posts `{text, variant}` to an HTTP service expecting `{text}` back.
/// Falls back to the templates when the service fails.
pub struct HttpRephraser {
    url: String,
    agent: ureq::Agent,
}

impl HttpRephraser {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
        }
    }

    fn call(&self, text: &str, variant: usize) -> Result<String, DataError> {
        let body = serde_json::to_string(&Request { text, variant })?;
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body.as_str())
            .map_err(|e| DataError::Rephrase(e.to_string()))?;
        let raw = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| DataError::Rephrase(e.to_string()))?;
        let reply: Reply = serde_json::from_str(&raw).map_err(|e| DataError::Rephrase(e.to_string()))?;
        Ok(reply.text)
    }
}

impl Rephraser for HttpRephraser {
    fn rephrase(&self, text: &str, variant: usize) -> Result<String, DataError> {
        if variant == 0 {
            return Ok(text.to_string());
        }
        self.call(text, variant).or_else(|e| {
            log::warn!("rephraser at {} failed ({e}); using templates", self.url);
            TemplateRephraser.rephrase(text, variant)
        })
    }
}
