//! Atomic action commands and their text grammar.
//!
//! Grammar (verbs are case-insensitive): `<verb> <target-id>` where verb is
//! one of `pick`, `place on`, `place inside`, `put on`, `put inside`,
//! `open`, `close`, `turn on`, `turn off`, `push`; or a bare `end` /
//! `task end`. An `LLM:` prefix is tolerated. A target may carry a
//! keypoint qualifier as `mug_01.handle`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Pick,
    PlaceOn,
    PlaceInside,
    Open,
    Close,
    TurnOn,
    TurnOff,
    Push,
    End,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::Pick,
        Verb::PlaceOn,
        Verb::PlaceInside,
        Verb::Open,
        Verb::Close,
        Verb::TurnOn,
        Verb::TurnOff,
        Verb::Push,
        Verb::End,
    ];

    /// The phrase used when formatting a command.
    pub fn phrase(self) -> &'static str {
        match self {
            Verb::Pick => "pick",
            Verb::PlaceOn => "place on",
            Verb::PlaceInside => "place inside",
            Verb::Open => "open",
            Verb::Close => "close",
            Verb::TurnOn => "turn on",
            Verb::TurnOff => "turn off",
            Verb::Push => "push",
            Verb::End => "end",
        }
    }

    fn from_phrase(phrase: &str) -> Option<Verb> {
        let norm: String = phrase
            .split(|c: char| c.is_whitespace() || c == '_')
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase();
        Some(match norm.as_str() {
            "pick" => Verb::Pick,
            "place on" | "put on" => Verb::PlaceOn,
            "place inside" | "put inside" => Verb::PlaceInside,
            "open" => Verb::Open,
            "close" => Verb::Close,
            "turn on" => Verb::TurnOn,
            "turn off" => Verb::TurnOff,
            "push" => Verb::Push,
            "end" | "task end" => Verb::End,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionCommand {
    pub verb: Verb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keypoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("`{0}` is not a command")]
    NoCommand(String),
    #[error("verb {0:?} requires a target")]
    MissingTarget(Verb),
    #[error("`end` takes no target")]
    UnexpectedTarget,
}

impl ActionCommand {
    pub fn new(verb: Verb, target: impl Into<NodeId>) -> Self {
        Self {
            verb,
            target: Some(target.into()),
            keypoint: None,
        }
    }

    pub fn end() -> Self {
        Self {
            verb: Verb::End,
            target: None,
            keypoint: None,
        }
    }

    pub fn pick(t: impl Into<NodeId>) -> Self {
        Self::new(Verb::Pick, t)
    }

    pub fn place_on(t: impl Into<NodeId>) -> Self {
        Self::new(Verb::PlaceOn, t)
    }

    pub fn place_inside(t: impl Into<NodeId>) -> Self {
        Self::new(Verb::PlaceInside, t)
    }

    pub fn open(t: impl Into<NodeId>) -> Self {
        Self::new(Verb::Open, t)
    }

    pub fn close(t: impl Into<NodeId>) -> Self {
        Self::new(Verb::Close, t)
    }

    pub fn is_end(&self) -> bool {
        self.verb == Verb::End
    }

    /// Checks the verb/target pairing.
    pub fn validate(&self) -> Result<(), CommandError> {
        match (self.verb, &self.target) {
            (Verb::End, Some(_)) => Err(CommandError::UnexpectedTarget),
            (Verb::End, None) => Ok(()),
            (v, None) => Err(CommandError::MissingTarget(v)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ActionCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb.phrase())?;
        if let Some(t) = &self.target {
            write!(f, " {t}")?;
            if let Some(k) = &self.keypoint {
                write!(f, ".{k}")?;
            }
        }
        Ok(())
    }
}

const VERB_ALTERNATION: &str = r"place[ _]+on|place[ _]+inside|put[ _]+on|put[ _]+inside|turn[ _]+on|turn[ _]+off|pick|open|close|push";
const TARGET: &str = r"[A-Za-z][A-Za-z0-9_]*(?:\.[A-Za-z][A-Za-z0-9_]*)?";

/// Matches `<verb> <target>` anywhere in text.
pub(crate) fn command_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(r"(?i)\b({VERB_ALTERNATION})\s+({TARGET})\b"))
            .expect("valid command regex")
    })
}

/// Matches the terminal command; `task end` may appear anywhere, a bare
/// `end` only as a whole segment.
pub(crate) fn end_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\btask[ _]+end\b").expect("valid end regex"))
}

pub(crate) fn build_command(verb_text: &str, target_text: &str) -> Option<ActionCommand> {
    let verb = Verb::from_phrase(verb_text)?;
    let (target, keypoint) = match target_text.split_once('.') {
        Some((t, k)) => (t, Some(k.to_string())),
        None => (target_text, None),
    };
    Some(ActionCommand {
        verb,
        target: Some(NodeId::new(target)),
        keypoint,
    })
}

/// Strips an optional `LLM:` prefix and surrounding punctuation.
pub(crate) fn strip_segment(segment: &str) -> &str {
    let s = segment.trim();
    let s = if s.len() >= 4 && s[..4].eq_ignore_ascii_case("llm:") {
        s[4..].trim()
    } else {
        s
    };
    s.trim_matches(|c: char| c == '.' || c == '!' || c == '"' || c == '\'' || c.is_whitespace())
}

impl FromStr for ActionCommand {
    type Err = CommandError;

    /// Parses exactly one command; surrounding text is not allowed.
    fn from_str(s: &str) -> Result<Self, CommandError> {
        let body = strip_segment(s);
        if end_regex().find(body).is_some_and(|m| m.as_str().len() == body.len())
            || body.eq_ignore_ascii_case("end")
        {
            return Ok(ActionCommand::end());
        }
        let caps = command_regex()
            .captures(body)
            .filter(|c| c.get(0).is_some_and(|m| m.start() == 0 && m.end() == body.len()))
            .ok_or_else(|| CommandError::NoCommand(s.to_string()))?;
        build_command(&caps[1], &caps[2]).ok_or_else(|| CommandError::NoCommand(s.to_string()))
    }
}
