//! Consistent synonym substitution over object names and ids.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;
use serde_json::Value;

const BUILTIN: &str = include_str!("../../data/synonyms.json");

#[derive(Deserialize)]
struct TableFile {
    pairs: Vec<[String; 2]>,
}

/// A symmetric word-level synonym table. Because every word appears in at
/// most one pair, the substitution is a permutation of category names.
#[derive(Clone, Debug)]
pub struct SynonymTable {
    words: HashMap<String, String>,
}

impl SynonymTable {
    pub fn builtin() -> &'static SynonymTable {
        static T: OnceLock<SynonymTable> = OnceLock::new();
        T.get_or_init(|| SynonymTable::from_json(BUILTIN).expect("built-in synonym table is valid"))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut words = HashMap::new();
        for [a, b] in file.pairs {
            let (a, b) = (a.to_ascii_lowercase(), b.to_ascii_lowercase());
            if a == b || words.contains_key(&a) || words.contains_key(&b) {
                return Err(format!("`{a}`/`{b}` repeats a word"));
            }
            words.insert(a.clone(), b.clone());
            words.insert(b, a);
        }
        Ok(Self { words })
    }

    fn word(&self, w: &str) -> Option<String> {
        let lower = if w.bytes().any(|b| b.is_ascii_uppercase()) {
            std::borrow::Cow::Owned(w.to_ascii_lowercase())
        } else {
            std::borrow::Cow::Borrowed(w)
        };
        let mapped = match self.words.get(lower.as_ref()) {
            Some(m) => m.clone(),
            None => {
                let stem = lower.strip_suffix('s')?;
                format!("{}s", self.words.get(stem)?)
            }
        };
        Some(if w.starts_with(|c: char| c.is_ascii_uppercase()) {
            let mut cs = mapped.chars();
            cs.next()
                .map(|c| c.to_ascii_uppercase().to_string() + cs.as_str())
                .unwrap_or_default()
        } else {
            mapped
        })
    }

    /// Maps every `_`-separated part of a token.
    fn category(&self, cat: &str) -> String {
        cat.split('_')
            .map(|p| self.word(p).unwrap_or_else(|| p.to_string()))
            .collect::<Vec<_>>()
            .join("_")
    }
}

/// Splits `s` into maximal `[A-Za-z0-9_]` runs (`true`) and the text
/// between them (`false`).
fn tokens(s: &str) -> impl Iterator<Item = (&str, bool)> {
    let bytes = s.as_bytes();
    let is_word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= bytes.len() {
            return None;
        }
        let start = i;
        let word = is_word(bytes[i]);
        while i < bytes.len() && is_word(bytes[i]) == word {
            i += 1;
        }
        Some((&s[start..i], word))
    })
}

fn id_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([a-z][a-z0-9_]*?)_(\d{2,})$").expect("valid id regex"))
}

/// The substitution for one record: id renames plus free-word synonyms.
#[derive(Clone, Debug)]
pub struct SwapMap {
    ids: BTreeMap<String, String>,
    table: &'static SynonymTable,
}

impl SwapMap {
    /// Builds the map from every id-shaped token in `values`. Returns `None`
    /// when two categories would merge into one (duplicate ids).
    pub fn build<'a>(table: &'static SynonymTable, values: impl IntoIterator<Item = &'a Value>) -> Option<Self> {
        let mut ids: BTreeSet<(String, u32)> = BTreeSet::new();
        let mut collect = |s: &str| {
            for tok in tokens(s).filter_map(|(t, word)| word.then_some(t)) {
                if !tok.ends_with(|c: char| c.is_ascii_digit()) || !tok.contains('_') {
                    continue;
                }
                if let Some(c) = id_regex().captures(tok) {
                    if let Ok(i) = c[2].parse::<u32>() {
                        ids.insert((c[1].to_string(), i));
                    }
                }
            }
        };
        for v in values {
            visit(v, &mut collect);
        }
        // group old ids by their new category
        let mut groups: BTreeMap<String, Vec<(String, u32)>> = BTreeMap::new();
        for (cat, i) in ids {
            groups.entry(table.category(&cat)).or_default().push((cat, i));
        }
        let mut map = BTreeMap::new();
        for (new_cat, olds) in groups {
            let cats: BTreeSet<&String> = olds.iter().map(|(c, _)| c).collect();
            if cats.len() > 1 {
                log::warn!("synonym swap would merge {cats:?} into `{new_cat}`; skipped");
                return None;
            }
            for (k, (cat, i)) in olds.iter().enumerate() {
                let width = if k + 1 >= 100 { 3 } else { 2 };
                map.insert(
                    format!("{cat}_{i:02}"),
                    format!("{new_cat}_{:0width$}", k + 1, width = width),
                );
            }
        }
        Some(Self { ids: map, table })
    }

    /// Whether the substitution changes anything.
    pub fn is_identity(&self) -> bool {
        self.ids.iter().all(|(a, b)| a == b)
    }

    pub fn ids(&self) -> &BTreeMap<String, String> {
        &self.ids
    }

    pub fn apply_str(&self, s: &str) -> String {
        let mut memo: HashMap<&str, Option<String>> = HashMap::new();
        let mut out = String::with_capacity(s.len() + 16);
        for (tok, word) in tokens(s) {
            if !word || tok.starts_with(|c: char| c.is_ascii_digit()) {
                out.push_str(tok);
                continue;
            }
            let new = memo.entry(tok).or_insert_with(|| self.map_token(tok));
            out.push_str(new.as_deref().unwrap_or(tok));
        }
        out
    }

    fn map_token(&self, tok: &str) -> Option<String> {
        if let Some(new) = self.ids.get(tok) {
            return Some(new.clone());
        }
        let mapped = if tok.contains('_') {
            self.table.category(tok)
        } else {
            self.table.word(tok)?
        };
        (mapped != tok).then_some(mapped)
    }

    pub fn apply(&self, v: &Value) -> Value {
        match v {
            Value::String(s) => Value::String(self.apply_str(s)),
            Value::Array(a) => Value::Array(a.iter().map(|x| self.apply(x)).collect()),
            Value::Object(o) => Value::Object(o.iter().map(|(k, x)| (k.clone(), self.apply(x))).collect()),
            other => other.clone(),
        }
    }
}

fn visit(v: &Value, f: &mut impl FnMut(&str)) {
    match v {
        Value::String(s) => f(s),
        Value::Array(a) => a.iter().for_each(|x| visit(x, f)),
        Value::Object(o) => o.values().for_each(|x| visit(x, f)),
        _ => {}
    }
}
