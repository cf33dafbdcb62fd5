//! Abbreviation knowledge: dictionary loading, exact matching against the
//! query and retrieved context, and snippet rendering for the prompt.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Chunk;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbbreviationEntry {
    pub abbr: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desc: Option<String>,
}

impl AbbreviationEntry {
    pub fn new(abbr: impl Into<String>, name: impl Into<String>, desc: Option<&str>) -> Self {
        Self {
            abbr: abbr.into(),
            name: name.into(),
            desc: desc.map(str::to_string),
        }
    }

    pub fn snippet(&self) -> String {
        match self.desc.as_deref().filter(|d| !d.is_empty()) {
            Some(desc) => format!("{} is usually short for {}, which is {}.", self.abbr, self.name, desc),
            None => format!("{} is usually short for {}.", self.abbr, self.name),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbbreviationDictionary {
    entries: Vec<AbbreviationEntry>,
    lookup: HashMap<String, usize>,
}

impl AbbreviationDictionary {
    pub fn new(entries: Vec<AbbreviationEntry>) -> Result<Self> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &entries {
            if e.abbr.trim().is_empty() || e.name.trim().is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "abbreviation entries need a non-empty abbr and name (got {:?} / {:?})",
                    e.abbr, e.name
                )));
            }
            *counts.entry(e.abbr.as_str()).or_default() += 1;
        }
        let dups: Vec<String> = counts
            .into_iter()
            .filter(|&(_, n)| n > 1)
            .map(|(k, _)| k.to_string())
            .collect();
        if !dups.is_empty() {
            return Err(Error::DuplicateAbbreviation(dups));
        }
        let lookup = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.abbr.clone(), i))
            .collect();
        Ok(Self { entries, lookup })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[AbbreviationEntry] {
        &self.entries
    }

    pub fn get(&self, abbr: &str) -> Option<&AbbreviationEntry> {
        self.lookup.get(abbr).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads a JSON array of `{abbr, name, desc?}`.
pub fn load_dictionary(path: &Path) -> Result<AbbreviationDictionary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<AbbreviationEntry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        uri: path.display().to_string(),
        format: "abbreviation dictionary",
        message: e.to_string(),
    })?;
    if entries.is_empty() {
        log::warn!("{}: abbreviation dictionary is empty", path.display());
    }
    AbbreviationDictionary::new(entries)
}

/// Byte offsets at which `key` occurs bounded by non-alphanumerics or the
/// string edges. Case-sensitive.
fn whole_token_positions(text: &str, key: &str) -> Vec<usize> {
    text.match_indices(key)
        .filter(|&(pos, _)| {
            let before = text[..pos].chars().next_back();
            let after = text[pos + key.len()..].chars().next();
            !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
        })
        .map(|(pos, _)| pos)
        .collect()
}

/// Dictionary entries whose abbreviation occurs as a whole token in the query
/// or the context. Query hits come first by position, then context hits by
/// chunk order and position; each entry appears at most once.
pub fn find_abbreviations(
    query: &str,
    context: &[Chunk],
    dict: &AbbreviationDictionary,
) -> Vec<AbbreviationEntry> {
    let mut seen = HashSet::new();
    let mut found = Vec::new();
    let texts = std::iter::once(query).chain(context.iter().map(|c| c.text.as_str()));
    for text in texts {
        let mut hits: Vec<(usize, usize)> = dict
            .entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| whole_token_positions(text, &e.abbr).first().map(|&p| (p, i)))
            .collect();
        hits.sort_unstable();
        for (_, i) in hits {
            if seen.insert(i) {
                found.push(dict.entries[i].clone());
            }
        }
    }
    found
}

pub fn render_snippets(entries: &[AbbreviationEntry]) -> String {
    entries
        .iter()
        .map(AbbreviationEntry::snippet)
        .collect::<Vec<_>>()
        .join("\n")
}
