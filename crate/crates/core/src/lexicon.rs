//! Idiom dictionaries and light-verb sets.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// English verb lemmas used to keep only idioms that contain a verb.
const DEFAULT_VERB_LEMMAS: &str = include_str!("../data/verbs.txt");

/// Token suffix marking a verb explicitly in an idiom line, e.g. `gild/V the lily`.
pub const VERB_MARKER: &str = "/V";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("lexicon json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lexicon entry {0:?} has no lemmas")]
    EmptyEntry(String),
    #[error("unknown light-verb variant {0:?} (expected dataset_six or wmt_ten)")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdiomEntry {
    pub canonical: Vec<String>,
    pub surface_form: String,
    #[serde(default = "yes", skip_serializing)]
    pub contains_verb: bool,
}

fn yes() -> bool {
    true
}

impl IdiomEntry {
    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdiomLexicon {
    pub source_label: String,
    pub entries: Vec<IdiomEntry>,
}

impl IdiomLexicon {
    /// Build a lexicon, dropping later duplicates of a canonical lemma sequence.
    pub fn new(source_label: impl Into<String>, entries: impl IntoIterator<Item = IdiomEntry>) -> Self {
        let mut seen = HashSet::new();
        let entries = entries
            .into_iter()
            .filter(|e| seen.insert(e.canonical.clone()))
            .collect();
        Self {
            source_label: source_label.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Concatenate lexicons, keeping the first occurrence of each idiom.
    pub fn merge(source_label: impl Into<String>, parts: impl IntoIterator<Item = IdiomLexicon>) -> Self {
        Self::new(source_label, parts.into_iter().flat_map(|l| l.entries))
    }

    pub fn to_json(&self, out: impl Write) -> Result<(), LexiconError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn from_json(reader: impl Read) -> Result<Self, LexiconError> {
        let raw: IdiomLexicon = serde_json::from_reader(reader)?;
        for e in &raw.entries {
            if e.canonical.is_empty() {
                return Err(LexiconError::EmptyEntry(e.surface_form.clone()));
            }
        }
        Ok(Self::new(raw.source_label, raw.entries))
    }
}

/// Lowercase and split possessive clitics: `lion's` -> `lion`, `'s`.
pub fn normalize_idiom(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let word = word.to_lowercase();
        let word = word.replace('\u{2019}', "'");
        match word.strip_suffix("'s") {
            Some(stem) if !stem.is_empty() => {
                out.push(stem.to_string());
                out.push("'s".to_string());
            }
            _ => out.push(word),
        }
    }
    out
}

/// Parse one idiom per line and keep entries containing a verb.
///
/// A line contains a verb when one of its lemmas is in `verb_lemmas`, or
/// when a token carries the explicit [`VERB_MARKER`] suffix.
pub fn load_idiom_lexicon(
    reader: impl BufRead,
    verb_lemmas: &HashSet<String>,
    source_label: &str,
) -> Result<IdiomLexicon, LexiconError> {
    let mut entries = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let marked = line.split_whitespace().any(|w| w.ends_with(VERB_MARKER));
        let surface_form: String = line
            .split_whitespace()
            .map(|w| w.strip_suffix(VERB_MARKER).unwrap_or(w))
            .collect::<Vec<_>>()
            .join(" ");
        let canonical = normalize_idiom(&surface_form);
        if canonical.is_empty() {
            continue;
        }
        let contains_verb = marked || canonical.iter().any(|l| verb_lemmas.contains(l));
        if contains_verb {
            entries.push(IdiomEntry {
                canonical,
                surface_form,
                contains_verb,
            });
        }
    }
    Ok(IdiomLexicon::new(source_label, entries))
}

/// One lemma per line; `#` starts a comment line.
pub fn read_verb_lemmas(reader: impl BufRead) -> Result<HashSet<String>, LexiconError> {
    let mut verbs = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() && !w.starts_with('#') {
            verbs.insert(w.to_lowercase());
        }
    }
    Ok(verbs)
}

/// The shipped English verb-lemma list.
pub fn default_verb_lemmas() -> HashSet<String> {
    read_verb_lemmas(DEFAULT_VERB_LEMMAS.as_bytes()).expect("embedded verb list is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightVerbVariant {
    /// The six verbs of the BNC verb-particle and light-verb datasets.
    DatasetSix,
    /// The ten verbs used when mining WMT sources.
    WmtTen,
}

impl fmt::Display for LightVerbVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DatasetSix => "dataset_six",
            Self::WmtTen => "wmt_ten",
        })
    }
}

impl FromStr for LightVerbVariant {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dataset_six" => Ok(Self::DatasetSix),
            "wmt_ten" => Ok(Self::WmtTen),
            other => Err(LexiconError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightVerbSet {
    pub verbs: BTreeSet<String>,
    pub variant: LightVerbVariant,
}

impl LightVerbSet {
    pub fn contains(&self, lemma: &str) -> bool {
        self.verbs.contains(lemma)
    }
}

pub fn light_verb_set(variant: LightVerbVariant) -> LightVerbSet {
    let verbs: &[&str] = match variant {
        LightVerbVariant::DatasetSix => &["do", "get", "give", "have", "make", "take"],
        LightVerbVariant::WmtTen => &[
            "have", "take", "make", "get", "put", "give", "pay", "do", "offer", "raise",
        ],
    };
    LightVerbSet {
        verbs: verbs.iter().map(|v| v.to_string()).collect(),
        variant,
    }
}
