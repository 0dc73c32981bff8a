//! JSONL stage streams: a header line, then one tagged record per line.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Stage};
use crate::corpus::Sentence;
use crate::extract::{Category, VmweCandidate};
use crate::llm::{ClassificationResult, ParaphraseResult};
use crate::mt::{Lang, TranslationRecord};
use crate::qe::{DeltaReport, QeScore};
use crate::report::SCHEMA_VERSION;

/// What a translated unit is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitRole {
    /// A sentence with at least one positively classified candidate.
    Vmwe,
    Control,
    Paraphrase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationItem {
    pub role: UnitRole,
    /// Sentence id, or candidate id for paraphrases.
    pub unit: String,
    /// Categories the unit counts towards (empty for controls).
    pub categories: Vec<Category>,
    pub record: TranslationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreItem {
    pub role: UnitRole,
    pub unit: String,
    pub categories: Vec<Category>,
    pub sentence_id: String,
    pub system_id: String,
    pub target_lang: Lang,
    pub score: QeScore<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaItem {
    pub category: Category,
    pub candidate_ref: String,
    pub report: DeltaReport<f64>,
}

/// A unit a stage could not process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    pub unit: String,
    pub error: String,
    pub transport: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Header { schema_version: u32, stage: Stage },
    Sentence(Sentence),
    Candidate(VmweCandidate),
    Control { sentence_id: String },
    Classification(ClassificationResult),
    Paraphrase(ParaphraseResult),
    Translation(TranslationItem),
    Score(ScoreItem),
    Delta(DeltaItem),
    Failure(Failure),
}

/// A decoded stream without its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub stage: Stage,
    pub records: Vec<Record>,
}

impl Stream {
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.records.iter().filter_map(|r| match r {
            Record::Sentence(s) => Some(s),
            _ => None,
        })
    }

    pub fn candidates(&self) -> impl Iterator<Item = &VmweCandidate> {
        self.records.iter().filter_map(|r| match r {
            Record::Candidate(c) => Some(c),
            _ => None,
        })
    }

    pub fn controls(&self) -> impl Iterator<Item = &str> {
        self.records.iter().filter_map(|r| match r {
            Record::Control { sentence_id } => Some(sentence_id.as_str()),
            _ => None,
        })
    }

    pub fn classifications(&self) -> impl Iterator<Item = &ClassificationResult> {
        self.records.iter().filter_map(|r| match r {
            Record::Classification(c) => Some(c),
            _ => None,
        })
    }

    pub fn paraphrases(&self) -> impl Iterator<Item = &ParaphraseResult> {
        self.records.iter().filter_map(|r| match r {
            Record::Paraphrase(p) => Some(p),
            _ => None,
        })
    }

    pub fn translations(&self) -> impl Iterator<Item = &TranslationItem> {
        self.records.iter().filter_map(|r| match r {
            Record::Translation(t) => Some(t),
            _ => None,
        })
    }

    pub fn scores(&self) -> impl Iterator<Item = &ScoreItem> {
        self.records.iter().filter_map(|r| match r {
            Record::Score(s) => Some(s),
            _ => None,
        })
    }

    pub fn deltas(&self) -> impl Iterator<Item = &DeltaItem> {
        self.records.iter().filter_map(|r| match r {
            Record::Delta(d) => Some(d),
            _ => None,
        })
    }
}

pub fn decode_stream(reader: impl BufRead, origin: &str) -> Result<Stream, PipelineError> {
    let bad = |line: usize, msg: String| PipelineError::contract(format!("{origin}:{line}: {msg}"));
    let mut stage = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| bad(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
        match (record, stage) {
            (Record::Header { schema_version, stage: s }, None) => {
                if schema_version != SCHEMA_VERSION {
                    return Err(bad(i + 1, format!("schema version {schema_version}, expected {SCHEMA_VERSION}")));
                }
                stage = Some(s);
            }
            (Record::Header { .. }, Some(_)) => return Err(bad(i + 1, "second header".into())),
            (_, None) => return Err(bad(i + 1, "stream does not start with a header".into())),
            (r, Some(_)) => records.push(r),
        }
    }
    let stage = stage.ok_or_else(|| PipelineError::contract(format!("{origin}: empty stream")))?;
    Ok(Stream { stage, records })
}

pub fn read_stream(path: &Path) -> Result<Stream, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    decode_stream(BufReader::new(file), &path.display().to_string())
}

pub fn encode_stream(stage: Stage, records: &[Record], mut out: impl Write) -> std::io::Result<()> {
    let header = Record::Header {
        schema_version: SCHEMA_VERSION,
        stage,
    };
    for r in std::iter::once(&header).chain(records) {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_stream(path: &Path, stage: Stage, records: &[Record]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    encode_stream(stage, records, BufWriter::new(file)).map_err(|e| PipelineError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn sample() -> Vec<Record> {
        vec![
            Record::Sentence(Sentence::from_tokens("s1", vec![Token::plain(1, "Hi"), Token::plain(2, ".")])),
            Record::Control {
                sentence_id: "s1".into(),
            },
            Record::Failure(Failure {
                stage: Stage::Translate,
                unit: "s1".into(),
                error: "boom".into(),
                transport: true,
            }),
        ]
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        encode_stream(Stage::Extract, &sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"kind":"header","schema_version":1,"stage":"extract"}"#));
        let s = decode_stream(buf.as_slice(), "t").unwrap();
        assert_eq!(s.stage, Stage::Extract);
        assert_eq!(s.records, sample());
        assert_eq!(s.controls().collect::<Vec<_>>(), ["s1"]);
    }

    #[test]
    fn header_is_required() {
        let err = decode_stream(r#"{"kind":"control","sentence_id":"x"}"#.as_bytes(), "t").unwrap_err();
        assert!(err.to_string().contains("header"));
        assert!(decode_stream("".as_bytes(), "t").is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        let line = r#"{"kind":"header","schema_version":99,"stage":"extract"}"#;
        assert!(decode_stream(line.as_bytes(), "t").unwrap_err().to_string().contains("schema version"));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let text = "{\"kind\":\"header\",\"schema_version\":1,\"stage\":\"extract\"}\n{\"kind\":\"mystery\"}\n";
        assert!(decode_stream(text.as_bytes(), "t").is_err());
    }
}
