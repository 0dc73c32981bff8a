//! Stage orchestration.
//!
//! Each stage reads the JSONL stream written by its predecessor, appends its
//! own records, and writes a new stream plus a manifest. The report stage
//! writes a directory of tables instead.

pub mod config;
pub mod manifest;
pub mod records;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BackendConfig, BackendKind, PipelineConfig};
pub use manifest::{InputFile, Manifest};
pub use records::{read_stream, write_stream, Failure, Record, ScoreItem, Stream, TranslationItem, UnitRole};
pub use stages::{run_all, run_stage};

use crate::extract::Category;
use crate::mt::Lang;

/// Failures that stop a stage before it writes output.
#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad configuration, input or stream contents.
    #[error("{0}")]
    Contract(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl PipelineError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn contract(message: impl Into<String>) -> Self {
        Self::Contract(message.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Extract,
    Classify,
    Paraphrase,
    Translate,
    Score,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Extract,
        Stage::Classify,
        Stage::Paraphrase,
        Stage::Translate,
        Stage::Score,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Classify => "classify",
            Stage::Paraphrase => "paraphrase",
            Stage::Translate => "translate",
            Stage::Score => "score",
            Stage::Report => "report",
        }
    }

    /// The stage whose stream this one consumes.
    pub fn predecessor(self) -> Option<Stage> {
        let i = Stage::ALL.iter().position(|s| *s == self).expect("listed");
        i.checked_sub(1).map(|j| Stage::ALL[j])
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::contract(format!("unknown stage {s:?}")))
    }
}

/// Command-line overrides for one stage run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageOptions {
    /// Upstream stream; for `extract`, a corpus file replacing the configured ones.
    pub stage_in: Option<PathBuf>,
    /// Stream file, or the report directory.
    pub stage_out: PathBuf,
    pub seed: Option<u64>,
    /// Backend name replacing the configured one(s) for this stage.
    pub backend: Option<String>,
    pub categories: Option<Vec<Category>>,
    pub target_langs: Option<Vec<Lang>>,
}

/// What a finished stage did.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: Option<Stage>,
    pub output: PathBuf,
    pub counts: BTreeMap<String, usize>,
    /// Per-record failures written to the stream.
    pub failures: usize,
    /// The subset of `failures` caused by transport errors.
    pub transport_failures: usize,
}

impl StageSummary {
    /// 0 when clean, 2 when any transport failure occurred, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.transport_failures > 0 {
            2
        } else if self.failures > 0 {
            1
        } else {
            0
        }
    }
}

/// Exit code for a stage that could not run at all.
pub fn error_exit_code(_err: &PipelineError) -> i32 {
    1
}
