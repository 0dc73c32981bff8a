//! Deterministic offline backends for tests and fixture runs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, MtBackend, QeBackend};
use crate::llm::ChatRequest;
use crate::mt::Lang;
use crate::qe::{mock_oracle_score, Orientation};

/// Canned chat replies keyed by request key (e.g. `classify:<candidate id>`)
/// or by the request hash; `default` answers anything else.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatScript {
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    #[serde(default)]
    pub default: Option<String>,
}

impl ChatScript {
    pub fn from_json(reader: impl Read) -> Result<Self, serde_json::Error> {
        serde_json::from_reader(reader)
    }
}

pub struct ScriptedChat {
    model_id: String,
    script: ChatScript,
}

impl ScriptedChat {
    pub fn new(model_id: impl Into<String>, script: ChatScript) -> Self {
        Self {
            model_id: model_id.into(),
            script,
        }
    }
}

impl ChatBackend for ScriptedChat {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let hash = request.hash();
        request
            .key
            .as_ref()
            .and_then(|k| self.script.responses.get(k))
            .or_else(|| self.script.responses.get(&hash))
            .or(self.script.default.as_ref())
            .cloned()
            .ok_or_else(|| BackendError::Unscripted(request.key.clone().unwrap_or(hash)))
    }
}

/// Translation script. Sources missing from `translations` come back as
/// `"[<lang>] <source>"`; languages in `echo_langs` return the source as is.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MtScript {
    #[serde(default)]
    pub translations: BTreeMap<Lang, BTreeMap<String, String>>,
    #[serde(default)]
    pub echo_langs: BTreeSet<Lang>,
    /// Drop this many trailing words from scripted translations.
    #[serde(default)]
    pub drop_last_words: usize,
}

impl MtScript {
    pub fn from_json(reader: impl Read) -> Result<Self, serde_json::Error> {
        serde_json::from_reader(reader)
    }
}

pub struct MockMt {
    system_id: String,
    script: MtScript,
}

impl MockMt {
    pub fn new(system_id: impl Into<String>, script: MtScript) -> Self {
        Self {
            system_id: system_id.into(),
            script,
        }
    }

    /// Identity-marker mock: every hypothesis is `"[<lang>] <source>"`.
    pub fn marker(system_id: impl Into<String>) -> Self {
        Self::new(system_id, MtScript::default())
    }
}

impl MtBackend for MockMt {
    fn system_id(&self) -> &str {
        &self.system_id
    }

    fn translate(&self, text: &str, target: Lang) -> Result<String, BackendError> {
        if self.script.echo_langs.contains(&target) {
            return Ok(text.to_string());
        }
        match self.script.translations.get(&target).and_then(|t| t.get(text)) {
            Some(hyp) => {
                let words: Vec<&str> = hyp.split_whitespace().collect();
                let keep = words.len().saturating_sub(self.script.drop_last_words).max(1);
                Ok(words[..keep.min(words.len())].join(" "))
            }
            None => Ok(format!("[{}] {}", target.code(), text)),
        }
    }
}

/// QE oracle: character 4-gram overlap mapped onto the metric's range.
/// Scores carry no linguistic meaning.
pub struct OverlapQe {
    metric_id: String,
    orientation: Orientation,
}

impl OverlapQe {
    pub fn new(metric_id: impl Into<String>, orientation: Orientation) -> Self {
        Self {
            metric_id: metric_id.into(),
            orientation,
        }
    }
}

impl QeBackend for OverlapQe {
    fn metric_id(&self) -> &str {
        &self.metric_id
    }

    fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn score(&self, source: &str, hypothesis: &str) -> Result<f64, BackendError> {
        Ok(mock_oracle_score(self.orientation, source, hypothesis))
    }
}
