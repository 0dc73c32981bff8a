//! Machine translation records, backends and validity checks.

pub mod langid;
pub mod validity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{with_retry, BackendError, MtBackend};

pub use langid::{detect_language, Detection, LanguageDetector};
pub use validity::{validate_translation, RepetitionRule, ValidityStatus, Validator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Cs,
    De,
    Zh,
    Ru,
    Ja,
    Es,
    Tr,
}

impl Lang {
    pub const ALL: [Lang; 8] = [Lang::En, Lang::Cs, Lang::De, Lang::Zh, Lang::Ru, Lang::Ja, Lang::Es, Lang::Tr];
    /// Translation targets; the source side is always English.
    pub const TARGETS: [Lang; 7] = [Lang::Cs, Lang::De, Lang::Zh, Lang::Ru, Lang::Ja, Lang::Es, Lang::Tr];

    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Cs => "cs",
            Lang::De => "de",
            Lang::Zh => "zh",
            Lang::Ru => "ru",
            Lang::Ja => "ja",
            Lang::Es => "es",
            Lang::Tr => "tr",
        }
    }

    pub fn is_target(self) -> bool {
        self != Lang::En
    }

    pub fn is_latin_script(self) -> bool {
        matches!(self, Lang::En | Lang::Cs | Lang::De | Lang::Es | Lang::Tr)
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Lang {
    type Err = MtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lang::ALL
            .into_iter()
            .find(|l| l.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| MtError::UnknownLanguage(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum MtError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("unknown language code {0:?}")]
    UnknownLanguage(String),
    #[error("{0} is not a translation target")]
    UnsupportedTarget(Lang),
    #[error("error rate of an empty record set")]
    EmptyRecords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub sentence_id: String,
    pub source: String,
    pub target_lang: Lang,
    pub system_id: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<ValidityStatus>,
}

impl TranslationRecord {
    pub fn is_valid(&self) -> bool {
        self.validity == Some(ValidityStatus::Ok)
    }

    /// Fill in `validity` with the default validator.
    pub fn validated(mut self) -> Self {
        self.validity = Some(validate_translation(&self));
        self
    }
}

/// One translation, hypothesis kept verbatim and validity unset.
pub fn translate(
    backend: &dyn MtBackend,
    sentence_id: impl Into<String>,
    text: &str,
    target: Lang,
) -> Result<TranslationRecord, MtError> {
    if !target.is_target() {
        return Err(MtError::UnsupportedTarget(target));
    }
    let hypothesis = with_retry(|| backend.translate(text, target))?;
    Ok(TranslationRecord {
        sentence_id: sentence_id.into(),
        source: text.to_string(),
        target_lang: target,
        system_id: backend.system_id().to_string(),
        hypothesis,
        validity: None,
    })
}

/// Percentage of records whose validity is not `ok` (unchecked counts as invalid).
pub fn error_rate<'a>(records: impl IntoIterator<Item = &'a TranslationRecord>) -> Result<f64, MtError> {
    let (mut total, mut bad) = (0usize, 0usize);
    for r in records {
        total += 1;
        if !r.is_valid() {
            bad += 1;
        }
    }
    if total == 0 {
        return Err(MtError::EmptyRecords);
    }
    Ok(100.0 * bad as f64 / total as f64)
}

pub fn format_rate(rate: f64) -> String {
    format!("{rate:.2}")
}
