//! Invalid-translation detection.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::langid::{default_detector, LanguageDetector};
use super::TranslationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityStatus {
    Ok,
    WrongLanguage,
    Untranslated,
    Repetitive,
    Empty,
}

impl ValidityStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::WrongLanguage => "wrong_language",
            Self::Untranslated => "untranslated",
            Self::Repetitive => "repetitive",
            Self::Empty => "empty",
        }
    }
}

impl fmt::Display for ValidityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRule {
    /// Consecutive occurrences that make output repetitive.
    pub min_repeats: usize,
    /// Longest character unit checked.
    pub max_unit_chars: usize,
}

impl Default for RepetitionRule {
    fn default() -> Self {
        Self {
            min_repeats: 8,
            max_unit_chars: 6,
        }
    }
}

fn is_filler(unit: &[char]) -> bool {
    unit.iter().all(|c| c.is_whitespace()) || unit.iter().all(|c| c.is_ascii_digit())
}

impl RepetitionRule {
    /// A whitespace token, or a unit of `1..=max_unit_chars` characters,
    /// repeated at least `min_repeats` times back to back.
    pub fn is_repetitive(&self, text: &str) -> bool {
        let need = self.min_repeats.max(2);
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let mut run = 1;
        for pair in tokens.windows(2) {
            run = if pair[0] == pair[1] { run + 1 } else { 1 };
            if run >= need && !pair[0].chars().all(|c| c.is_ascii_digit()) {
                return true;
            }
        }
        let chars: Vec<char> = text.chars().collect();
        for unit in 1..=self.max_unit_chars {
            // chars[j] == chars[j + unit] for (need - 1) * unit positions in a
            // row means the unit starting there repeats `need` times.
            let span = (need - 1) * unit;
            let mut run = 0;
            for j in 0..chars.len().saturating_sub(unit) {
                if chars[j] == chars[j + unit] {
                    run += 1;
                    if run >= span {
                        let start = j + 1 - span;
                        if !is_filler(&chars[start..start + unit]) {
                            return true;
                        }
                    }
                } else {
                    run = 0;
                }
            }
        }
        false
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone)]
pub struct Validator<'a> {
    pub detector: &'a LanguageDetector,
    pub repetition: RepetitionRule,
}

impl Default for Validator<'static> {
    fn default() -> Self {
        Self {
            detector: default_detector(),
            repetition: RepetitionRule::default(),
        }
    }
}

impl Validator<'_> {
    /// Checks run in order: empty, untranslated, repetitive, wrong language.
    pub fn validate(&self, r: &TranslationRecord) -> ValidityStatus {
        if r.hypothesis.trim().is_empty() {
            return ValidityStatus::Empty;
        }
        if normalize_ws(&r.hypothesis) == normalize_ws(&r.source) {
            return ValidityStatus::Untranslated;
        }
        if self.repetition.is_repetitive(&r.hypothesis) {
            return ValidityStatus::Repetitive;
        }
        if self.detector.detect(&r.hypothesis).lang != Some(r.target_lang) {
            return ValidityStatus::WrongLanguage;
        }
        ValidityStatus::Ok
    }
}

pub fn validate_translation(r: &TranslationRecord) -> ValidityStatus {
    Validator::default().validate(r)
}
