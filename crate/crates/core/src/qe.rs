//! Reference-free quality estimation and the paraphrasing experiment.
//!
//! For an original sentence `s_o`, its paraphrase `s_p` and their
//! translations `s_ot`, `s_pt`:
//!
//! ```text
//! ori  = QE(s_o, s_ot)
//! mix  = QE(s_o, s_pt)
//! para = QE(s_p, s_pt)
//! ```
//!
//! `delta_mix` and `delta_para` are the improvements of `mix` and `para` over
//! `ori`, signed so that positive always means "paraphrasing helped".

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{with_retry, BackendError, QeBackend};
use crate::mt::{Lang, TranslationRecord, ValidityStatus};
use crate::stats::{delta_improvement, StatsError};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    /// 0-25, lower is better (MetricX-style).
    #[serde(rename = "lower_better_0_25")]
    LowerBetter,
    /// 0-1, higher is better (COMET-style).
    #[serde(rename = "higher_better_0_1")]
    HigherBetter,
}

impl Orientation {
    pub fn range(self) -> (f64, f64) {
        match self {
            Self::LowerBetter => (0.0, 25.0),
            Self::HigherBetter => (0.0, 1.0),
        }
    }

    pub fn best(self) -> f64 {
        match self {
            Self::LowerBetter => 0.0,
            Self::HigherBetter => 1.0,
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Self::LowerBetter => 25.0,
            Self::HigherBetter => 0.0,
        }
    }

    pub fn contains<T: Real>(self, value: T) -> bool {
        let (lo, hi) = self.range();
        value.is_finite() && value >= T::of(lo) && value <= T::of(hi)
    }

    /// How much better `other` is than `base`; positive means improvement.
    pub fn improvement<T: Real>(self, base: T, other: T) -> T {
        match self {
            Self::LowerBetter => base - other,
            Self::HigherBetter => other - base,
        }
    }

    /// `true` when `a` is strictly better than `b`.
    pub fn is_better<T: Real>(self, a: T, b: T) -> bool {
        self.improvement(b, a) > T::zero()
    }

    /// Affine map of a similarity in `[0, 1]` onto the range (1 -> best).
    pub fn from_similarity(self, similarity: f64) -> f64 {
        let s = similarity.clamp(0.0, 1.0);
        self.worst() + (self.best() - self.worst()) * s
    }

    /// Factor applied when rendering values (0-1 metrics are shown x100).
    pub fn display_scale(self) -> f64 {
        match self {
            Self::LowerBetter => 1.0,
            Self::HigherBetter => 100.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LowerBetter => "lower_better_0_25",
            Self::HigherBetter => "higher_better_0_1",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lower_better_0_25" | "lower_better" => Ok(Self::LowerBetter),
            "higher_better_0_1" | "higher_better" => Ok(Self::HigherBetter),
            other => Err(format!("unknown orientation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeScore<T> {
    pub metric_id: String,
    pub orientation: Orientation,
    pub value: T,
}

impl<T: Real> QeScore<T> {
    pub fn new(metric_id: impl Into<String>, orientation: Orientation, value: T) -> Self {
        Self {
            metric_id: metric_id.into(),
            orientation,
            value,
        }
    }
}

#[derive(Debug, Error)]
pub enum QeError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("backend {metric_id} returned {value}, outside the {orientation} range")]
    OutOfRange {
        metric_id: String,
        orientation: Orientation,
        value: f64,
    },
    #[error("record {sentence_id} is not a valid translation ({validity})")]
    InvalidRecord {
        sentence_id: String,
        validity: String,
    },
    #[error("original and paraphrase translations differ in system or target language")]
    MismatchedRecords,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Score one (source, hypothesis) pair, range-checked against the backend's
/// declared orientation.
pub fn score(backend: &dyn QeBackend, source: &str, hypothesis: &str) -> Result<QeScore<f64>, QeError> {
    let value = with_retry(|| backend.score(source, hypothesis))?;
    let orientation = backend.orientation();
    if !orientation.contains(value) {
        return Err(QeError::OutOfRange {
            metric_id: backend.metric_id().to_string(),
            orientation,
            value,
        });
    }
    Ok(QeScore::new(backend.metric_id(), orientation, value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport<T> {
    pub sentence_id: String,
    pub system_id: String,
    pub target_lang: Lang,
    pub qe_ori: QeScore<T>,
    pub qe_mix: QeScore<T>,
    pub qe_para: QeScore<T>,
    pub delta_mix: T,
    pub delta_para: T,
}

impl<T: Real> DeltaReport<T> {
    pub fn from_scores(
        sentence_id: impl Into<String>,
        system_id: impl Into<String>,
        target_lang: Lang,
        qe_ori: QeScore<T>,
        qe_mix: QeScore<T>,
        qe_para: QeScore<T>,
    ) -> Result<Self, StatsError> {
        let delta_mix = delta_improvement(&qe_ori, &qe_mix)?;
        let delta_para = delta_improvement(&qe_ori, &qe_para)?;
        Ok(Self {
            sentence_id: sentence_id.into(),
            system_id: system_id.into(),
            target_lang,
            qe_ori,
            qe_mix,
            qe_para,
            delta_mix,
            delta_para,
        })
    }

    /// Deltas recompute exactly from the stored scores.
    pub fn is_consistent(&self) -> bool {
        delta_improvement(&self.qe_ori, &self.qe_mix).is_ok_and(|d| d == self.delta_mix)
            && delta_improvement(&self.qe_ori, &self.qe_para).is_ok_and(|d| d == self.delta_para)
    }
}

fn require_ok(r: &TranslationRecord) -> Result<(), QeError> {
    match r.validity {
        Some(ValidityStatus::Ok) => Ok(()),
        other => Err(QeError::InvalidRecord {
            sentence_id: r.sentence_id.clone(),
            validity: other.map_or_else(|| "unchecked".to_string(), |v| v.to_string()),
        }),
    }
}

/// Score ori/mix/para for one sentence and derive both deltas.
pub fn paraphrase_experiment(
    backend: &dyn QeBackend,
    ori: &TranslationRecord,
    para: &TranslationRecord,
    s_o: &str,
    s_p: &str,
) -> Result<DeltaReport<f64>, QeError> {
    require_ok(ori)?;
    require_ok(para)?;
    if ori.system_id != para.system_id || ori.target_lang != para.target_lang {
        return Err(QeError::MismatchedRecords);
    }
    let qe_ori = score(backend, s_o, &ori.hypothesis)?;
    let qe_mix = score(backend, s_o, &para.hypothesis)?;
    let qe_para = score(backend, s_p, &para.hypothesis)?;
    let report = DeltaReport::from_scores(&ori.sentence_id, &ori.system_id, ori.target_lang, qe_ori, qe_mix, qe_para)?;
    debug_assert!(report.is_consistent());
    Ok(report)
}

fn char_ngrams(text: &str, n: usize) -> HashSet<String> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    if chars.is_empty() {
        return HashSet::new();
    }
    if chars.len() < n {
        return HashSet::from([chars.iter().collect()]);
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

/// Jaccard overlap of lowercase character 4-gram sets, in `[0, 1]`.
pub fn char_ngram_overlap(a: &str, b: &str) -> f64 {
    let ga = char_ngrams(a, 4);
    let gb = char_ngrams(b, 4);
    if ga.is_empty() && gb.is_empty() {
        return if a == b { 1.0 } else { 0.0 };
    }
    let inter = ga.intersection(&gb).count();
    let union = ga.union(&gb).count();
    inter as f64 / union as f64
}

/// Mock QE oracle value for a (source, hypothesis) pair.
pub fn mock_oracle_score(orientation: Orientation, source: &str, hypothesis: &str) -> f64 {
    orientation.from_similarity(char_ngram_overlap(source, hypothesis))
}
