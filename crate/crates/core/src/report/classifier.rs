//! Classifier evaluation against gold candidate labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::extract::Category;
use crate::llm::{ClassificationResult, Decision};
use crate::stats::{confusion_metrics, ClassMetrics, ConfusionMatrix};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub candidate_ref: String,
    pub category: Category,
    /// True when the candidate really is a VMWE of its category.
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRow<T> {
    pub category: Category,
    pub matrix: ConfusionMatrix,
    pub metrics: ClassMetrics<T>,
    /// Predictions without a usable verdict (undecided or failed).
    pub undecided: usize,
    pub undecided_positives: usize,
    /// Gold items that received no prediction at all.
    pub unpredicted: usize,
}

/// One row per category with at least one decided prediction, in VID, VPC,
/// LVC order.
pub fn classifier_report<T: Real>(
    gold: &[GoldLabel],
    predicted: &[ClassificationResult],
) -> Result<Vec<ClassifierRow<T>>, ReportError> {
    let mut by_ref: BTreeMap<&str, &GoldLabel> = BTreeMap::new();
    for g in gold {
        if by_ref.insert(&g.candidate_ref, g).is_some() {
            return Err(ReportError::DuplicateGold(g.candidate_ref.clone()));
        }
    }

    #[derive(Default)]
    struct Acc {
        matrix: ConfusionMatrix,
        undecided: usize,
        undecided_positives: usize,
        predicted: usize,
    }
    let mut acc: BTreeMap<Category, Acc> = BTreeMap::new();
    for p in predicted {
        let g = by_ref
            .get(p.candidate_ref.as_str())
            .ok_or_else(|| ReportError::UnmatchedPrediction(p.candidate_ref.clone()))?;
        if g.category != p.category {
            return Err(ReportError::CategoryMismatch(p.candidate_ref.clone()));
        }
        let a = acc.entry(g.category).or_default();
        a.predicted += 1;
        match (p.status, p.verdict) {
            (Decision::Decided, Some(verdict)) => a.matrix.observe(g.label, verdict),
            _ => {
                a.undecided += 1;
                if g.label {
                    a.undecided_positives += 1;
                }
            }
        }
    }

    let mut gold_counts: BTreeMap<Category, usize> = BTreeMap::new();
    for g in gold {
        *gold_counts.entry(g.category).or_default() += 1;
    }

    let mut rows = Vec::new();
    for category in Category::ALL {
        let Some(a) = acc.remove(&category) else { continue };
        if a.matrix.total() == 0 {
            continue;
        }
        rows.push(ClassifierRow {
            category,
            matrix: a.matrix,
            metrics: confusion_metrics(&a.matrix)?,
            undecided: a.undecided,
            undecided_positives: a.undecided_positives,
            unpredicted: gold_counts.get(&category).copied().unwrap_or(0).saturating_sub(a.predicted),
        });
    }
    Ok(rows)
}
