//! Rankings of systems (or languages) by mean score.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Diagnostic;
use crate::extract::Category;
use crate::mt::Lang;
use crate::qe::Orientation;
use crate::scalar::mean;
use crate::Real;

/// Mean score of one system on one language pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMean<T> {
    pub system_id: String,
    pub target_lang: Lang,
    pub mean: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBy {
    System,
    Language,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry<T> {
    /// System id, or language code when ranking languages.
    pub id: String,
    pub mean_score: T,
    /// The pairs (languages, or systems) the mean was taken over.
    pub included: Vec<String>,
}

/// Best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking<T> {
    pub metric_id: String,
    pub category: Option<Category>,
    pub by: RankBy,
    pub orientation: Orientation,
    pub entries: Vec<RankEntry<T>>,
}

fn rank<T: Real>(
    items: impl IntoIterator<Item = (String, String, T)>,
    orientation: Orientation,
) -> (Vec<RankEntry<T>>, Vec<Diagnostic>) {
    let mut groups: BTreeMap<String, Vec<(String, T)>> = BTreeMap::new();
    for (id, member, value) in items {
        groups.entry(id).or_default().push((member, value));
    }
    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    for (id, mut members) in groups {
        members.sort_by(|a, b| a.0.cmp(&b.0));
        let values: Vec<T> = members.iter().map(|m| m.1).collect();
        match mean(&values) {
            Some(m) if m.is_finite() => entries.push(RankEntry {
                id,
                mean_score: m,
                included: members.into_iter().map(|m| m.0).collect(),
            }),
            _ => diagnostics.push(Diagnostic::new(id, "dropped from ranking: mean is not finite")),
        }
    }
    // groups are id-ordered, and the sort is stable, so ties stay by id
    entries.sort_by(|a, b| {
        let ord = a.mean_score.partial_cmp(&b.mean_score).expect("finite means");
        match orientation {
            Orientation::LowerBetter => ord,
            Orientation::HigherBetter => ord.reverse(),
        }
    });
    (entries, diagnostics)
}

/// Systems ranked by their mean over non-excluded language pairs.
pub fn rank_systems<T: Real>(
    cells: &[PairMean<T>],
    metric_id: &str,
    category: Option<Category>,
    orientation: Orientation,
    exclusions: &BTreeSet<(String, Lang)>,
) -> (Ranking<T>, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    let mut items = Vec::new();
    let systems: BTreeSet<&str> = cells.iter().map(|c| c.system_id.as_str()).collect();
    for c in cells {
        if exclusions.contains(&(c.system_id.clone(), c.target_lang)) {
            diagnostics.push(Diagnostic::new(
                format!("{}/{}", c.system_id, c.target_lang),
                "pair excluded from ranking",
            ));
        } else {
            items.push((c.system_id.clone(), c.target_lang.code().to_string(), c.mean));
        }
    }
    let (entries, more) = rank(items, orientation);
    diagnostics.extend(more);
    for s in systems {
        if !entries.iter().any(|e| e.id == s) && !diagnostics.iter().any(|d| d.subject == s) {
            diagnostics.push(Diagnostic::new(s, "dropped from ranking: no included pairs"));
        }
    }
    let ranking = Ranking {
        metric_id: metric_id.to_string(),
        category,
        by: RankBy::System,
        orientation,
        entries,
    };
    (ranking, diagnostics)
}

/// Language pairs ranked by their mean over non-excluded systems.
pub fn rank_languages<T: Real>(
    cells: &[PairMean<T>],
    metric_id: &str,
    category: Option<Category>,
    orientation: Orientation,
    exclusions: &BTreeSet<(String, Lang)>,
) -> (Ranking<T>, Vec<Diagnostic>) {
    let items = cells
        .iter()
        .filter(|c| !exclusions.contains(&(c.system_id.clone(), c.target_lang)))
        .map(|c| (c.target_lang.code().to_string(), c.system_id.clone(), c.mean));
    let (entries, diagnostics) = rank(items, orientation);
    let ranking = Ranking {
        metric_id: metric_id.to_string(),
        category,
        by: RankBy::Language,
        orientation,
        entries,
    };
    (ranking, diagnostics)
}
