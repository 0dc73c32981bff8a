//! Aggregation of scored records into report tables.
//!
//! Every aggregate here is taken over valid translations only; callers filter
//! before handing scores in. Values are kept at full precision and rounded
//! only when a [`Table`] is rendered.

mod classifier;
mod gap;
mod rank;
mod table;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::Category;
use crate::mt::{Lang, TranslationRecord};
use crate::qe::{DeltaReport, Orientation};
use crate::scalar::mean;
use crate::stats::StatsError;
use crate::Real;

pub use classifier::{classifier_report, ClassifierRow, GoldLabel};
pub use gap::{gap_table, z_gap_table, CellKey, GapCell, DA_Z_METRIC};
pub use rank::{rank_languages, rank_systems, PairMean, RankBy, RankEntry, Ranking};
pub use table::{emit, emit_bundle, Cell, Format, Table, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("prediction {0} has no gold label")]
    UnmatchedPrediction(String),
    #[error("gold label {0} appears twice")]
    DuplicateGold(String),
    #[error("prediction {0} disagrees with its gold label on category")]
    CategoryMismatch(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Something left out of a report, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            message: message.into(),
        }
    }
}

/// Mean paraphrasing deltas for one (category, system, language, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow<T> {
    pub category: Category,
    pub system_id: String,
    pub target_lang: Lang,
    pub metric_id: String,
    pub orientation: Orientation,
    pub n: usize,
    pub ori: T,
    pub mix: T,
    pub para: T,
    pub delta_mix: T,
    pub delta_para: T,
}

pub fn delta_table<T: Real>(reports: &[(Category, DeltaReport<T>)]) -> Vec<DeltaRow<T>> {
    type Key = (Category, String, Lang, String);
    let mut groups: BTreeMap<Key, Vec<&DeltaReport<T>>> = BTreeMap::new();
    for (category, r) in reports {
        let key = (*category, r.system_id.clone(), r.target_lang, r.qe_ori.metric_id.clone());
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((category, system_id, target_lang, metric_id), rs)| {
            let avg = |f: &dyn Fn(&DeltaReport<T>) -> T| {
                mean(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("group is non-empty")
            };
            DeltaRow {
                category,
                system_id,
                target_lang,
                metric_id,
                orientation: rs[0].qe_ori.orientation,
                n: rs.len(),
                ori: avg(&|r| r.qe_ori.value),
                mix: avg(&|r| r.qe_mix.value),
                para: avg(&|r| r.qe_para.value),
                delta_mix: avg(&|r| r.delta_mix),
                delta_para: avg(&|r| r.delta_para),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateCell {
    pub system_id: String,
    pub target_lang: Lang,
    pub n_total: usize,
    pub n_invalid: usize,
    /// Percent in `[0, 100]`.
    pub rate: f64,
    pub flagged: bool,
    pub excluded: bool,
}

/// Invalid-translation rate per (system, language). Cells above `exclude_pct`
/// are marked for exclusion from rankings; cells above `flag_pct` are flagged.
pub fn error_rate_table(records: &[TranslationRecord], flag_pct: f64, exclude_pct: f64) -> Vec<ErrorRateCell> {
    let mut counts: BTreeMap<(String, Lang), (usize, usize)> = BTreeMap::new();
    for r in records {
        let c = counts.entry((r.system_id.clone(), r.target_lang)).or_default();
        c.0 += 1;
        if !r.is_valid() {
            c.1 += 1;
        }
    }
    counts
        .into_iter()
        .map(|((system_id, target_lang), (n_total, n_invalid))| {
            let rate = 100.0 * n_invalid as f64 / n_total as f64;
            ErrorRateCell {
                system_id,
                target_lang,
                n_total,
                n_invalid,
                rate,
                flagged: rate > flag_pct,
                excluded: rate > exclude_pct,
            }
        })
        .collect()
}

pub fn exclusions(cells: &[ErrorRateCell]) -> BTreeSet<(String, Lang)> {
    cells
        .iter()
        .filter(|c| c.excluded)
        .map(|c| (c.system_id.clone(), c.target_lang))
        .collect()
}

pub fn gap_cells_table<T: Real>(name: &str, cells: &[GapCell<T>], scale: f64) -> Table {
    let mut t = Table::new(
        name,
        &["category", "system", "lang", "metric", "gap", "vmwe_mean", "control_mean", "n_vmwe", "n_control"],
    );
    for c in cells {
        t.push(vec![
            Cell::text(c.category.as_str()),
            Cell::text(&c.system_id),
            Cell::text(c.target_lang.code()),
            Cell::text(&c.metric_id),
            Cell::qe(c.gap.as_f64() * scale),
            Cell::qe(c.vmwe_mean.as_f64() * scale),
            Cell::qe(c.control_mean.as_f64() * scale),
            Cell::Int(c.n_vmwe as u64),
            Cell::Int(c.n_control as u64),
        ]);
    }
    t
}

/// Heatmap layout: one row per (category, system), one column per language.
pub fn gap_matrix<T: Real>(name: &str, cells: &[GapCell<T>], scale: f64) -> Table {
    let langs: BTreeSet<Lang> = cells.iter().map(|c| c.target_lang).collect();
    let mut columns = vec!["category", "system"];
    columns.extend(langs.iter().map(|l| l.code()));
    let mut t = Table::new(name, &columns);
    let mut rows: BTreeMap<(Category, &str), BTreeMap<Lang, f64>> = BTreeMap::new();
    for c in cells {
        rows.entry((c.category, &c.system_id))
            .or_default()
            .insert(c.target_lang, c.gap.as_f64() * scale);
    }
    for ((category, system), values) in rows {
        let mut row = vec![Cell::text(category.as_str()), Cell::text(system)];
        row.extend(langs.iter().map(|l| values.get(l).map_or(Cell::Empty, |v| Cell::qe(*v))));
        t.push(row);
    }
    t
}

pub fn delta_rows_table<T: Real>(name: &str, rows: &[DeltaRow<T>]) -> Table {
    let mut t = Table::new(
        name,
        &["category", "system", "lang", "metric", "n", "ori", "mix", "para", "delta_mix", "delta_para"],
    );
    for r in rows {
        let s = r.orientation.display_scale();
        t.push(vec![
            Cell::text(r.category.as_str()),
            Cell::text(&r.system_id),
            Cell::text(r.target_lang.code()),
            Cell::text(&r.metric_id),
            Cell::Int(r.n as u64),
            Cell::qe(r.ori.as_f64() * s),
            Cell::qe(r.mix.as_f64() * s),
            Cell::qe(r.para.as_f64() * s),
            Cell::qe(r.delta_mix.as_f64() * s),
            Cell::qe(r.delta_para.as_f64() * s),
        ]);
    }
    t
}

pub fn ranking_table<T: Real>(name: &str, ranking: &Ranking<T>) -> Table {
    let id_col = match ranking.by {
        RankBy::System => "system",
        RankBy::Language => "lang",
    };
    let mut t = Table::new(name, &["rank", id_col, "metric", "mean", "included"]);
    let scale = ranking.orientation.display_scale();
    for (i, e) in ranking.entries.iter().enumerate() {
        t.push(vec![
            Cell::Int(i as u64 + 1),
            Cell::text(&e.id),
            Cell::text(&ranking.metric_id),
            Cell::qe(e.mean_score.as_f64() * scale),
            Cell::text(e.included.join(";")),
        ]);
    }
    t
}

pub fn error_rate_cells_table(name: &str, cells: &[ErrorRateCell]) -> Table {
    let mut t = Table::new(
        name,
        &["system", "lang", "n_total", "n_invalid", "error_rate", "flagged", "excluded"],
    );
    for c in cells {
        t.push(vec![
            Cell::text(&c.system_id),
            Cell::text(c.target_lang.code()),
            Cell::Int(c.n_total as u64),
            Cell::Int(c.n_invalid as u64),
            Cell::num(c.rate, 2),
            Cell::Bool(c.flagged),
            Cell::Bool(c.excluded),
        ]);
    }
    t
}

pub fn classifier_table<T: Real>(name: &str, rows: &[ClassifierRow<T>]) -> Table {
    let mut t = Table::new(
        name,
        &[
            "category", "accuracy", "macro_f1", "pos_precision", "pos_recall", "pos_f1", "neg_precision",
            "neg_recall", "neg_f1", "tp", "fn", "fp", "tn", "undecided",
        ],
    );
    for r in rows {
        let m = &r.metrics;
        let p = |x: T| Cell::percent(x.as_f64());
        t.push(vec![
            Cell::text(r.category.as_str()),
            p(m.accuracy),
            p(m.macro_f1),
            p(m.positive.precision),
            p(m.positive.recall),
            p(m.positive.f1),
            p(m.negative.precision),
            p(m.negative.recall),
            p(m.negative.f1),
            Cell::Int(r.matrix.true_pos),
            Cell::Int(r.matrix.false_neg),
            Cell::Int(r.matrix.false_pos),
            Cell::Int(r.matrix.true_neg),
            Cell::Int(r.undecided as u64),
        ]);
    }
    t
}

pub fn diagnostics_table(name: &str, diagnostics: &[Diagnostic]) -> Table {
    let mut t = Table::new(name, &["subject", "message"]);
    for d in diagnostics {
        t.push(vec![Cell::text(&d.subject), Cell::text(&d.message)]);
    }
    t
}
