//! VMWE vs control gaps.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Diagnostic;
use crate::extract::Category;
use crate::mt::Lang;
use crate::qe::Orientation;
use crate::scalar::mean;
use crate::stats::ZScore;
use crate::Real;

/// Metric id used for gaps over z-normalized human scores.
pub const DA_Z_METRIC: &str = "da_z";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub category: Category,
    pub system_id: String,
    pub target_lang: Lang,
}

impl CellKey {
    pub fn new(category: Category, system_id: impl Into<String>, target_lang: Lang) -> Self {
        Self {
            category,
            system_id: system_id.into(),
            target_lang,
        }
    }
}

/// Positive `gap` always means VMWE sentences fared worse than controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCell<T> {
    pub category: Category,
    pub system_id: String,
    pub target_lang: Lang,
    pub metric_id: String,
    pub gap: T,
    pub vmwe_mean: T,
    pub control_mean: T,
    pub n_vmwe: usize,
    pub n_control: usize,
}

/// Gap per cell. Inputs must already be restricted to valid translations.
/// Cells with an empty side are left out and reported as diagnostics.
pub fn gap_table<T: Real>(
    vmwe: &BTreeMap<CellKey, Vec<T>>,
    control: &BTreeMap<CellKey, Vec<T>>,
    metric_id: &str,
    orientation: Orientation,
) -> (Vec<GapCell<T>>, Vec<Diagnostic>) {
    let keys: BTreeSet<&CellKey> = vmwe.keys().chain(control.keys()).collect();
    let mut cells = Vec::new();
    let mut diagnostics = Vec::new();
    for key in keys {
        let v = vmwe.get(key).map(Vec::as_slice).unwrap_or(&[]);
        let c = control.get(key).map(Vec::as_slice).unwrap_or(&[]);
        match (mean(v), mean(c)) {
            (Some(vm), Some(cm)) => cells.push(GapCell {
                category: key.category,
                system_id: key.system_id.clone(),
                target_lang: key.target_lang,
                metric_id: metric_id.to_string(),
                // improvement of control over vmwe = how much worse vmwe is
                gap: orientation.improvement(vm, cm),
                vmwe_mean: vm,
                control_mean: cm,
                n_vmwe: v.len(),
                n_control: c.len(),
            }),
            _ => diagnostics.push(Diagnostic::new(
                format!("{}/{}/{}", key.category, key.system_id, key.target_lang),
                format!("gap cell omitted: {} vmwe and {} control scores", v.len(), c.len()),
            )),
        }
    }
    (cells, diagnostics)
}

/// Gaps over z-normalized human scores for one language pair. Higher z is
/// better, so the gap is `mean(control) - mean(vmwe)`.
pub fn z_gap_table<T: Real>(
    z: &[ZScore<T>],
    target_lang: Lang,
    vmwe_ids: &BTreeMap<Category, BTreeSet<String>>,
    control_ids: &BTreeSet<String>,
) -> (Vec<GapCell<T>>, Vec<Diagnostic>) {
    let mut vmwe: BTreeMap<CellKey, Vec<T>> = BTreeMap::new();
    let mut control: BTreeMap<CellKey, Vec<T>> = BTreeMap::new();
    for score in z {
        for (category, ids) in vmwe_ids {
            let key = CellKey::new(*category, &score.system_id, target_lang);
            if ids.contains(&score.sentence_id) {
                vmwe.entry(key.clone()).or_default().push(score.z);
            }
            if control_ids.contains(&score.sentence_id) {
                control.entry(key).or_default().push(score.z);
            }
        }
    }
    gap_table(&vmwe, &control, DA_Z_METRIC, Orientation::HigherBetter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one(v: Vec<f64>, c: Vec<f64>, o: Orientation) -> (Vec<GapCell<f64>>, Vec<Diagnostic>) {
        let key = CellKey::new(Category::Vid, "sys", Lang::De);
        gap_table(&BTreeMap::from([(key.clone(), v)]), &BTreeMap::from([(key, c)]), "m", o)
    }

    #[test]
    fn lower_better_gap() {
        let (cells, _) = one(vec![7.0, 9.0], vec![6.0], Orientation::LowerBetter);
        assert_abs_diff_eq!(cells[0].gap, 2.0);
        assert_eq!((cells[0].n_vmwe, cells[0].n_control), (2, 1));
    }

    #[test]
    fn higher_better_gap() {
        let (cells, _) = one(vec![0.70], vec![0.75], Orientation::HigherBetter);
        assert_abs_diff_eq!(cells[0].gap, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn identical_distributions() {
        let (cells, _) = one(vec![1.0, 2.0], vec![2.0, 1.0], Orientation::LowerBetter);
        assert_eq!(cells[0].gap, 0.0);
    }

    #[test]
    fn empty_side_is_omitted() {
        let (cells, diags) = one(vec![1.0], vec![], Orientation::LowerBetter);
        assert!(cells.is_empty());
        assert_eq!(diags.len(), 1);
    }

    fn z(system: &str, sentence: &str, z: f64) -> ZScore<f64> {
        ZScore {
            annotator_id: "a".into(),
            system_id: system.into(),
            sentence_id: sentence.into(),
            z,
        }
    }

    #[test]
    fn z_gaps() {
        let ids = BTreeMap::from([(Category::Vid, BTreeSet::from(["v1".to_string(), "v2".to_string()]))]);
        let control = BTreeSet::from(["c1".to_string()]);
        let scores = [z("s", "v1", -0.5), z("s", "v2", 0.1), z("s", "c1", 0.4), z("s", "x", 9.0)];
        let (cells, _) = z_gap_table(&scores, Lang::Zh, &ids, &control);
        assert_eq!(cells.len(), 1);
        assert_abs_diff_eq!(cells[0].gap, 0.6, epsilon = 1e-12);
        assert_eq!(cells[0].metric_id, DA_Z_METRIC);

        let same = [z("s", "v1", 0.2), z("s", "c1", 0.2)];
        assert_eq!(z_gap_table(&same, Lang::Zh, &ids, &control).0[0].gap, 0.0);

        let better = [z("s", "v1", 1.0), z("s", "c1", 0.0)];
        assert!(z_gap_table(&better, Lang::Zh, &ids, &control).0[0].gap < 0.0);
    }
}
