use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::Real;

/// One human direct-assessment rating on the 0-100 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaAnnotation<T> {
    pub annotator_id: String,
    pub system_id: String,
    pub sentence_id: String,
    pub raw_score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore<T> {
    pub annotator_id: String,
    pub system_id: String,
    pub sentence_id: String,
    pub z: T,
}

/// Standardize each annotator's scores to mean 0 and population standard
/// deviation 1.
///
/// Annotators with fewer than two ratings, or with zero variance, get `z = 0`
/// on every record. Output order follows input order.
pub fn znormalize<T: Real>(annotations: &[DaAnnotation<T>]) -> Vec<ZScore<T>> {
    let mut groups: HashMap<&str, Vec<T>> = HashMap::new();
    for a in annotations {
        groups.entry(&a.annotator_id).or_default().push(a.raw_score);
    }

    let params: HashMap<&str, Option<(T, T)>> = groups
        .into_iter()
        .map(|(annotator, scores)| (annotator, mean_and_std(&scores)))
        .collect();

    annotations
        .iter()
        .map(|a| {
            let z = match params[a.annotator_id.as_str()] {
                Some((mean, std)) => (a.raw_score - mean) / std,
                None => T::zero(),
            };
            ZScore {
                annotator_id: a.annotator_id.clone(),
                system_id: a.system_id.clone(),
                sentence_id: a.sentence_id.clone(),
                z,
            }
        })
        .collect()
}

// None when the group cannot be standardized.
fn mean_and_std<T: Real>(scores: &[T]) -> Option<(T, T)> {
    if scores.len() < 2 {
        return None;
    }
    let n = T::from_count(scores.len());
    let mean = scores.iter().copied().sum::<T>() / n;
    let var = scores.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let std = var.sqrt();
    if std > T::zero() {
        Some((mean, std))
    } else {
        None
    }
}
