use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::Real;

/// Binary confusion matrix; the positive class is "contains a VMWE".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self {
            true_pos: tp,
            false_neg: fn_,
            false_pos: fp,
            true_neg: tn,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    /// Record one (gold, predicted) pair.
    pub fn observe(&mut self, gold: bool, predicted: bool) {
        match (gold, predicted) {
            (true, true) => self.true_pos += 1,
            (true, false) => self.false_neg += 1,
            (false, true) => self.false_pos += 1,
            (false, false) => self.true_neg += 1,
        }
    }

    /// The same matrix with the negative class treated as positive.
    pub fn swapped(&self) -> Self {
        Self::new(self.true_neg, self.false_pos, self.false_neg, self.true_pos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBlock<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

/// Per-class and aggregate classifier metrics, stored as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<T> {
    pub accuracy: T,
    pub macro_f1: T,
    pub positive: ClassBlock<T>,
    pub negative: ClassBlock<T>,
}

fn ratio<T: Real>(num: u64, den: u64) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_u64(num).unwrap() / T::from_u64(den).unwrap()
    }
}

fn block<T: Real>(hit: u64, missed: u64, spurious: u64) -> ClassBlock<T> {
    let precision: T = ratio(hit, hit + spurious);
    let recall: T = ratio(hit, hit + missed);
    let f1 = if precision + recall > T::zero() {
        T::of(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    ClassBlock {
        precision,
        recall,
        f1,
    }
}

pub fn confusion_metrics<T: Real>(m: &ConfusionMatrix) -> Result<ClassMetrics<T>, StatsError> {
    let total = m.total();
    if total == 0 {
        return Err(StatsError::EmptyConfusionMatrix);
    }
    let positive = block(m.true_pos, m.false_neg, m.false_pos);
    let negative = block(m.true_neg, m.false_pos, m.false_neg);
    Ok(ClassMetrics {
        accuracy: ratio(m.true_pos + m.true_neg, total),
        macro_f1: (positive.f1 + negative.f1) / T::of(2.0),
        positive,
        negative,
    })
}

/// Fraction rendered as a percentage with one decimal, e.g. `0.805 -> "80.5"`.
pub fn percent<T: Real>(x: T) -> String {
    format!("{:.1}", x.as_f64() * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: ConfusionMatrix) -> Vec<String> {
        let r: ClassMetrics<f64> = confusion_metrics(&m).unwrap();
        [
            r.accuracy,
            r.macro_f1,
            r.positive.precision,
            r.positive.recall,
            r.positive.f1,
            r.negative.precision,
            r.negative.recall,
            r.negative.f1,
        ]
        .iter()
        .map(|&x| percent(x))
        .collect()
    }

    #[test]
    fn vid_matrix_against_closed_forms() {
        // f1 = 2tp / (2tp + fn + fp)
        let r: ClassMetrics<f64> = confusion_metrics(&ConfusionMatrix::new(88, 12, 27, 73)).unwrap();
        assert!((r.positive.f1 - 176.0 / 215.0).abs() < 1e-15);
        assert!((r.negative.f1 - 146.0 / 185.0).abs() < 1e-15);
        assert!((r.macro_f1 - (176.0 / 215.0 + 146.0 / 185.0) / 2.0).abs() < 1e-15);
        assert_eq!(
            row(ConfusionMatrix::new(88, 12, 27, 73)),
            ["80.5", "80.4", "76.5", "88.0", "81.9", "85.9", "73.0", "78.9"]
        );
    }

    #[test]
    fn lvc_matrix_against_closed_forms() {
        assert_eq!(
            row(ConfusionMatrix::new(89, 11, 29, 71)),
            ["80.0", "79.8", "75.4", "89.0", "81.7", "86.6", "71.0", "78.0"]
        );
    }

    #[test]
    fn vpc_row() {
        assert_eq!(
            row(ConfusionMatrix::new(70, 30, 5, 95)),
            ["82.5", "82.2", "93.3", "70.0", "80.0", "76.0", "95.0", "84.4"]
        );
    }

    #[test]
    fn perfect_matrix() {
        let r: ClassMetrics<f64> = confusion_metrics(&ConfusionMatrix::new(5, 0, 0, 7)).unwrap();
        for x in [
            r.accuracy,
            r.macro_f1,
            r.positive.precision,
            r.positive.recall,
            r.positive.f1,
            r.negative.precision,
            r.negative.recall,
            r.negative.f1,
        ] {
            assert_eq!(x, 1.0);
        }
    }

    #[test]
    fn empty_matrix_is_an_error() {
        assert_eq!(
            confusion_metrics::<f64>(&ConfusionMatrix::default()),
            Err(StatsError::EmptyConfusionMatrix)
        );
    }

    #[test]
    fn zero_denominators_are_zero() {
        // no predicted positives: positive precision is 0/0
        let r: ClassMetrics<f64> = confusion_metrics(&ConfusionMatrix::new(0, 4, 0, 6)).unwrap();
        assert_eq!(r.positive.precision, 0.0);
        assert_eq!(r.positive.f1, 0.0);
        assert_eq!(r.negative.recall, 1.0);
    }
}
