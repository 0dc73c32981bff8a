//! Closed-form statistics: sentence BLEU-4, per-annotator z-normalization,
//! confusion-matrix metrics and orientation-aware improvement deltas.

mod bleu;
mod metrics;
mod znorm;

pub use bleu::bleu4;
pub use metrics::{confusion_metrics, percent, ClassBlock, ClassMetrics, ConfusionMatrix};
pub use znorm::{znormalize, DaAnnotation, ZScore};

use thiserror::Error;

use crate::qe::QeScore;
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("confusion matrix has no observations")]
    EmptyConfusionMatrix,
    #[error("cannot compare scores of different orientation ({left} vs {right})")]
    OrientationMismatch { left: String, right: String },
}

/// Improvement of `other` over `ori`, signed so that a positive value always
/// means `other` is better under the shared metric orientation.
pub fn delta_improvement<T: Real>(ori: &QeScore<T>, other: &QeScore<T>) -> Result<T, StatsError> {
    if ori.orientation != other.orientation {
        return Err(StatsError::OrientationMismatch {
            left: ori.orientation.to_string(),
            right: other.orientation.to_string(),
        });
    }
    Ok(ori.orientation.improvement(ori.value, other.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qe::Orientation;
    use approx::assert_abs_diff_eq;

    fn lower(v: f64) -> QeScore<f64> {
        QeScore::new("metricx", Orientation::LowerBetter, v)
    }

    fn higher(v: f64) -> QeScore<f64> {
        QeScore::new("xcomet", Orientation::HigherBetter, v)
    }

    #[test]
    fn lower_better_delta_is_ori_minus_other() {
        let d = delta_improvement(&lower(7.25), &lower(5.48)).unwrap();
        assert_abs_diff_eq!(d, 1.77, epsilon = 1e-12);
    }

    #[test]
    fn higher_better_delta_is_other_minus_ori() {
        assert_eq!(delta_improvement(&higher(0.5), &higher(0.5)).unwrap(), 0.0);
        let d = delta_improvement(&higher(0.3555), &higher(0.5780)).unwrap();
        assert_abs_diff_eq!(d * 100.0, 22.25, epsilon = 1e-9);
    }

    #[test]
    fn mixed_orientation_is_rejected() {
        assert!(matches!(
            delta_improvement(&lower(1.0), &higher(0.5)),
            Err(StatsError::OrientationMismatch { .. })
        ));
    }

    #[test]
    fn delta_is_antisymmetric() {
        for (a, b) in [(7.25, 5.48), (0.1, 0.9), (3.0, 3.0)] {
            let ab = delta_improvement(&lower(a), &lower(b)).unwrap();
            let ba = delta_improvement(&lower(b), &lower(a)).unwrap();
            assert_eq!(ab, -ba);
            let ab = delta_improvement(&higher(a / 25.0), &higher(b / 25.0)).unwrap();
            let ba = delta_improvement(&higher(b / 25.0), &higher(a / 25.0)).unwrap();
            assert_eq!(ab, -ba);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let ori = QeScore::new("m", Orientation::LowerBetter, 7.25f32);
        let mix = QeScore::new("m", Orientation::LowerBetter, 5.48f32);
        assert!((delta_improvement(&ori, &mix).unwrap() - 1.77).abs() < 1e-5);
    }
}
