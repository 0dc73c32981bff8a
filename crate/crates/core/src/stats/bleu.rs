use std::collections::HashMap;
use std::hash::Hash;

use super::StatsError;
use crate::Real;

const MAX_ORDER: usize = 4;

/// Sentence-level BLEU-4 of `hypothesis` against a single `reference`.
///
/// Uniform weights over orders `1..=min(4, hyp_len)`. A zero count at order
/// `n >= 2` is replaced by `1 / (2 * hyp_ngrams_n)`; a zero unigram count
/// makes the whole score 0. Brevity penalty `exp(1 - ref_len / hyp_len)`
/// applies when the hypothesis is shorter than the reference.
pub fn bleu4<T: Real, S: Eq + Hash>(hypothesis: &[S], reference: &[S]) -> Result<T, StatsError> {
    if hypothesis.is_empty() {
        return Err(StatsError::EmptyInput("hypothesis"));
    }
    if reference.is_empty() {
        return Err(StatsError::EmptyInput("reference"));
    }

    let orders = hypothesis.len().min(MAX_ORDER);
    let mut log_sum = T::zero();
    for n in 1..=orders {
        let total = hypothesis.len() - n + 1;
        let matched = clipped_matches(hypothesis, reference, n);
        let precision = if matched > 0 {
            T::from_count(matched) / T::from_count(total)
        } else if n == 1 {
            return Ok(T::zero());
        } else {
            T::one() / T::from_count(2 * total)
        };
        log_sum = log_sum + precision.ln();
    }
    let geo_mean = (log_sum / T::from_count(orders)).exp();

    let hyp_len = T::from_count(hypothesis.len());
    let ref_len = T::from_count(reference.len());
    let brevity = if hypothesis.len() < reference.len() {
        (T::one() - ref_len / hyp_len).exp()
    } else {
        T::one()
    };
    Ok((geo_mean * brevity).min(T::one()))
}

fn ngram_counts<S: Eq + Hash>(tokens: &[S], n: usize) -> HashMap<&[S], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn clipped_matches<S: Eq + Hash>(hypothesis: &[S], reference: &[S], n: usize) -> usize {
    if reference.len() < n {
        return 0;
    }
    let reference_counts = ngram_counts(reference, n);
    ngram_counts(hypothesis, n)
        .into_iter()
        .map(|(gram, c)| c.min(reference_counts.get(gram).copied().unwrap_or(0)))
        .sum()
}
