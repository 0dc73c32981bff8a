//! BLEU-4 against a brute-force reference implementation.

mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::oracles::bleu_oracle;
use vmwe_core::stats::{bleu4, StatsError};

fn random_list(rng: &mut ChaCha8Rng, max_len: usize, vocab: u32) -> Vec<u32> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| rng.random_range(0..vocab)).collect()
}

#[test]
fn random_pairs_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5000 {
        let h = random_list(&mut rng, 8, 5);
        let r = random_list(&mut rng, 8, 5);
        let got: f64 = bleu4(&h, &r).unwrap();
        let want = bleu_oracle(&h, &r);
        assert!((got - want).abs() <= 1e-9, "{h:?} vs {r:?}: {got} != {want}");
    }
}

#[test]
fn larger_vocab_and_lengths_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let h = random_list(&mut rng, 15, 12);
        let r = random_list(&mut rng, 15, 12);
        let got: f64 = bleu4(&h, &r).unwrap();
        assert!((got - bleu_oracle(&h, &r)).abs() <= 1e-9);
    }
}

#[test]
fn f32_agrees_with_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let h = random_list(&mut rng, 8, 5);
        let r = random_list(&mut rng, 8, 5);
        let a: f32 = bleu4(&h, &r).unwrap();
        let b: f64 = bleu4(&h, &r).unwrap();
        assert!((a as f64 - b).abs() < 1e-5);
    }
}

#[test]
fn empty_inputs_are_errors() {
    let e: &[u32] = &[];
    assert_eq!(bleu4::<f64, u32>(e, &[1]), Err(StatsError::EmptyInput("hypothesis")));
    assert_eq!(bleu4::<f64, u32>(&[1], e), Err(StatsError::EmptyInput("reference")));
}

#[test]
fn single_token_hypothesis_uses_unigrams_only() {
    // orders stop at hypothesis length; brevity exp(1 - 3/1)
    let got: f64 = bleu4(&[1u32], &[1, 2, 3]).unwrap();
    assert!((got - (-2.0f64).exp()).abs() < 1e-12);
}

#[test]
fn no_shared_unigram_is_zero() {
    assert_eq!(bleu4::<f64, u32>(&[1, 2, 3, 4], &[5, 6, 7, 8]).unwrap(), 0.0);
}

#[test]
fn smoothed_higher_orders() {
    // unigrams 2/2, bigram 0 of 1 -> 1/2: sqrt(1 * 0.5)
    let got: f64 = bleu4(&[1u32, 2], &[2, 1]).unwrap();
    assert!((got - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn longer_hypothesis_has_no_brevity_penalty() {
    let got: f64 = bleu4(&[1u32, 2, 3, 9], &[1, 2, 3]).unwrap();
    assert!((got - bleu_oracle(&[1, 2, 3, 9], &[1, 2, 3])).abs() < 1e-12);
    assert!(got < 1.0 && got > 0.0);
}

#[test]
fn scores_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let h = random_list(&mut rng, 10, 4);
        let r = random_list(&mut rng, 10, 4);
        let s: f64 = bleu4(&h, &r).unwrap();
        assert!((0.0..=1.0).contains(&s));
    }
}
