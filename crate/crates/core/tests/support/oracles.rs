//! Reference implementations shared by integration and acceptance tests.
//! Deliberately naive: nested loops, no hashing, products instead of logs.
#![allow(dead_code)]

/// Sentence BLEU-4 with the smoothing and brevity rules the crate uses.
pub fn bleu_oracle(hyp: &[u32], reference: &[u32]) -> f64 {
    let orders = hyp.len().min(4);
    let mut product = 1.0;
    for n in 1..=orders {
        let total = hyp.len() - n + 1;
        let mut matched = 0;
        for i in 0..total {
            let gram = &hyp[i..i + n];
            // count each distinct gram once, at its first position
            if (0..i).any(|j| &hyp[j..j + n] == gram) {
                continue;
            }
            let in_hyp = (0..total).filter(|&j| &hyp[j..j + n] == gram).count();
            let in_ref = if reference.len() >= n {
                (0..=reference.len() - n).filter(|&j| &reference[j..j + n] == gram).count()
            } else {
                0
            };
            matched += in_hyp.min(in_ref);
        }
        let p = if matched > 0 {
            matched as f64 / total as f64
        } else if n == 1 {
            return 0.0;
        } else {
            1.0 / (2.0 * total as f64)
        };
        product *= p;
    }
    let geo = product.powf(1.0 / orders as f64);
    let bp = if hyp.len() < reference.len() {
        (1.0 - reference.len() as f64 / hyp.len() as f64).exp()
    } else {
        1.0
    };
    geo * bp
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// F1 from raw counts of one class.
pub fn f1_oracle(tp: u64, fn_: u64, fp: u64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fn_ + fp) as f64
}
