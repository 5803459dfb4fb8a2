use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::memory::tokenize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Longest common subsequence length, bit-parallel over `b`'s positions
/// (one machine word per 64 tokens of `b`).
pub fn lcs_len<T: Eq + Hash>(a: &[T], b: &[T]) -> usize {
    let m = b.len();
    if m == 0 || a.is_empty() {
        return 0;
    }
    let words = m.div_ceil(64);
    let mut masks: HashMap<&T, Vec<u64>> = HashMap::new();
    for (i, token) in b.iter().enumerate() {
        masks.entry(token).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    let mut v = vec![u64::MAX; words];
    for token in a {
        let Some(mask) = masks.get(token) else {
            continue;
        };
        let mut carry = 0u64;
        for w in 0..words {
            let u = v[w] & mask[w];
            let (sum, c1) = v[w].overflowing_add(u);
            let (sum, c2) = sum.overflowing_add(carry);
            carry = u64::from(c1 || c2);
            v[w] = sum | (v[w] & !mask[w]);
        }
    }
    let mut zeros = 0;
    for (w, word) in v.iter().enumerate() {
        let bits = if w + 1 == words && !m.is_multiple_of(64) { m % 64 } else { 64 };
        let live = if bits == 64 { *word } else { *word | (u64::MAX << bits) };
        zeros += live.count_zeros() as usize;
    }
    zeros
}

/// Rouge-L over pre-tokenized sequences.
pub fn rouge_l<T: Eq + Hash>(candidate: &[T], reference: &[T]) -> RougeScore {
    let l = lcs_len(candidate, reference) as f64;
    let ratio = |len: usize| if len == 0 { 0.0 } else { l / len as f64 };
    let precision = ratio(candidate.len());
    let recall = ratio(reference.len());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RougeScore {
        precision,
        recall,
        f1,
    }
}

/// Rouge-L under the shared whitespace/CJK tokenization.
pub fn rouge_l_text(candidate: &str, reference: &str) -> RougeScore {
    rouge_l(&tokenize(candidate), &tokenize(reference))
}
