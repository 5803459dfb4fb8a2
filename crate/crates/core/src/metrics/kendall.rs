use std::collections::HashMap;
use std::hash::Hash;

use super::MetricError;

/// Kendall tau-a between two rankings of the same distinct items. Discordant
/// pairs are counted as inversions with a merge sort, O(n log n).
pub fn kendall_tau<T: Eq + Hash>(rank_a: &[T], rank_b: &[T]) -> Result<f64, MetricError> {
    let n = rank_a.len();
    if n != rank_b.len() {
        return Err(MetricError::ItemSetMismatch);
    }
    let position: HashMap<&T, usize> = rank_b.iter().enumerate().map(|(i, t)| (t, i)).collect();
    if position.len() != n {
        return Err(MetricError::ItemSetMismatch);
    }
    let mut seq = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for item in rank_a {
        let &p = position.get(item).ok_or(MetricError::ItemSetMismatch)?;
        if std::mem::replace(&mut seen[p], true) {
            return Err(MetricError::ItemSetMismatch);
        }
        seq.push(p);
    }
    if n < 2 {
        return Err(MetricError::TooFewItems(n));
    }
    let discordant = inversions(&mut seq) as f64;
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((pairs - 2.0 * discordant) / pairs)
}

fn inversions(seq: &mut [usize]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = inversions(&mut seq[..mid]) + inversions(&mut seq[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            merged.push(seq[i]);
            i += 1;
        } else {
            merged.push(seq[j]);
            count += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&seq[i..mid]);
    merged.extend_from_slice(&seq[j..]);
    seq.copy_from_slice(&merged);
    count
}
