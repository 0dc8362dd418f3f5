use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, KernelSpec};
use crate::value::SampleSet;

/// Successor-in-rank permutation: `N(i)` is the index whose value ranks
/// immediately above that of `i`, wrapping from the largest to the
/// smallest. Ties are ranked by original index. Indices are 0-based.
pub fn rank_permutation(values: &[f64]) -> Result<Vec<usize>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid("rank permutation needs at least two values"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut next = vec![0; n];
    for r in 0..n {
        next[order[r]] = order[(r + 1) % n];
    }
    Ok(next)
}

/// Rank estimator of `E MMD²(P_Y, P_{Y|X_l})` from a precomputed output
/// Gram matrix and the input column.
pub fn rank_mmd_gram(gram: &GramMatrix, column: &[f64]) -> Result<f64> {
    if column.len() != gram.n {
        return Err(Error::invalid("input column and Gram matrix sizes differ"));
    }
    let next = rank_permutation(column)?;
    let paired: f64 = next.iter().enumerate().map(|(i, j)| gram.get(i, *j)).sum();
    Ok(paired / gram.n as f64 - gram.mean())
}

pub fn rank_mmd(sample: &SampleSet, l: usize, spec: &KernelSpec) -> Result<f64> {
    if l >= sample.dim() {
        return Err(Error::invalid(format!("input {l} out of range")));
    }
    let g = crate::kernel::gram(spec, &sample.outputs)?;
    rank_mmd_gram(&g, &sample.column(l))
}
