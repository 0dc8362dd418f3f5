//! Kernels between empirical distributions given as bags of scalar draws.

use super::scalar::ScalarKernel;

/// `(1 / (|a| |b|)) sum_i sum_j k(a_i, b_j)`.
pub(crate) fn cross_mean(k: &ScalarKernel, a: &[f64], b: &[f64]) -> f64 {
    match k {
        // The Gaussian case dominates run time, keep it branch-free.
        ScalarKernel::Gaussian { inv_two_sigma2, .. } => {
            let c = *inv_two_sigma2;
            let mut total = 0.0;
            for x in a {
                let mut row = 0.0;
                for y in b {
                    let d = x - y;
                    row += (-d * d * c).exp();
                }
                total += row;
            }
            total / (a.len() * b.len()) as f64
        }
        _ => {
            let mut total = 0.0;
            for x in a {
                let mut row = 0.0;
                for y in b {
                    row += k.value(*x, *y);
                }
                total += row;
            }
            total / (a.len() * b.len()) as f64
        }
    }
}

/// V-statistic MMD² between two bags, given their cached self terms.
pub(crate) fn bag_mmd2(k: &ScalarKernel, a: &[f64], self_a: f64, b: &[f64], self_b: f64) -> f64 {
    // cross_mean(a, b) and cross_mean(b, a) sum in different orders, so use
    // a canonical argument order to keep the kernel exactly symmetric.
    let cross = if canonical_first(a, b) {
        cross_mean(k, a, b)
    } else {
        cross_mean(k, b, a)
    };
    self_a + self_b - 2.0 * cross
}

pub(crate) fn canonical_first(a: &[f64], b: &[f64]) -> bool {
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (x, y) in a.iter().zip(b) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    std::cmp::Ordering::Equal => {}
                }
            }
            true
        }
    }
}

/// Squared 2-Wasserstein distance between two sorted bags, by the
/// monotone quantile coupling.
pub fn wasserstein2_sq_sorted(a: &[f64], b: &[f64]) -> f64 {
    if canonical_first(a, b) {
        w2_merge(a, b)
    } else {
        w2_merge(b, a)
    }
}

fn w2_merge(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len(), b.len());
    if na == nb {
        return a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / na as f64;
    }
    // Walk the union of quantile breakpoints i/na and j/nb using integer
    // arithmetic on the common denominator na*nb.
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0usize;
    let mut total = 0.0;
    let denom = (na * nb) as f64;
    while i < na && j < nb {
        let next_a = (i + 1) * nb;
        let next_b = (j + 1) * na;
        let next = next_a.min(next_b);
        let d = a[i] - b[j];
        total += (next - pos) as f64 * d * d;
        pos = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    total / denom
}

pub fn wasserstein2_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    wasserstein2_sq_sorted(&a, &b)
}
