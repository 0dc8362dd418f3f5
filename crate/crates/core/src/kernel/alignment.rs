//! Global alignment kernel for time series.
//!
//! Sums the product of local similarities over every monotone alignment path
//! between two series. The local similarity is the Gaussian-derived
//! `g / (2 - g)` with `g = exp(-d^2 / (2 sigma^2))`, which keeps the
//! alignment sum positive definite. An optional triangular band restricts
//! paths to `|i - j| <= band` and down-weights cells by `1 - |i - j| / (band + 1)`.
//!
//! The dynamic program runs row by row with each row rescaled by its
//! maximum; the log of the scale factors is carried separately so long
//! series never underflow.

use super::distribution::canonical_first;
use crate::error::{Error, Result};

fn local_similarity(x: f64, y: f64, inv_two_sigma2: f64) -> f64 {
    let d = x - y;
    let g = (-d * d * inv_two_sigma2).exp();
    g / (2.0 - g)
}

/// Unnormalized log alignment sum, `log k(a, b)`.
pub fn log_alignment(a: &[f64], b: &[f64], inner_bandwidth: f64, band: Option<usize>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("alignment needs non-empty curves"));
    }
    if !(inner_bandwidth > 0.0) {
        return Err(Error::invalid(format!(
            "alignment bandwidth must be positive, got {inner_bandwidth}"
        )));
    }
    let (la, lb) = (a.len(), b.len());
    if let Some(t) = band {
        if t < la.abs_diff(lb) {
            return Err(Error::InfeasibleAlignment {
                band: t,
                len_a: la,
                len_b: lb,
            });
        }
    }
    let inv = 1.0 / (2.0 * inner_bandwidth * inner_bandwidth);
    let weight = |i: usize, j: usize| -> f64 {
        match band {
            None => 1.0,
            Some(t) => {
                let off = i.abs_diff(j);
                if off > t {
                    0.0
                } else {
                    1.0 - off as f64 / (t as f64 + 1.0)
                }
            }
        }
    };

    let mut prev = vec![0.0; lb];
    let mut cur = vec![0.0; lb];
    let mut log_scale = 0.0;
    for i in 0..la {
        let (lo, hi) = match band {
            None => (0, lb),
            Some(t) => (i.saturating_sub(t), (i + t + 1).min(lb)),
        };
        cur.iter_mut().for_each(|c| *c = 0.0);
        for j in lo..hi {
            let w = weight(i, j);
            if w == 0.0 {
                continue;
            }
            let incoming = if i == 0 && j == 0 {
                1.0
            } else {
                let up = if i > 0 { prev[j] } else { 0.0 };
                let left = if j > 0 { cur[j - 1] } else { 0.0 };
                let diag = if i > 0 && j > 0 { prev[j - 1] } else { 0.0 };
                up + left + diag
            };
            cur[j] = w * local_similarity(a[i], b[j], inv) * incoming;
        }
        let max = cur.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let inv_max = 1.0 / max;
        cur.iter_mut().for_each(|c| *c *= inv_max);
        log_scale += max.ln();
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(log_scale + prev[lb - 1].ln())
}

/// Normalized alignment kernel, `k(a, a) = 1`.
pub fn global_alignment_kernel(
    a: &[f64],
    b: &[f64],
    inner_bandwidth: f64,
    band: Option<usize>,
) -> Result<f64> {
    let laa = log_alignment(a, a, inner_bandwidth, band)?;
    let lbb = log_alignment(b, b, inner_bandwidth, band)?;
    let lab = if canonical_first(a, b) {
        log_alignment(a, b, inner_bandwidth, band)?
    } else {
        log_alignment(b, a, inner_bandwidth, band)?
    };
    Ok(normalize(lab, laa, lbb))
}

pub(crate) fn normalize(lab: f64, laa: f64, lbb: f64) -> f64 {
    (lab - 0.5 * (laa + lbb)).exp()
}
