//! Bernoulli polynomials and the Sobolev kernel of zero-mean functions on [0, 1].

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 3;

/// Bernoulli polynomial `B_j(x)` for `j <= 6`.
pub fn bernoulli(j: u32, x: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => x - 0.5,
        2 => x * x - x + 1.0 / 6.0,
        3 => x * (x * (x - 1.5) + 0.5),
        4 => x * x * (x * (x - 2.0) + 1.0) - 1.0 / 30.0,
        5 => x * (x * x * (x * (x - 2.5) + 5.0 / 3.0) - 1.0 / 6.0),
        6 => x * x * (x * x * (x * (x - 3.0) + 2.5) - 0.5) + 1.0 / 42.0,
        _ => panic!("Bernoulli polynomials are tabulated up to degree 6"),
    }
}

const FACTORIAL: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn check_order(r: u32) -> Result<()> {
    if r == 0 || r > MAX_ORDER {
        return Err(Error::Unsupported(format!(
            "Sobolev kernel of order {r}; supported orders are 1..={MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Sobolev kernel of order `r` on [0, 1]. Integrates to zero against the
/// uniform law in either argument.
pub fn sobolev_kernel(r: u32, x: f64, x2: f64) -> Result<f64> {
    check_order(r)?;
    check_unit(x)?;
    check_unit(x2)?;
    Ok(sobolev_unchecked(r, x, x2))
}

pub(crate) fn sobolev_unchecked(r: u32, x: f64, x2: f64) -> f64 {
    let two_r = 2 * r;
    let sign = if r % 2 == 1 { 1.0 } else { -1.0 }; // (-1)^{r+1}
    let mut k = bernoulli(two_r, (x - x2).abs()) / (sign * FACTORIAL[two_r as usize]);
    for j in 1..=r {
        let f = FACTORIAL[j as usize];
        k += bernoulli(j, x) * bernoulli(j, x2) / (f * f);
    }
    k
}
