use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::marginal::MarginalDist;
use crate::subset::Subset;

/// Joint law of the inputs.
#[derive(Debug, Clone)]
pub enum InputSampler {
    Independent(Vec<MarginalDist>),
    GaussianCopula(GaussianCopula),
}

/// Gaussian copula: latent `Z ~ N(0, R)`, `X_l = F_l^{-1}(Phi(Z_l))`.
#[derive(Debug, Clone)]
pub struct GaussianCopula {
    corr: DMatrix<f64>,
    chol: DMatrix<f64>,
    marginals: Vec<MarginalDist>,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn probit(u: f64) -> f64 {
    std_normal().inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15))
}

/// Lower Cholesky factor of a PSD matrix, with a tiny diagonal jitter for
/// singular but valid matrices.
fn psd_factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c.l());
    }
    let scale = m.diagonal().max().max(1e-300);
    let mut j = m.clone();
    for i in 0..j.nrows() {
        j[(i, i)] += 1e-12 * scale;
    }
    Cholesky::new(j).map(|c| c.l())
}

impl GaussianCopula {
    pub fn new(corr: Vec<Vec<f64>>, marginals: Vec<MarginalDist>) -> Result<Self> {
        let d = marginals.len();
        if corr.len() != d || corr.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(format!("correlation matrix must be {d}x{d}")));
        }
        for m in &marginals {
            m.validate()?;
        }
        let corr = DMatrix::from_fn(d, d, |i, j| corr[i][j]);
        for i in 0..d {
            if (corr[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("correlation matrix needs a unit diagonal"));
            }
            for j in 0..i {
                if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("correlation matrix is not symmetric"));
                }
            }
        }
        let chol = Cholesky::new(corr.clone())
            .ok_or_else(|| Error::NotPsd("Cholesky factorization of the correlation matrix failed".into()))?
            .l();
        Ok(GaussianCopula { corr, chol, marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.corr
    }

    fn latent<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let eps = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.chol * eps
    }

    fn to_inputs(&self, z: &DVector<f64>) -> Vec<f64> {
        let n = std_normal();
        z.iter()
            .zip(&self.marginals)
            .map(|(z, m)| m.quantile(n.cdf(*z)))
            .collect()
    }

    /// Latent score of an observed input value.
    pub fn latent_score(&self, l: usize, x: f64) -> f64 {
        probit(self.marginals[l].cdf(x))
    }
}

/// Sampler of `X_{-A}` given `X_A` for a fixed subset `A`.
#[derive(Debug, Clone)]
pub struct Conditional {
    d: usize,
    a: Vec<usize>,
    rest: Vec<usize>,
    kind: ConditionalKind,
}

#[derive(Debug, Clone)]
enum ConditionalKind {
    Independent(Vec<MarginalDist>),
    Copula {
        copula: GaussianCopula,
        /// `R_{-A,A} R_{AA}^{-1}`
        coef: DMatrix<f64>,
        chol: DMatrix<f64>,
    },
}

impl Conditional {
    /// Draw `n` full input vectors whose `A` coordinates equal `x_a`
    /// (given in ascending index order).
    pub fn sample<R: Rng + ?Sized>(&self, x_a: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if x_a.len() != self.a.len() {
            return Err(Error::invalid("conditioning values do not match the subset size"));
        }
        let mut base = vec![0.0; self.d];
        for (l, v) in self.a.iter().zip(x_a) {
            base[*l] = *v;
        }
        match &self.kind {
            ConditionalKind::Independent(m) => Ok((0..n)
                .map(|_| {
                    let mut x = base.clone();
                    for l in &self.rest {
                        x[*l] = m[*l].sample(rng);
                    }
                    x
                })
                .collect()),
            ConditionalKind::Copula { copula, coef, chol } => {
                let za = DVector::from_iterator(
                    self.a.len(),
                    self.a.iter().zip(x_a).map(|(l, v)| copula.latent_score(*l, *v)),
                );
                let mean = coef * za;
                let nrm = std_normal();
                Ok((0..n)
                    .map(|_| {
                        let eps = DVector::from_fn(self.rest.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                        let z = &mean + chol * eps;
                        let mut x = base.clone();
                        for (k, l) in self.rest.iter().enumerate() {
                            x[*l] = copula.marginals[*l].quantile(nrm.cdf(z[k]));
                        }
                        x
                    })
                    .collect())
            }
        }
    }
}

impl InputSampler {
    pub fn independent(marginals: Vec<MarginalDist>) -> Self {
        InputSampler::Independent(marginals)
    }

    pub fn gaussian_copula(corr: Vec<Vec<f64>>, marginals: Vec<MarginalDist>) -> Result<Self> {
        Ok(InputSampler::GaussianCopula(GaussianCopula::new(corr, marginals)?))
    }

    pub fn dim(&self) -> usize {
        self.marginals().len()
    }

    pub fn marginals(&self) -> &[MarginalDist] {
        match self {
            InputSampler::Independent(m) => m,
            InputSampler::GaussianCopula(c) => &c.marginals,
        }
    }

    pub fn is_independent(&self) -> bool {
        matches!(self, InputSampler::Independent(_))
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            InputSampler::Independent(m) => m.iter().map(|m| m.sample(rng)).collect(),
            InputSampler::GaussianCopula(c) => c.to_inputs(&c.latent(rng)),
        }
    }

    /// `n` i.i.d. input vectors, row-major.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Prepare the conditional law of `X_{-A}` given `X_A`.
    pub fn conditional(&self, a: Subset) -> Result<Conditional> {
        let d = self.dim();
        let idx = a.indices();
        if idx.iter().any(|l| *l >= d) {
            return Err(Error::invalid(format!("subset {a} exceeds dimension {d}")));
        }
        let rest = a.complement(d).indices();
        let kind = match self {
            InputSampler::Independent(m) => ConditionalKind::Independent(m.clone()),
            InputSampler::GaussianCopula(c) => {
                let r = &c.corr;
                let sub = |rows: &[usize], cols: &[usize]| {
                    DMatrix::from_fn(rows.len(), cols.len(), |i, j| r[(rows[i], cols[j])])
                };
                let raa = sub(&idx, &idx);
                let rba = sub(&rest, &idx);
                let rbb = sub(&rest, &rest);
                let coef = if idx.is_empty() {
                    DMatrix::zeros(rest.len(), 0)
                } else {
                    let inv = raa
                        .clone()
                        .try_inverse()
                        .ok_or_else(|| Error::NotPsd(format!("latent correlation of {a} is singular")))?;
                    &rba * inv
                };
                let cov = &rbb - &coef * rba.transpose();
                let chol = psd_factor(&cov)
                    .ok_or_else(|| Error::NotPsd(format!("conditional covariance given {a}")))?;
                ConditionalKind::Copula {
                    copula: c.clone(),
                    coef,
                    chol,
                }
            }
        };
        Ok(Conditional {
            d,
            a: idx,
            rest,
            kind,
        })
    }
}
