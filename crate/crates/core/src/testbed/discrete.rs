//! Models with finite input and output supports, whose sensitivity
//! quantities are computed exactly by enumeration.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimators::InputKernel;
use crate::kernel::{KernelSpec, PreparedKernel};
use crate::subset::{ClosedValueTable, ConditionalLaw, Subset};
use crate::value::OutputValue;

/// Limit on (input atom, output value) pairs.
pub const MAX_STATES: usize = 10_000;

/// A joint law over input atoms with a conditional output law per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEnumerable {
    d: usize,
    /// Input atoms with their probabilities.
    atoms: Vec<(Vec<f64>, f64)>,
    /// Distinct output values.
    support: Vec<OutputValue>,
    /// `laws[s][k] = P(Y = support[k] | X = atom s)`.
    laws: Vec<Vec<f64>>,
}

/// Exactly enumerable quantity of a subset.
#[derive(Debug, Clone)]
pub enum Quantity<'a> {
    /// `Var E(Y | X_A)` for scalar outputs.
    SobolClosed,
    /// `E_{X_A} MMD²(P_Y, P_{Y|X_A})`.
    MmdClosed(&'a KernelSpec),
    /// `E_{X_{-A}}[E k(Y, Y) - E k(Y, Y') | X_{-A}]`.
    ComplementaryClosed(&'a KernelSpec),
    /// `E[(prod_{l in A}(1 + k_l(X_l, X'_l)) - 1) k(Y, Y')]` over independent
    /// copies of `(X, Y)`.
    HsicClosed(&'a [InputKernel], &'a KernelSpec),
    /// Same with the pure product `prod_{l in A} k_l`.
    HsicPure(&'a [InputKernel], &'a KernelSpec),
}

fn key(x: &[f64], a: Subset) -> Vec<u64> {
    a.indices().iter().map(|l| x[*l].to_bits()).collect()
}

impl DiscreteEnumerable {
    /// `atoms[s] = (x, p, law)` where `law` lists `(y, P(y | x))`.
    pub fn new(atoms: Vec<(Vec<f64>, f64, Vec<(OutputValue, f64)>)>) -> Result<Self> {
        let d = atoms.first().map(|a| a.0.len()).unwrap_or(0);
        if d == 0 {
            return Err(Error::invalid("no input atoms"));
        }
        let states: usize = atoms.iter().map(|a| a.2.len()).sum();
        if states > MAX_STATES {
            return Err(Error::SupportTooLarge {
                states,
                limit: MAX_STATES,
            });
        }
        let psum: f64 = atoms.iter().map(|a| a.1).sum();
        if (psum - 1.0).abs() > 1e-12 || atoms.iter().any(|a| a.1 < 0.0) {
            return Err(Error::invalid(format!("atom probabilities sum to {psum}")));
        }
        let mut support: Vec<OutputValue> = Vec::new();
        let mut laws = Vec::with_capacity(atoms.len());
        let mut xs = Vec::with_capacity(atoms.len());
        for (x, p, law) in atoms {
            if x.len() != d {
                return Err(Error::invalid("atoms have different dimensions"));
            }
            let lsum: f64 = law.iter().map(|(_, q)| q).sum();
            if (lsum - 1.0).abs() > 1e-12 || law.iter().any(|(_, q)| *q < 0.0) {
                return Err(Error::invalid(format!("conditional output law sums to {lsum}")));
            }
            let mut row = vec![0.0; support.len()];
            for (y, q) in law {
                let k = match support.iter().position(|s| *s == y) {
                    Some(k) => k,
                    None => {
                        if !support.is_empty() && !support[0].same_kind(&y) {
                            return Err(Error::invalid("output values of mixed kinds"));
                        }
                        support.push(y);
                        row.push(0.0);
                        support.len() - 1
                    }
                };
                row[k] += q;
            }
            laws.push(row);
            xs.push((x, p));
        }
        for row in &mut laws {
            row.resize(support.len(), 0.0);
        }
        Ok(DiscreteEnumerable {
            d,
            atoms: xs,
            support,
            laws,
        })
    }

    /// Independent inputs with the given `(value, probability)` supports and
    /// an output law for every input combination.
    pub fn independent(
        supports: &[Vec<(f64, f64)>],
        law: impl Fn(&[f64]) -> Vec<(OutputValue, f64)>,
    ) -> Result<Self> {
        let mut atoms: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
        for s in supports {
            atoms = atoms
                .iter()
                .flat_map(|(x, p)| {
                    s.iter().map(move |(v, q)| {
                        let mut x = x.clone();
                        x.push(*v);
                        (x, p * q)
                    })
                })
                .collect();
        }
        DiscreteEnumerable::new(
            atoms
                .into_iter()
                .map(|(x, p)| {
                    let l = law(&x);
                    (x, p, l)
                })
                .collect(),
        )
    }

    /// Deterministic output `y = f(x)`.
    pub fn deterministic(supports: &[Vec<(f64, f64)>], f: impl Fn(&[f64]) -> OutputValue) -> Result<Self> {
        DiscreteEnumerable::independent(supports, |x| vec![(f(x), 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.atoms.iter().map(|(x, p)| (x.as_slice(), *p))
    }

    pub fn support(&self) -> &[OutputValue] {
        &self.support
    }

    /// Groups of atoms sharing the coordinates of `A`: weight and mixed
    /// output law per group.
    fn groups(&self, a: Subset) -> Vec<(f64, Vec<f64>)> {
        let mut g: BTreeMap<Vec<u64>, (f64, Vec<f64>)> = BTreeMap::new();
        for ((x, p), law) in self.atoms.iter().zip(&self.laws) {
            let e = g.entry(key(x, a)).or_insert_with(|| (0.0, vec![0.0; self.support.len()]));
            e.0 += p;
            for (acc, q) in e.1.iter_mut().zip(law) {
                *acc += p * q;
            }
        }
        g.into_values()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, mut law)| {
                for q in &mut law {
                    *q /= w;
                }
                (w, law)
            })
            .collect()
    }

    fn output_gram(&self, spec: &KernelSpec) -> Result<Vec<Vec<f64>>> {
        let k = PreparedKernel::new(spec)?;
        self.support
            .iter()
            .map(|a| self.support.iter().map(|b| k.eval(a, b)).collect())
            .collect()
    }

    fn bilinear(g: &[Vec<f64>], p: &[f64], q: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, pi) in p.iter().enumerate() {
            if *pi == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for (j, qj) in q.iter().enumerate() {
                row += g[i][j] * qj;
            }
            s += pi * row;
        }
        s
    }

    fn check_subset(&self, a: Subset) -> Result<()> {
        if u64::from(a.bits()) >= 1u64 << self.d {
            return Err(Error::invalid(format!("subset {a} exceeds dimension {}", self.d)));
        }
        Ok(())
    }

    /// Output law marginalized over the inputs.
    pub fn output_law(&self) -> Vec<f64> {
        self.groups(Subset::EMPTY).remove(0).1
    }

    /// Exact value of a quantity for subset `A`.
    pub fn enumerate(&self, q: &Quantity<'_>, a: Subset) -> Result<f64> {
        self.check_subset(a)?;
        match q {
            Quantity::SobolClosed => {
                let ys: Vec<f64> = self
                    .support
                    .iter()
                    .map(|y| y.as_scalar().ok_or_else(|| Error::invalid("Sobol values need scalar outputs")))
                    .collect::<Result<_>>()?;
                let groups = self.groups(a);
                let mean_of = |law: &[f64]| law.iter().zip(&ys).map(|(p, y)| p * y).sum::<f64>();
                let m = mean_of(&self.output_law());
                Ok(groups.iter().map(|(w, law)| w * (mean_of(law) - m).powi(2)).sum())
            }
            Quantity::MmdClosed(spec) => {
                let g = self.output_gram(spec)?;
                let all = self.output_law();
                let kk = Self::bilinear(&g, &all, &all);
                Ok(self
                    .groups(a)
                    .iter()
                    .map(|(w, law)| w * (Self::bilinear(&g, law, law) - 2.0 * Self::bilinear(&g, law, &all) + kk))
                    .sum())
            }
            Quantity::ComplementaryClosed(spec) => {
                let g = self.output_gram(spec)?;
                Ok(self
                    .groups(a.complement(self.d))
                    .iter()
                    .map(|(w, law)| {
                        let diag: f64 = law.iter().enumerate().map(|(k, p)| p * g[k][k]).sum();
                        w * (diag - Self::bilinear(&g, law, law))
                    })
                    .sum())
            }
            Quantity::HsicClosed(kernels, spec) => self.hsic(kernels, spec, a, true),
            Quantity::HsicPure(kernels, spec) => self.hsic(kernels, spec, a, false),
        }
    }

    fn hsic(&self, kernels: &[InputKernel], spec: &KernelSpec, a: Subset, closed: bool) -> Result<f64> {
        if kernels.len() != self.d {
            return Err(Error::invalid("one input kernel per input is required"));
        }
        if a.is_empty() {
            return Ok(0.0);
        }
        let g = self.output_gram(spec)?;
        let idx = a.indices();
        let grams = idx
            .iter()
            .map(|l| {
                let column: Vec<f64> = self.atoms.iter().map(|(x, _)| x[*l]).collect();
                kernels[*l].gram(&column)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = self.atoms.len();
        let mut total = 0.0;
        for s in 0..n {
            let ps = self.atoms[s].1;
            let mut row = 0.0;
            for t in 0..n {
                let kx = if closed {
                    grams.iter().map(|m| 1.0 + m.get(s, t)).product::<f64>() - 1.0
                } else {
                    grams.iter().map(|m| m.get(s, t)).product::<f64>()
                };
                row += self.atoms[t].1 * kx * Self::bilinear(&g, &self.laws[s], &self.laws[t]);
            }
            total += ps * row;
        }
        Ok(total)
    }

    /// Table of a quantity over all subsets; the total is `E k(Y,Y) -
    /// E k(Y,Y')` for MMD quantities, `Var Y` for Sobol and the full-set
    /// value for HSIC.
    pub fn table(&self, q: &Quantity<'_>) -> Result<ClosedValueTable> {
        let full = Subset::full(self.d);
        let total = match q {
            Quantity::SobolClosed => {
                let ys: Vec<f64> = self.support.iter().filter_map(OutputValue::as_scalar).collect();
                if ys.len() != self.support.len() {
                    return Err(Error::invalid("Sobol values need scalar outputs"));
                }
                let law = self.output_law();
                let m: f64 = law.iter().zip(&ys).map(|(p, y)| p * y).sum();
                law.iter().zip(&ys).map(|(p, y)| p * (y - m).powi(2)).sum()
            }
            Quantity::MmdClosed(spec) | Quantity::ComplementaryClosed(spec) => self.total_mmd(spec)?,
            Quantity::HsicClosed(..) | Quantity::HsicPure(..) => self.enumerate(q, full)?,
        };
        let mut t = ClosedValueTable::new(self.d, total)?;
        for a in Subset::all(self.d) {
            t.set(a, self.enumerate(q, a)?);
        }
        Ok(t)
    }

    /// `E k(Y, Y) - E k(Y, Y')`.
    pub fn total_mmd(&self, spec: &KernelSpec) -> Result<f64> {
        let g = self.output_gram(spec)?;
        let law = self.output_law();
        let diag: f64 = law.iter().enumerate().map(|(k, p)| p * g[k][k]).sum();
        Ok(diag - Self::bilinear(&g, &law, &law))
    }

    /// Conditional categorical laws given `X_A`, for the one-vs-all index.
    pub fn conditional_laws(&self, a: Subset, num_levels: u32) -> Result<Vec<ConditionalLaw>> {
        self.check_subset(a)?;
        let mut levels = Vec::with_capacity(self.support.len());
        for y in &self.support {
            match y {
                OutputValue::Categorical { level } if *level < num_levels => levels.push(*level as usize),
                _ => return Err(Error::invalid("conditional laws need categorical outputs within range")),
            }
        }
        Ok(self
            .groups(a)
            .into_iter()
            .map(|(w, law)| {
                let mut probs = vec![0.0; num_levels as usize];
                for (k, p) in law.iter().enumerate() {
                    probs[levels[k]] += p;
                }
                // renormalizing a group law can overshoot 1 by rounding
                for p in &mut probs {
                    *p = p.min(1.0);
                }
                ConditionalLaw { weight: w, probs }
            })
            .collect())
    }

    /// Output-kernel expectation between the conditional laws of two atoms,
    /// `E k(Y_s, Y_t)`, as a matrix over atoms.
    pub fn atom_output_gram(&self, spec: &KernelSpec) -> Result<Vec<Vec<f64>>> {
        let g = self.output_gram(spec)?;
        Ok(self
            .laws
            .iter()
            .map(|p| self.laws.iter().map(|q| Self::bilinear(&g, p, q)).collect())
            .collect())
    }
}
