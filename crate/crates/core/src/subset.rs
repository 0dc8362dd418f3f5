//! Subsets of inputs, closed-value tables and their inclusion-exclusion
//! combination into sensitivity indices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for which all `2^d` subsets are enumerated.
pub const MAX_ENUM_DIM: usize = 24;

/// Set of input indices `0..d` as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(d: usize) -> Subset {
        assert!(d <= 31, "subset dimension {d} exceeds the bitmask width");
        Subset(((1u64 << d) - 1) as u32)
    }

    pub fn singleton(l: usize) -> Subset {
        Subset(1 << l)
    }

    pub fn from_indices(idx: &[usize]) -> Subset {
        Subset(idx.iter().fold(0, |b, l| b | (1 << l)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, l: usize) -> bool {
        self.0 & (1 << l) != 0
    }

    pub fn with(self, l: usize) -> Subset {
        Subset(self.0 | (1 << l))
    }

    pub fn without(self, l: usize) -> Subset {
        Subset(self.0 & !(1 << l))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn complement(self, d: usize) -> Subset {
        Subset(Subset::full(d).0 & !self.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in ascending order.
    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|l| self.contains(*l)).collect()
    }

    /// All subsets of `{0, .., d-1}` in bitmask order.
    pub fn all(d: usize) -> impl Iterator<Item = Subset> {
        (0..(1u32 << d)).map(Subset)
    }
}

impl fmt::Display for Subset {
    /// One-based set notation, e.g. `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|l| (l + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if d > MAX_ENUM_DIM {
        return Err(Error::TooManyInputs {
            d,
            limit: MAX_ENUM_DIM,
            what: "exhaustive subset enumeration",
        });
    }
    Ok(())
}

/// Closed values over subsets: `Var E(Y|X_A)`, `E MMD^2(P_Y, P_{Y|X_A})` or
/// `HSIC(X_A, Y)`, together with the matching total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedValueTable {
    pub d: usize,
    values: Vec<Option<f64>>,
    pub total: f64,
}

impl ClosedValueTable {
    /// Empty table with the convention `closed(∅) = 0`.
    pub fn new(d: usize, total: f64) -> Result<Self> {
        check_dim(d)?;
        let mut values = vec![None; 1 << d];
        values[0] = Some(0.0);
        Ok(ClosedValueTable { d, values, total })
    }

    pub fn from_fn(d: usize, total: f64, mut f: impl FnMut(Subset) -> f64) -> Result<Self> {
        let mut t = ClosedValueTable::new(d, total)?;
        for a in Subset::all(d).skip(1) {
            t.set(a, f(a));
        }
        Ok(t)
    }

    pub fn set(&mut self, a: Subset, v: f64) {
        self.values[a.0 as usize] = Some(v);
    }

    pub fn get(&self, a: Subset) -> Option<f64> {
        self.values.get(a.0 as usize).copied().flatten()
    }

    pub fn require(&self, a: Subset) -> Result<f64> {
        self.get(a).ok_or(Error::IncompleteTable(a))
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// Inclusion-exclusion terms `sum_{B ⊆ A} (-1)^{|A|-|B|} closed(B)`, indexed
/// by subset bits. Computed by finite differences over the coordinates in
/// ascending order.
pub fn mobius_combine(table: &ClosedValueTable) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = Subset::all(table.d)
        .map(|a| table.require(a))
        .collect::<Result<_>>()?;
    for l in 0..table.d {
        let bit = 1usize << l;
        for a in 0..v.len() {
            if a & bit != 0 {
                v[a] -= v[a ^ bit];
            }
        }
    }
    Ok(v)
}

/// Raw and normalized value of one subset term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetIndex {
    pub subset: Subset,
    pub raw: f64,
    pub normalized: f64,
}

/// Description of how a report was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub estimator: String,
    pub kernels: Vec<String>,
    pub n: usize,
    pub seed: u64,
}

/// Per-subset and per-input sensitivity indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub d: usize,
    /// All `2^d - 1` non-empty terms when a full table was available.
    pub terms: Vec<SubsetIndex>,
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
    pub total_value: f64,
    /// Terms with a negative normalized value, an estimation artefact that
    /// is reported rather than clipped.
    pub negative_terms: Vec<Subset>,
    #[serde(default)]
    pub meta: ReportMeta,
}

impl IndexReport {
    pub fn term(&self, a: Subset) -> Option<&SubsetIndex> {
        self.terms.iter().find(|t| t.subset == a)
    }

    pub fn with_meta(mut self, meta: ReportMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn has_negative_terms(&self) -> bool {
        !self.negative_terms.is_empty()
    }
}

fn check_total(total: f64) -> Result<()> {
    if total > 0.0 && total.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateOutput(format!(
            "total {total} is not strictly positive; the output looks constant"
        )))
    }
}

/// Normalize a complete table into indices.
pub fn normalize(table: &ClosedValueTable) -> Result<IndexReport> {
    check_total(table.total)?;
    let terms_raw = mobius_combine(table)?;
    let d = table.d;
    let full = Subset::full(d);
    let terms: Vec<SubsetIndex> = Subset::all(d)
        .skip(1)
        .map(|a| SubsetIndex {
            subset: a,
            raw: terms_raw[a.0 as usize],
            normalized: terms_raw[a.0 as usize] / table.total,
        })
        .collect();
    let first_order = (0..d)
        .map(|l| terms_raw[Subset::singleton(l).0 as usize] / table.total)
        .collect();
    // sum of the terms containing l; equals 1 - closed(-l)/total whenever
    // closed(full) = total
    let closed_full = table.require(full)?;
    let total = (0..d)
        .map(|l| Ok((closed_full - table.require(full.without(l))?) / table.total))
        .collect::<Result<_>>()?;
    let negative_terms = terms.iter().filter(|t| t.normalized < 0.0).map(|t| t.subset).collect();
    Ok(IndexReport {
        d,
        terms,
        first_order,
        total,
        total_value: table.total,
        negative_terms,
        meta: ReportMeta::default(),
    })
}

/// Report from first-order closed values `closed({l})` and complementary
/// closed values `closed(-{l})`, for estimators that do not fill a table.
pub fn first_total_report(first: &[f64], complement: &[f64], total_value: f64) -> Result<IndexReport> {
    check_total(total_value)?;
    if first.len() != complement.len() {
        return Err(Error::invalid("first-order and complement values differ in length"));
    }
    let d = first.len();
    let terms: Vec<SubsetIndex> = first
        .iter()
        .enumerate()
        .map(|(l, v)| SubsetIndex {
            subset: Subset::singleton(l),
            raw: *v,
            normalized: v / total_value,
        })
        .collect();
    let negative_terms = terms.iter().filter(|t| t.normalized < 0.0).map(|t| t.subset).collect();
    Ok(IndexReport {
        d,
        first_order: terms.iter().map(|t| t.normalized).collect(),
        total: complement.iter().map(|c| 1.0 - c / total_value).collect(),
        terms,
        total_value,
        negative_terms,
        meta: ReportMeta::default(),
    })
}

/// One atom of a discrete input law together with the conditional output
/// probabilities `P(Y = i | X = x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    pub weight: f64,
    pub probs: Vec<f64>,
}

/// One-versus-all aggregated Sobol index of a categorical output:
/// `sum_i E(P(Y=i|X) - P(Y=i))^2 / sum_i P(Y=i)(1 - P(Y=i))`.
pub fn categorical_one_vs_all(laws: &[ConditionalLaw]) -> Result<f64> {
    let k = laws.first().map(|c| c.probs.len()).unwrap_or(0);
    if k == 0 {
        return Err(Error::invalid("no conditional laws"));
    }
    let wsum: f64 = laws.iter().map(|c| c.weight).sum();
    if (wsum - 1.0).abs() > 1e-9 || laws.iter().any(|c| !(0.0..=1.0).contains(&c.weight)) {
        return Err(Error::invalid("atom weights must be probabilities summing to 1"));
    }
    for c in laws {
        if c.probs.len() != k {
            return Err(Error::invalid("conditional laws have different level counts"));
        }
        if c.probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (c.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("conditional probabilities must lie in [0, 1] and sum to 1"));
        }
    }
    let marginal: Vec<f64> = (0..k)
        .map(|i| laws.iter().map(|c| c.weight * c.probs[i]).sum())
        .collect();
    let denom: f64 = marginal.iter().map(|p| p * (1.0 - p)).sum();
    if !(denom > 0.0) {
        return Err(Error::DegenerateOutput("every level has probability 0 or 1".into()));
    }
    let num: f64 = (0..k)
        .map(|i| {
            laws.iter()
                .map(|c| c.weight * (c.probs[i] - marginal[i]).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_basics() {
        let a = Subset::from_indices(&[0, 2]);
        assert_eq!(a.to_string(), "{1,3}");
        assert_eq!(a.len(), 2);
        assert_eq!(a.complement(4), Subset::from_indices(&[1, 3]));
        assert!(Subset::singleton(2).is_subset_of(a));
        assert_eq!(Subset::full(3).0, 7);
        assert_eq!(Subset::EMPTY.to_string(), "{}");
    }

    #[test]
    fn two_inputs_interaction() {
        let (a, b, c) = (0.3, 0.2, 0.9);
        let t = ClosedValueTable::from_fn(2, 1.0, |s| match s.0 {
            1 => a,
            2 => b,
            _ => c,
        })
        .unwrap();
        let m = mobius_combine(&t).unwrap();
        assert_eq!(m[1], a);
        assert_eq!(m[2], b);
        assert!((m[3] - (c - a - b)).abs() < 1e-15);
    }

    #[test]
    fn single_input_term_is_closed_value() {
        let t = ClosedValueTable::from_fn(1, 1.0, |_| 0.4).unwrap();
        let r = normalize(&t).unwrap();
        assert_eq!(mobius_combine(&t).unwrap()[1], 0.4);
        assert_eq!(r.first_order, vec![0.4]);
        assert_eq!(r.total, vec![0.4]);
    }

    #[test]
    fn additive_values_have_no_interactions() {
        let v = [0.2, 0.5, 1.3];
        let t = ClosedValueTable::from_fn(3, 2.0, |s| s.indices().iter().map(|l| v[*l]).sum()).unwrap();
        let m = mobius_combine(&t).unwrap();
        for a in Subset::all(3).filter(|a| a.len() >= 2) {
            assert!(m[a.0 as usize].abs() < 1e-12, "{a}: {}", m[a.0 as usize]);
        }
    }

    #[test]
    fn mobius_matches_alternating_sum() {
        let d = 4;
        let t = ClosedValueTable::from_fn(d, 1.0, |s| ((s.0 * 7919) % 113) as f64 / 113.0).unwrap();
        let m = mobius_combine(&t).unwrap();
        for a in Subset::all(d) {
            let brute: f64 = Subset::all(d)
                .filter(|b| b.is_subset_of(a))
                .map(|b| {
                    let sign = if (a.len() - b.len()) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * t.get(b).unwrap()
                })
                .sum();
            assert!((brute - m[a.0 as usize]).abs() < 1e-12);
        }
    }

    #[test]
    fn incomplete_table_names_missing_subset() {
        let mut t = ClosedValueTable::new(2, 1.0).unwrap();
        t.set(Subset(1), 0.1);
        t.set(Subset(3), 0.5);
        assert_eq!(mobius_combine(&t).unwrap_err(), Error::IncompleteTable(Subset(2)));
    }

    #[test]
    fn degenerate_total_and_dimension_cap() {
        let t = ClosedValueTable::from_fn(1, 0.0, |_| 0.0).unwrap();
        assert!(matches!(normalize(&t), Err(Error::DegenerateOutput(_))));
        assert!(matches!(ClosedValueTable::new(25, 1.0), Err(Error::TooManyInputs { .. })));
    }

    #[test]
    fn negative_terms_are_flagged_not_clipped() {
        let t = ClosedValueTable::from_fn(2, 1.0, |s| match s.0 {
            1 => 0.6,
            2 => 0.6,
            _ => 1.0,
        })
        .unwrap();
        let r = normalize(&t).unwrap();
        assert_eq!(r.negative_terms, vec![Subset(3)]);
        assert!((r.term(Subset(3)).unwrap().normalized + 0.2).abs() < 1e-15);
    }

    #[test]
    fn ishigami_analytic_table() {
        let (a, b) = (7.0f64, 0.1f64);
        let pi4 = std::f64::consts::PI.powi(4);
        let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
        let v2 = a * a / 8.0;
        let v13 = b * b * pi4 * pi4 * (1.0 / 18.0 - 1.0 / 50.0);
        let var = v1 + v2 + v13;
        assert!((var - (a * a / 8.0 + b * pi4 / 5.0 + b * b * pi4 * pi4 / 18.0 + 0.5)).abs() < 1e-12);
        let t = ClosedValueTable::from_fn(3, var, |s| {
            let mut c = 0.0;
            if s.contains(0) {
                c += v1;
            }
            if s.contains(1) {
                c += v2;
            }
            if s.contains(0) && s.contains(2) {
                c += v13;
            }
            c
        })
        .unwrap();
        let r = normalize(&t).unwrap();
        assert!((r.first_order[0] - 0.3139).abs() < 1e-4);
        assert!((r.first_order[1] - 0.4424).abs() < 1e-4);
        assert!(r.first_order[2].abs() < 1e-15);
        assert!((r.term(Subset(5)).unwrap().normalized - 0.2437).abs() < 1e-4);
        assert!((r.total[2] - 0.2437).abs() < 1e-4);
        let sum: f64 = r.terms.iter().map(|t| t.normalized).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_vs_all_examples() {
        let indep = vec![
            ConditionalLaw { weight: 0.5, probs: vec![0.3, 0.7] },
            ConditionalLaw { weight: 0.5, probs: vec![0.3, 0.7] },
        ];
        assert_eq!(categorical_one_vs_all(&indep).unwrap(), 0.0);
        let det = vec![
            ConditionalLaw { weight: 0.5, probs: vec![1.0, 0.0] },
            ConditionalLaw { weight: 0.5, probs: vec![0.0, 1.0] },
        ];
        assert!((categorical_one_vs_all(&det).unwrap() - 1.0).abs() < 1e-15);
        let k3 = vec![
            ConditionalLaw { weight: 0.5, probs: vec![0.5, 0.3, 0.2] },
            ConditionalLaw { weight: 0.5, probs: vec![0.2, 0.3, 0.5] },
        ];
        // numerator 2 * 0.0225, denominator 2 * 0.35 * 0.65 + 0.3 * 0.7
        assert!((categorical_one_vs_all(&k3).unwrap() - 0.045 / 0.665).abs() < 1e-15);
        let constant = vec![ConditionalLaw { weight: 1.0, probs: vec![1.0, 0.0] }];
        assert!(matches!(categorical_one_vs_all(&constant), Err(Error::DegenerateOutput(_))));
    }
}
