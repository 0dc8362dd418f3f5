//! Textual kernel and marginal specifications, e.g. `gaussian:sigma=0.5`,
//! `sobolev:r=1` or `uniform:0,1`. A kernel text starting with `{` is read
//! as the JSON form of a [`KernelSpec`].

use std::collections::BTreeMap;

use kgsa::estimators::InputKernel;
use kgsa::kernel::{median_heuristic, Metric, ScoreFn};
use kgsa::{KernelSpec, MarginalDist, OutputValue};

use crate::error::{CliError, CliResult};

/// A parsed kernel text; parameters left out are fitted to the data.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Named { name: String, params: BTreeMap<String, f64> },
    Json(KernelSpec),
}

fn split_params(text: &str) -> CliResult<(String, BTreeMap<String, f64>)> {
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n, r),
        None => (text, ""),
    };
    let mut params = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("kernel parameter `{item}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("kernel parameter `{k}` is not a number: `{v}`")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok((name.trim().to_ascii_lowercase(), params))
}

const KNOWN: [(&str, &[&str]); 9] = [
    ("linear", &[]),
    ("gaussian", &["sigma"]),
    ("dirac", &["levels"]),
    ("sobolev", &["r"]),
    ("durrande", &["sigma"]),
    ("stein", &["sigma"]),
    ("distribution", &["sigma2", "lambda", "inner_sigma"]),
    ("wasserstein", &["sigma2", "lambda"]),
    ("alignment", &["bandwidth", "band"]),
];

pub fn parse_kernel(text: &str) -> CliResult<KernelChoice> {
    let text = text.trim();
    if text.starts_with('{') {
        let spec: KernelSpec = serde_json::from_str(text)?;
        spec.validate()?;
        return Ok(KernelChoice::Json(spec));
    }
    let (name, params) = split_params(text)?;
    let allowed = KNOWN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| *p)
        .ok_or_else(|| {
            let names: Vec<&str> = KNOWN.iter().map(|(n, _)| *n).collect();
            CliError::usage(format!("unknown kernel `{name}`; expected one of {}", names.join(", ")))
        })?;
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::usage(format!("kernel `{name}` has no parameter `{k}`")));
    }
    Ok(KernelChoice::Named { name, params })
}

pub fn parse_marginal(text: &str) -> CliResult<MarginalDist> {
    let (name, rest) = text
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("marginal `{text}` should look like uniform:0,1 or normal:0,1")))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("marginal parameters of `{text}` are not numbers")))?;
    if nums.len() != 2 {
        return Err(CliError::usage(format!("marginal `{text}` needs two parameters")));
    }
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "uniform" => MarginalDist::uniform(nums[0], nums[1])?,
        "normal" => MarginalDist::normal(nums[0], nums[1])?,
        other => return Err(CliError::usage(format!("unknown marginal `{other}`"))),
    })
}

fn pooled_scalars(column: &[OutputValue]) -> Vec<OutputValue> {
    column
        .iter()
        .flat_map(|v| match v {
            OutputValue::DistSample { values } | OutputValue::Curve { values, .. } => {
                values.iter().map(|x| OutputValue::scalar(*x)).collect()
            }
            other => vec![other.clone()],
        })
        .collect()
}

fn median_distance(column: &[OutputValue]) -> CliResult<f64> {
    Ok(median_heuristic(column, &Metric::Euclidean)?)
}

/// Output kernel for `column`. Without a choice the kernel follows the
/// output kind: Gaussian for scalars, Dirac for levels, a distribution
/// embedding for bags and global alignment for curves, all with median
/// heuristic bandwidths.
pub fn resolve_output_kernel(choice: Option<&KernelChoice>, column: &[OutputValue]) -> CliResult<KernelSpec> {
    let default_name = match column.first() {
        Some(OutputValue::Categorical { .. }) => "dirac",
        Some(OutputValue::DistSample { .. }) => "distribution",
        Some(OutputValue::Curve { .. }) => "alignment",
        _ => "gaussian",
    };
    let empty = BTreeMap::new();
    let (name, params) = match choice {
        Some(KernelChoice::Json(spec)) => return Ok(spec.clone()),
        Some(KernelChoice::Named { name, params }) => (name.as_str(), params),
        None => (default_name, &empty),
    };
    let spec = match name {
        "linear" => KernelSpec::Linear,
        "gaussian" => KernelSpec::gaussian(match params.get("sigma") {
            Some(s) => *s,
            None => median_distance(column)?,
        }),
        "dirac" => {
            let levels = match params.get("levels") {
                Some(l) => *l as u32,
                None => {
                    column
                        .iter()
                        .filter_map(|v| match v {
                            OutputValue::Categorical { level } => Some(*level),
                            _ => None,
                        })
                        .max()
                        .unwrap_or(0)
                        + 1
                }
            };
            KernelSpec::Dirac { num_levels: levels }
        }
        "distribution" => {
            let inner = KernelSpec::gaussian(match params.get("inner_sigma") {
                Some(s) => *s,
                None => median_distance(&pooled_scalars(column))?,
            });
            let lambda = match params.get("lambda") {
                Some(l) => *l,
                None => 1.0 / median_heuristic(column, &Metric::Mmd(inner.clone()))?,
            };
            KernelSpec::DistributionEmbedding {
                sigma2: params.get("sigma2").copied().unwrap_or(1.0),
                lambda,
                inner: Box::new(inner),
            }
        }
        "wasserstein" => {
            let lambda = match params.get("lambda") {
                Some(l) => *l,
                None => 1.0 / median_heuristic(column, &Metric::Wasserstein2)?,
            };
            KernelSpec::WassersteinEmbedding {
                sigma2: params.get("sigma2").copied().unwrap_or(1.0),
                lambda,
            }
        }
        "alignment" => KernelSpec::GlobalAlignment {
            inner_bandwidth: match params.get("bandwidth") {
                Some(b) => *b,
                None => median_distance(&pooled_scalars(column))?,
            },
            triangular_band: params.get("band").map(|b| *b as usize),
        },
        other => return Err(CliError::usage(format!("`{other}` is not an output kernel"))),
    };
    spec.validate()?;
    Ok(spec)
}

/// Zero-mean input kernel under `marginal`. Sobolev kernels act on the
/// probability integral transform; Durrande and Stein kernels on the raw
/// input. The default is Sobolev of order 1.
pub fn resolve_input_kernel(choice: Option<&KernelChoice>, marginal: &MarginalDist) -> CliResult<InputKernel> {
    let empty = BTreeMap::new();
    let (name, params) = match choice {
        Some(KernelChoice::Json(spec)) => {
            return Ok(InputKernel {
                spec: spec.clone(),
                marginal: marginal.clone(),
                pit: false,
            })
        }
        Some(KernelChoice::Named { name, params }) => (name.as_str(), params),
        None => ("sobolev", &empty),
    };
    let sigma = || params.get("sigma").copied().unwrap_or(1.0);
    Ok(match name {
        "sobolev" => InputKernel::sobolev(params.get("r").map(|r| *r as u32).unwrap_or(1), marginal.clone()),
        "durrande" => InputKernel::durrande(KernelSpec::gaussian(sigma()), marginal.clone()),
        "stein" => {
            let MarginalDist::Normal { mu, sd } = marginal else {
                return Err(CliError::usage("the stein kernel needs a normal marginal"));
            };
            InputKernel {
                spec: KernelSpec::SteinZeroMean {
                    base: Box::new(KernelSpec::gaussian(sigma())),
                    score: ScoreFn::Normal { mu: *mu, sd: *sd },
                },
                marginal: marginal.clone(),
                pit: false,
            }
        }
        other => return Err(CliError::usage(format!("`{other}` is not a zero-mean input kernel"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(text: &str) -> (String, BTreeMap<String, f64>) {
        match parse_kernel(text).unwrap() {
            KernelChoice::Named { name, params } => (name, params),
            KernelChoice::Json(_) => panic!("expected a named kernel"),
        }
    }

    #[test]
    fn kernel_texts() {
        assert_eq!(named("gaussian:sigma=0.5").1["sigma"], 0.5);
        assert_eq!(named("Sobolev:r=2").0, "sobolev");
        assert!(named("linear").1.is_empty());
        assert!(parse_kernel("gaussian:bandwidth=1").is_err());
        assert!(parse_kernel("cosine").is_err());
        assert!(parse_kernel("gaussian:sigma").is_err());
        let json = parse_kernel(r#"{"kind":"gaussian","sigma":2.0}"#).unwrap();
        assert_eq!(json, KernelChoice::Json(KernelSpec::gaussian(2.0)));
    }

    #[test]
    fn marginal_texts() {
        assert_eq!(parse_marginal("uniform:0,1").unwrap(), MarginalDist::Uniform { a: 0.0, b: 1.0 });
        assert_eq!(parse_marginal("normal:1, 2").unwrap(), MarginalDist::Normal { mu: 1.0, sd: 2.0 });
        assert!(parse_marginal("uniform:1,0").is_err());
        assert!(parse_marginal("beta:1,2").is_err());
        assert!(parse_marginal("uniform").is_err());
    }

    #[test]
    fn default_output_kernels_follow_the_kind() {
        let scalars: Vec<OutputValue> = [0.0, 1.0, 3.0].iter().map(|v| OutputValue::scalar(*v)).collect();
        assert_eq!(resolve_output_kernel(None, &scalars).unwrap(), KernelSpec::gaussian(2.0));
        let levels: Vec<OutputValue> = [0, 2, 1].iter().map(|v| OutputValue::categorical(*v)).collect();
        assert_eq!(resolve_output_kernel(None, &levels).unwrap(), KernelSpec::Dirac { num_levels: 3 });
        let bags: Vec<OutputValue> = (0..4)
            .map(|i| OutputValue::dist(vec![i as f64, i as f64 + 1.0, 2.0 * i as f64]).unwrap())
            .collect();
        assert!(matches!(
            resolve_output_kernel(None, &bags).unwrap(),
            KernelSpec::DistributionEmbedding { .. }
        ));
        let w = parse_kernel("wasserstein").unwrap();
        assert!(matches!(
            resolve_output_kernel(Some(&w), &bags).unwrap(),
            KernelSpec::WassersteinEmbedding { .. }
        ));
    }

    #[test]
    fn input_kernels() {
        let u = MarginalDist::Uniform { a: 0.0, b: 1.0 };
        let k = resolve_input_kernel(None, &u).unwrap();
        assert_eq!(k.spec, KernelSpec::SobolevZeroMean { r: 1 });
        assert!(k.pit);
        let s = parse_kernel("stein:sigma=1").unwrap();
        assert!(resolve_input_kernel(Some(&s), &u).is_err());
        let n = MarginalDist::Normal { mu: 0.0, sd: 1.0 };
        assert!(resolve_input_kernel(Some(&s), &n).unwrap().verify(1).is_ok());
    }
}
