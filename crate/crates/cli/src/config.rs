//! Command line, JSON configuration file and the resolved run configuration
//! whose hash is embedded in every result file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csvio::{OutputKind, Schema};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "kgsa", version, about = "Kernel-based global sensitivity analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First-order and total indices from a sample file or a named model.
    Estimate(CommonArgs),
    /// Shapley effects from a sample file or a named model.
    Shapley(CommonArgs),
    /// Replicated runs of a reference experiment.
    Reproduce {
        experiment: Experiment,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo check that an input kernel is zero-mean under a marginal.
    VerifyKernels(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Ishigami,
    Stochastic,
    Sir,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorId {
    DoubleLoop,
    PickFreeze,
    Rank,
    Knn,
    HsicU,
    HsicV,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Inner sample size of the double loop; for `reproduce stochastic`,
    /// the sample size of the kernel estimators.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of kNN anchor points.
    #[arg(long)]
    pub na: Option<usize>,
    /// Neighbour count of the complementary kNN estimator.
    #[arg(long)]
    pub ni: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output kernel, e.g. `gaussian:sigma=0.5`, `dirac`, `distribution`.
    #[arg(long)]
    pub kernel_out: Option<String>,
    /// Zero-mean input kernel for HSIC, e.g. `sobolev:r=1`.
    #[arg(long)]
    pub kernel_in: Option<String>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorId>,
    /// Sample CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Named model: ishigami, ishigami-dummy, stochastic, stochastic-mean,
    /// sir-i, sir-r, categorical[:dominant].
    #[arg(long)]
    pub model: Option<String>,
    /// Output column of the sample file.
    #[arg(long)]
    pub output_column: Option<String>,
    #[arg(long, value_enum)]
    pub output_kind: Option<OutputKind>,
    /// Input columns of the sample file, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub inputs: Option<Vec<String>>,
    /// Directory receiving the result files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite result files written under a different configuration.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Input kernel, e.g. `sobolev:r=1`, `durrande:sigma=0.5`, `stein:sigma=1`.
    #[arg(long)]
    pub kernel: String,
    /// Input marginal, `uniform:a,b` or `normal:mu,sd`.
    #[arg(long, default_value = "uniform:0,1")]
    pub marginal: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub na: Option<usize>,
    pub ni: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub kernel_out: Option<String>,
    pub kernel_in: Option<String>,
    pub estimator: Option<EstimatorId>,
    pub data: Option<PathBuf>,
    pub model: Option<String>,
    pub output_column: Option<String>,
    pub output_kind: Option<OutputKind>,
    pub inputs: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Flags over file values.
    pub fn merge(self, a: &CommonArgs) -> Settings {
        Settings {
            n: a.n.or(self.n),
            m: a.m.or(self.m),
            na: a.na.or(self.na),
            ni: a.ni.or(self.ni),
            reps: a.reps.or(self.reps),
            seed: a.seed.or(self.seed),
            kernel_out: a.kernel_out.clone().or(self.kernel_out),
            kernel_in: a.kernel_in.clone().or(self.kernel_in),
            estimator: a.estimator.or(self.estimator),
            data: a.data.clone().or(self.data),
            model: a.model.clone().or(self.model),
            output_column: a.output_column.clone().or(self.output_column),
            output_kind: a.output_kind.or(self.output_kind),
            inputs: a.inputs.clone().or(self.inputs),
            out: a.out.clone().or(self.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    None,
    Data { path: String, sha256: String, schema: Schema },
    Model { name: String },
}

/// Everything that determines the numbers of a run. The output directory
/// and `--force` are left out so that moving results keeps their hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub source: Source,
    pub estimator: Option<EstimatorId>,
    pub kernel_out: Option<String>,
    pub kernel_in: Option<String>,
    pub n: usize,
    pub m: usize,
    pub n_a: usize,
    pub n_i: usize,
    pub reps: usize,
    pub seed: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    /// Fill defaults; `default_n` and `default_reps` depend on the command.
    pub fn resolve(command: &str, s: &Settings, default_n: usize, default_reps: usize) -> CliResult<RunConfig> {
        let source = match (&s.data, &s.model) {
            (Some(_), Some(_)) => return Err(CliError::usage("give either --data or --model, not both")),
            (Some(path), None) => {
                let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
                Source::Data {
                    path: path.display().to_string(),
                    sha256: sha256_hex(&bytes),
                    schema: Schema {
                        inputs: s.inputs.clone(),
                        output: s.output_column.clone().unwrap_or_else(|| "y".into()),
                        kind: s.output_kind.unwrap_or_default(),
                    },
                }
            }
            (None, Some(name)) => Source::Model { name: name.clone() },
            (None, None) => Source::None,
        };
        let n = s.n.unwrap_or(default_n);
        let reps = s.reps.unwrap_or(default_reps);
        if n == 0 || reps == 0 {
            return Err(CliError::usage("--n and --reps must be at least 1"));
        }
        Ok(RunConfig {
            command: command.to_string(),
            source,
            estimator: s.estimator,
            kernel_out: s.kernel_out.clone(),
            kernel_in: s.kernel_in.clone(),
            n,
            m: s.m.unwrap_or(n),
            n_a: s.na.unwrap_or(n.min(500)),
            n_i: s.ni.unwrap_or(10),
            reps,
            seed: s.seed.unwrap_or(0),
        })
    }
}
