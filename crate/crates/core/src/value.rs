use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputValue {
    Scalar { value: f64 },
    Categorical { level: u32 },
    Curve { times: Vec<f64>, values: Vec<f64> },
    /// A bag of scalar draws standing for an empirical distribution.
    DistSample { values: Vec<f64> },
}

impl OutputValue {
    pub fn scalar(value: f64) -> Self {
        OutputValue::Scalar { value }
    }

    pub fn categorical(level: u32) -> Self {
        OutputValue::Categorical { level }
    }

    pub fn curve(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(format!(
                "curve has {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::invalid("empty curve"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("curve times must be strictly increasing"));
        }
        Ok(OutputValue::Curve { times, values })
    }

    pub fn dist(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty distribution sample"));
        }
        Ok(OutputValue::DistSample { values })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OutputValue::Scalar { .. } => "scalar",
            OutputValue::Categorical { .. } => "categorical",
            OutputValue::Curve { .. } => "curve",
            OutputValue::DistSample { .. } => "dist",
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            OutputValue::Scalar { value } => Some(*value),
            _ => None,
        }
    }

    pub fn same_kind(&self, other: &OutputValue) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

impl From<f64> for OutputValue {
    fn from(value: f64) -> Self {
        OutputValue::Scalar { value }
    }
}

/// Convert a column of scalar outputs to plain floats.
pub fn scalars(column: &[OutputValue]) -> Result<Vec<f64>> {
    column
        .iter()
        .map(|v| {
            v.as_scalar().ok_or(Error::KindMismatch {
                kernel: "scalar-only estimator",
                left: v.kind_name(),
                right: "scalar",
            })
        })
        .collect()
}

/// `n` joint realizations of `d` inputs plus one output column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Row-major inputs, `inputs[i][l]`.
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<OutputValue>,
    #[serde(default)]
    pub input_names: Vec<String>,
}

impl SampleSet {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<OutputValue>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::invalid(format!(
                "{} input rows but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        let d = inputs[0].len();
        if inputs.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged input rows"));
        }
        if outputs.iter().any(|o| !o.same_kind(&outputs[0])) {
            return Err(Error::invalid("output column mixes value kinds"));
        }
        let input_names = (1..=d).map(|l| format!("x{l}")).collect();
        Ok(SampleSet {
            inputs,
            outputs,
            input_names,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::invalid("input name count does not match dimension"));
        }
        self.input_names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.inputs.iter().map(|r| r[l]).collect()
    }
}
