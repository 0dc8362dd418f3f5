use thiserror::Error;

use crate::subset::Subset;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel `{kernel}` cannot be evaluated on `{left}`/`{right}` values")]
    KindMismatch {
        kernel: &'static str,
        left: &'static str,
        right: &'static str,
    },

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The zero-mean construction collapses the base RKHS to nothing.
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Constant output, or a normalizer that is not strictly positive.
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    #[error("band {band} cannot align curves of lengths {len_a} and {len_b}")]
    InfeasibleAlignment {
        band: usize,
        len_a: usize,
        len_b: usize,
    },

    #[error("closed-value table has no entry for subset {0}")]
    IncompleteTable(Subset),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("capability: {0}")]
    Capability(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("gram entry ({i}, {j}): {source}")]
    GramEntry {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("too many inputs ({d}) for {what}; limit is {limit}")]
    TooManyInputs {
        d: usize,
        limit: usize,
        what: &'static str,
    },

    #[error("enumerable model has {states} states; limit is {limit}")]
    SupportTooLarge { states: usize, limit: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
