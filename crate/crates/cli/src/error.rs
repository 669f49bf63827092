use perfcausal::citest::CiError;
use perfcausal::dataset::DataError;
use perfcausal::discovery::DiscoveryError;
use perfcausal::distribution::DistError;
use perfcausal::estimation::EstimationError;
use perfcausal::graph::{GraphError, ParseError};
use perfcausal::queries::QueryError;
use perfcausal::synthlab::SynthError;
use thiserror::Error;

/// Failures mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or missing inputs: exit 1.
    #[error("{0}")]
    Usage(String),
    /// Malformed data, graphs or queries: exit 2.
    #[error("{0}")]
    Data(String),
    /// Statistics undefined on the given data: exit 3.
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::ConstantColumn(_) => CliError::Degenerate(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CiError> for CliError {
    fn from(e: CiError) -> Self {
        match e {
            CiError::Degenerate(_) => CliError::Degenerate(e.to_string()),
            CiError::Data(d) => d.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::UndefinedConditional(_) => CliError::Degenerate(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DiscoveryError> for CliError {
    fn from(e: DiscoveryError) -> Self {
        match e {
            DiscoveryError::Test { source: CiError::Degenerate(_), .. } => CliError::Degenerate(e.to_string()),
            DiscoveryError::Params(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Dist(d) => d.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Dist(d) => d.into(),
            EstimationError::Data(d) => d.into(),
            EstimationError::Input(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::DegenerateSelection { .. } => CliError::Degenerate(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Data(e.to_string())
    }
}
