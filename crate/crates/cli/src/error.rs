//! Error categories mapped to process exit codes:
//! 2 config, 3 data, 4 numeric/budget.

use affectcast_core::autoencoder::AeError;
use affectcast_core::baselines::RidgeError;
use affectcast_core::clusters::ClusterError;
use affectcast_core::codec::CodecError;
use affectcast_core::dataio::DataError;
use affectcast_core::domain::DomainError;
use affectcast_core::forecaster::ForecastError;
use affectcast_core::maxent::MaxEntError;
use affectcast_core::metrics::MetricsError;
use affectcast_core::neural::{NeuralError, PersistError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io: {e}"))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::BudgetExceeded { .. } => CliError::Numeric(e.to_string()),
            CodecError::UnknownLabel(_) => CliError::Data(e.to_string()),
            CodecError::InvalidLabelMap(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::EmptyText => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MaxEntError> for CliError {
    fn from(e: MaxEntError) -> Self {
        match e {
            MaxEntError::BudgetExceeded { .. } => CliError::Numeric(e.to_string()),
            MaxEntError::EmptyData => CliError::Data(e.to_string()),
            MaxEntError::LayoutMismatch(_) => CliError::Config(e.to_string()),
            MaxEntError::Codec(c) => CliError::from(c),
        }
    }
}

impl From<AeError> for CliError {
    fn from(e: AeError) -> Self {
        match e {
            AeError::EmptyData => CliError::Data(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        match e {
            ForecastError::InvalidConfig(_) | ForecastError::LayoutMismatch(_) => {
                CliError::Config(e.to_string())
            }
            ForecastError::InsufficientData(_) | ForecastError::MissingData { .. } => {
                CliError::Data(e.to_string())
            }
            ForecastError::Neural(_) | ForecastError::Persist(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

impl From<RidgeError> for CliError {
    fn from(e: RidgeError) -> Self {
        match e {
            RidgeError::SingularSystem => CliError::Numeric(e.to_string()),
            RidgeError::EmptyData => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::OutOfDomain(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("json: {e}"))
    }
}
