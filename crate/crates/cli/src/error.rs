use kappa_ent::channels::ChannelError;
use kappa_ent::measures::MeasureError;
use kappa_ent::states::StateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("certificate integrity failure: {0}")]
    Integrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Integrity(_) => 3,
        }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Solver(_) | MeasureError::Sdp(_) | MeasureError::Linalg(_) => CliError::Solver(e.to_string()),
            MeasureError::InvalidInput(_) | MeasureError::DimensionTooLarge(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::Measure(m) => m.into(),
            ChannelError::Linalg(_) => CliError::Solver(e.to_string()),
            ChannelError::InvalidInput(_) => CliError::Validation(e.to_string()),
            ChannelError::Integrity { .. } => CliError::Integrity(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
