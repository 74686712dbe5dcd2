use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<cdd_core::pulse_sim::SimError> for CliError {
    fn from(e: cdd_core::pulse_sim::SimError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<cdd_core::dephasing_analytics::DephasingError> for CliError {
    fn from(e: cdd_core::dephasing_analytics::DephasingError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<cdd_core::model_fitting::FitError> for CliError {
    fn from(e: cdd_core::model_fitting::FitError) -> Self {
        CliError::Numerical(format!("fit: {e}"))
    }
}

impl From<cdd_core::pulse_sim::TraceError> for CliError {
    fn from(e: cdd_core::pulse_sim::TraceError) -> Self {
        CliError::Io(e.to_string())
    }
}
