use thiserror::Error;
use xeb_core::analysis::AnalysisError;
use xeb_core::circuit::CircuitError;
use xeb_core::ising::IsingError;
use xeb_core::noise::NoiseError;
use xeb_core::statevector::SimError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Capacity(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Capacity { .. } => CliError::Capacity(e.to_string()),
            SimError::Io(io) => CliError::Io(io),
            SimError::BadSample(_) | SimError::BadDump(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::Sim(s) => s.into(),
            NoiseError::Circuit(c) => c.into(),
            NoiseError::BadRate { .. } | NoiseError::Parse(_) | NoiseError::Empty(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<IsingError> for CliError {
    fn from(e: IsingError) -> Self {
        match e {
            IsingError::EnumerationCap { .. } => CliError::Capacity(e.to_string()),
            IsingError::UnsupportedGate { .. } | IsingError::OutputRange { .. } | IsingError::EmptySample => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
