use arithclass_core::classes::ClassError;
use arithclass_core::config::ConfigError;
use arithclass_core::io::IoError;
use arithclass_core::lattice::SigmaError;
use arithclass_core::measure::MeasureError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 4,
            CliError::Budget(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Budget(_) => "budget",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("plain struct")
    }
}

impl From<SigmaError> for CliError {
    fn from(e: SigmaError) -> Self {
        match e {
            SigmaError::BudgetExceeded { .. }
            | SigmaError::ExhaustiveTooLarge { .. }
            | SigmaError::LevelTooLarge(_) => CliError::Budget(e.to_string()),
            SigmaError::SupNormUnsupported => CliError::Config(e.to_string()),
            SigmaError::Reduction(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ClassError> for CliError {
    fn from(e: ClassError) -> Self {
        match e {
            ClassError::Sigma(s) => s.into(),
            ClassError::CountBudget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Class(c) => c.into(),
            MeasureError::SampleBudgetExhausted(_) | MeasureError::BudgetTooSmall { .. } => {
                CliError::Budget(e.to_string())
            }
            MeasureError::DegenerateFit(_) => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Class(c) => c.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
