use tuneout_core::atomic::{DataError, StateError};
use tuneout_core::fit::{FitError, ModelFitError};
use tuneout_core::imaging::ImagingError;
use tuneout_core::kd::KdError;
use tuneout_core::pipeline::PipelineError;
use tuneout_core::stark::StarkError;
use tuneout_core::tuneout::TuneoutError;

/// Failure of a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Computation(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Computation(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StarkError> for CliError {
    fn from(e: StarkError) -> Self {
        match e {
            StarkError::ResonanceGuard { .. } => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TuneoutError> for CliError {
    fn from(e: TuneoutError) -> Self {
        match e {
            TuneoutError::Stark(s) => s.into(),
            TuneoutError::Data(d) => d.into(),
            TuneoutError::InvalidBracket { .. } | TuneoutError::InvalidGrid => CliError::Validation(e.to_string()),
            TuneoutError::NotConverged(_) => CliError::NonConvergence(e.to_string()),
            _ => CliError::Computation(e.to_string()),
        }
    }
}

impl From<KdError> for CliError {
    fn from(e: KdError) -> Self {
        match e {
            KdError::Unidentifiable(_) => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::NotConverged { .. } => CliError::NonConvergence(e.to_string()),
            FitError::InvalidInput(_) => CliError::Validation(e.to_string()),
            _ => CliError::Computation(e.to_string()),
        }
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::PeakFit {
                source: FitError::NotConverged { .. },
                ..
            } => CliError::NonConvergence(e.to_string()),
            ImagingError::PeakFit { .. } | ImagingError::Unidentifiable(_) => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ModelFitError> for CliError {
    fn from(e: ModelFitError) -> Self {
        match e {
            ModelFitError::Fit(f) => f.into(),
            ModelFitError::Tuneout(t) => t.into(),
            ModelFitError::Stark(s) => s.into(),
            ModelFitError::State(s) => s.into(),
            ModelFitError::Unidentifiable(_) | ModelFitError::ZeroField(_) => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Validation(m),
            PipelineError::Tuneout(t) => t.into(),
            PipelineError::Imaging(i) => i.into(),
            PipelineError::Kd(k) => k.into(),
            PipelineError::Fit(f) => f.into(),
        }
    }
}
