//! Mapping from library errors to process exit codes.

use covcheck::classifier::ClassifierError;
use covcheck::featureset::FeatureSetError;
use covcheck::generator::{GenerationError, LoadGeneratedError};
use covcheck::metrics::MetricsError;
use covcheck::pipeline::PipelineError;
use covcheck::report::ReportError;
use covcheck::shift::ShiftError;

pub const EXIT_IO: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Outcome = Result<(), Failure>;

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Failure::new(EXIT_IO, anyhow::anyhow!(msg.into()))
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Failure::new(EXIT_DATA, anyhow::anyhow!(msg.into()))
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        Failure::new(EXIT_MISMATCH, anyhow::anyhow!(msg.into()))
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::new(EXIT_USAGE, anyhow::anyhow!(msg.into()))
    }
}

impl From<FeatureSetError> for Failure {
    fn from(e: FeatureSetError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_DATA };
        Failure::new(code, e)
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let code = match e {
            MetricsError::DimensionMismatch(_) => EXIT_MISMATCH,
            MetricsError::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure::new(code, e)
    }
}

impl From<ShiftError> for Failure {
    fn from(e: ShiftError) -> Self {
        let code = match e {
            ShiftError::DimensionMismatch(_) => EXIT_MISMATCH,
            ShiftError::InvalidConfig(_) => EXIT_USAGE,
            ShiftError::EmptyInput => EXIT_DATA,
        };
        Failure::new(code, e)
    }
}

impl From<GenerationError> for Failure {
    fn from(e: GenerationError) -> Self {
        let code = match e {
            GenerationError::DimensionMismatch(_) => EXIT_MISMATCH,
            GenerationError::InvalidConfig(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure::new(code, e)
    }
}

impl From<LoadGeneratedError> for Failure {
    fn from(e: LoadGeneratedError) -> Self {
        match e {
            LoadGeneratedError::Dataset(e) => e.into(),
            LoadGeneratedError::Provenance(e) => e.into(),
        }
    }
}

impl From<ClassifierError> for Failure {
    fn from(e: ClassifierError) -> Self {
        let code = match e {
            ClassifierError::DimensionMismatch(_) => EXIT_MISMATCH,
            _ => EXIT_DATA,
        };
        Failure::new(code, e)
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::Io { .. } => EXIT_IO,
            _ => EXIT_DATA,
        };
        Failure::new(code, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Io { .. } => Failure::new(EXIT_IO, e),
            PipelineError::Report(e) => e.into(),
            other => Failure::new(EXIT_DATA, other),
        }
    }
}
