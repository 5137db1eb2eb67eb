use std::path::PathBuf;

use qrng_core::calibration::CalibrationError;
use qrng_core::entropy::EntropyError;
use qrng_core::extractor::ExtractorError;
use qrng_core::simulator::SimulatorError;
use qrng_core::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum KitError {
    #[error("entropy: {0}")]
    Entropy(#[from] EntropyError),
    #[error("spectral: {0}")]
    Spectral(#[from] SpectralError),
    #[error("simulator: {0}")]
    Simulator(#[from] SimulatorError),
    #[error("calibration: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("extractor: {0}")]
    Extractor(#[from] ExtractorError),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("extractor output of {requested} bits exceeds the secure length of {secure} bits")]
    OutputExceedsSecureLength { requested: usize, secure: u64 },
}

impl KitError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KitError::Io { path: path.into(), source }
    }

    pub fn config(line: usize, message: impl Into<String>) -> Self {
        KitError::Config { line, message: message.into() }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        KitError::Format { path: path.into(), message: message.into() }
    }

    /// Process exit status: 2 degenerate model, 3 insufficient data, 4 I/O,
    /// 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            KitError::Entropy(EntropyError::DegenerateModel { .. } | EntropyError::InconsistentModel { .. }) => 2,
            KitError::Spectral(SpectralError::InsufficientData { .. } | SpectralError::InsufficientAveraging(_)) => 3,
            KitError::Simulator(SimulatorError::RecordTooShort { .. }) => 3,
            KitError::Io { .. } | KitError::MissingArtifact(_) | KitError::Format { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = KitError> = std::result::Result<T, E>;
