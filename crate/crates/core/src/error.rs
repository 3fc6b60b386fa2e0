use thiserror::Error;

/// Errors raised by the workbench library.
///
/// The CLI maps [`Error::is_validation`] to exit code 2 and
/// [`Error::is_numerical_quality`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("numerical quality: {0}")]
    NumericalQuality(String),

    #[error("truncation too shallow: interface value {interface:.6e} vs far field {far_field:.6e} (allowed {allowed:.3e})")]
    TruncationTooShallow {
        interface: f64,
        far_field: f64,
        allowed: f64,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("missing artifacts for stage `{stage}`: expected {expected:?}")]
    MissingArtifact { stage: String, expected: Vec<String> },

    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Input that can be fixed by editing the configuration or data.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Geometry(_)
            | Error::Config(_)
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::MissingArtifact { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// Results that were computed but failed a quality gate (refine the mesh, deepen the strip).
    pub fn is_numerical_quality(&self) -> bool {
        match self {
            Error::NumericalQuality(_) | Error::TruncationTooShallow { .. } | Error::Singular(_) => {
                true
            }
            Error::Stage { source, .. } => source.is_numerical_quality(),
            _ => false,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
