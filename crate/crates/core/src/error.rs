use thiserror::Error;

/// Errors raised anywhere in the simulation and reconstruction chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid parameter `{param}`: {reason}")]
    InvalidParameter {
        module: &'static str,
        param: &'static str,
        reason: String,
    },

    #[error("{module}: invalid matrix: {reason}")]
    InvalidMatrix {
        module: &'static str,
        reason: String,
    },

    #[error("normalize: pair sum S[{index}] is zero")]
    DegenerateMeasurement { index: usize },

    #[error("tv_admm: objective increased for {streak} consecutive outer iterations (iteration {iteration}, objective {objective:e})")]
    NonConvergence {
        iteration: usize,
        streak: usize,
        objective: f64,
    },

    #[error("cnr: degenerate partition: {reason}")]
    DegeneratePartition { reason: String },

    #[error("cnr: background standard deviation is zero")]
    UndefinedCnr,

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {reason}")]
    Format { context: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(
        module: &'static str,
        param: &'static str,
        reason: impl Into<String>,
    ) -> Self {
        Error::InvalidParameter {
            module,
            param,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn format(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidMatrix { .. }
            | Error::DegenerateMeasurement { .. }
            | Error::Format { .. } => 2,
            Error::NonConvergence { .. } => 3,
            Error::DegeneratePartition { .. } | Error::UndefinedCnr => 4,
            Error::Io { .. } => 1,
        }
    }
}
