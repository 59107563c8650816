use std::path::PathBuf;

use crate::flight::ConstraintViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("{path}: line {line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("constraint violated at cycle {cycle}: {violation}")]
    Constraint {
        cycle: usize,
        violation: ConstraintViolation,
    },

    #[error("utility model {0} is not supported by this operation")]
    UnsupportedModel(&'static str),

    #[error(
        "instance too large for exhaustive search: ~{estimate:.3e} expansions (limit {limit:.0e})"
    )]
    InstanceTooLarge { estimate: f64, limit: f64 },

    #[error("aggregation error: {0}")]
    Aggregation(String),

    /// A finished run failed an independent check (replay or bound).
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status for this error: 1 validation, 2 constraint
    /// violation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Constraint { .. } | Error::Verification(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let io = Error::io("x", std::io::Error::other("gone"));
        assert_eq!(io.exit_code(), 3);
        assert_eq!(Error::Config("bad".into()).exit_code(), 1);
        assert_eq!(Error::param("bad").exit_code(), 1);
        assert_eq!(Error::Verification("bound".into()).exit_code(), 2);
        let c = Error::Constraint {
            cycle: 3,
            violation: ConstraintViolation::PendingSlew,
        };
        assert_eq!(c.exit_code(), 2);
    }
}
