use bclab::bc::BcError;
use bclab::gibbs::GibbsError;
use bclab::io::IoError;
use bclab::orbit::OrbitError;
use bclab::shift::ShiftError;
use bclab::toral::ToralError;
use thiserror::Error;

/// Failures of a run, each tagged with the operation that raised it.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input data; nothing was written.
    #[error("{op}: {msg}")]
    Validation { op: &'static str, msg: String },
    /// Valid input on which a computation failed (no convergence, overflow).
    #[error("{op}: {msg}")]
    Numeric { op: &'static str, msg: String },
    #[error("writing artifacts: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn validation(op: &'static str, msg: impl ToString) -> Self {
        Self::Validation { op, msg: msg.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } => 2,
            Self::Numeric { .. } => 3,
            Self::Io(_) => 1,
        }
    }
}

/// Sorts a library error into the validation or numeric class.
pub trait Classify: std::fmt::Display {
    fn is_numeric(&self) -> bool;

    fn at(&self, op: &'static str) -> CliError {
        let msg = self.to_string();
        if self.is_numeric() {
            CliError::Numeric { op, msg }
        } else {
            CliError::Validation { op, msg }
        }
    }
}

impl Classify for ShiftError {
    fn is_numeric(&self) -> bool {
        false
    }
}

impl Classify for GibbsError {
    fn is_numeric(&self) -> bool {
        matches!(self, GibbsError::NoConvergence { .. } | GibbsError::Residual { .. })
    }
}

impl Classify for BcError {
    fn is_numeric(&self) -> bool {
        matches!(self, BcError::NoDecay(_) | BcError::LengthOverflow)
    }
}

impl Classify for OrbitError {
    fn is_numeric(&self) -> bool {
        false
    }
}

impl Classify for ToralError {
    fn is_numeric(&self) -> bool {
        matches!(self, ToralError::Overflow)
    }
}

impl Classify for IoError {
    fn is_numeric(&self) -> bool {
        match self {
            IoError::Gibbs(e) => e.is_numeric(),
            IoError::Sequence(e) => e.is_numeric(),
            IoError::Toral(e) => e.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// `.at(op)` for results carrying a classified error.
pub trait Context<T> {
    fn at(self, op: &'static str) -> Result<T>;
}

impl<T, E: Classify> Context<T> for std::result::Result<T, E> {
    fn at(self, op: &'static str) -> Result<T> {
        self.map_err(|e| e.at(op))
    }
}
