use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures reported by the solver pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    Domain { what: &'static str, value: f64 },
    /// A documented precondition of an operation does not hold.
    Precondition(String),
    /// An iterative procedure hit its iteration cap.
    NotConverged { what: String, iterations: usize },
    /// A matrix factorization met a zero pivot.
    Singular { block: String },
    /// ORTHODIR produced a direction whose operator image vanished.
    Breakdown { iteration: usize },
    /// The dense direct solve would exceed the unknown budget.
    ResourceGuard { unknowns: usize, limit: usize },
    /// Kirchhoff beams were requested deeper than the phases were traced.
    PhaseDepth { required: usize, available: usize },
    /// A geometric assumption (convexity, no occlusion, positivity) failed.
    Geometry(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what}: argument {value} outside domain"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::NotConverged { what, iterations } => {
                write!(f, "{what} did not converge in {iterations} iterations")
            }
            Error::Singular { block } => write!(f, "singular factorization of {block}"),
            Error::Breakdown { iteration } => {
                write!(f, "ORTHODIR breakdown at iteration {iteration}: vanishing operator image")
            }
            Error::ResourceGuard { unknowns, limit } => write!(
                f,
                "{unknowns} unknowns exceed the dense solve limit of {limit}; reduce k or the node count"
            ),
            Error::PhaseDepth { required, available } => write!(
                f,
                "phases traced to depth {available} but depth {required} is required"
            ),
            Error::Geometry(msg) => write!(f, "geometry: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
