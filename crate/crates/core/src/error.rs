use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::splitting::Iterate;

/// Errors raised by the library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("graph is not connected; components: {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("{solver} requires {requirement}")]
    Prerequisite {
        solver: &'static str,
        requirement: &'static str,
    },

    #[error("preconditioner is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    StepRejected { min_eigenvalue: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("non-finite iterate at iteration {iteration}")]
    Divergence {
        iteration: usize,
        last_finite: Box<Iterate>,
    },

    #[error("agent {agent} accessed non-local {field} of agent {owner}")]
    Locality {
        agent: usize,
        owner: usize,
        field: &'static str,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}
