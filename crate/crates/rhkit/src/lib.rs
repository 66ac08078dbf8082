//! Toolkit for computation in relatively hyperbolic groups.
//!
//! The library is organized around a free product `F_S * P_1 * ... * P_q`
//! whose elements label paths in the coned-off Cayley graph of a group
//! given by a relative presentation.  On top of that sit four layers:
//!
//! * [`group`] — words, relative presentations, free-product normal forms,
//!   and word-problem / normal-form oracles;
//! * [`graph`] — bounded exploration of the coned-off graph with angle,
//!   cone and sector queries;
//! * [`lang`] — detour detection, the geometric language and its automata;
//! * [`eq`] — equation systems, lifting into the free product, a bounded
//!   solver, and a complete decision procedure for virtually abelian groups;
//! * [`vk`] — Van Kampen diagrams, cluster analysis, and the recognition
//!   semi-algorithm for relative hyperbolicity.

pub mod eq;
pub mod graph;
pub mod group;
pub mod lang;
pub mod report;
pub mod vk;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum RhError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("fragment too small: need exploration radius at least {required}")]
    FragmentTooSmall { required: u32 },
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RhError>;
