//! Cake-cutting protocols as typed trees: representation, conversion between
//! protocol models, exact execution and grid-based guarantee analysis.

pub mod dsl;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod fraction;
pub mod ir;
pub mod library;
pub mod oracle;
pub mod transform;
pub mod valuation;

pub use error::{DomainError, ExecError, OracleError, TransformError};
pub use fraction::{frac, Fraction};
pub use ir::{CutRef, NodeId, Protocol};
pub use valuation::{Allocation, EnvyMatrix, Interval, Valuation};
