//! Exact word algebra over single-site 2x2 letters, with a dense oracle and
//! a matrix-free realization on `2^N`-dimensional state vectors.

pub mod dense;
pub mod letter;
pub mod norm;
pub mod opsum;
pub mod state;
pub mod word;

pub use dense::{dense, exact_rank, Matrix};
pub use letter::Letter;
pub use norm::{op_norm, LinearMap, NormEstimate, OperatorMap, Power};
pub use opsum::OperatorSum;
pub use state::{apply, CompiledSum, StateVector};
pub use word::TensorWord;
