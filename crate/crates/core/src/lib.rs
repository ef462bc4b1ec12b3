//! Truncated quasinilpotent operators on a tensor product of 2x2 matrix
//! algebras: exact identities, moments, partition counts and norms.

pub mod caps;
pub mod coeffs;
pub mod combinatorics;
pub mod error;
pub mod moments;
pub mod operators;
pub mod sampler;
pub mod scalar;
pub mod subspace;
pub mod tensor;

pub use caps::Caps;
pub use coeffs::CoefficientSpec;
pub use combinatorics::{CountTable, PartitionShape};
pub use error::{Error, Result};
pub use moments::{MomentReport, MomentTarget, Route};
pub use operators::{CheckReport, NamedOperator, OperatorKind};
pub use sampler::SampleRun;
pub use scalar::{CRational, Rational};
pub use subspace::{PQWord, RatioProfile};
pub use tensor::{Letter, OperatorSum, StateVector, TensorWord};
