//! Relational evolution in complex time for a system entangled with an
//! environment in a global energy eigenstate.
//!
//! The reduced density of the system is obtained by evolving a conditioning
//! density on the environment, pairing it with the global projector and
//! tracing the environment out. For a maximally entangled state this yields
//! the canonical ensemble at inverse temperature `Re` of twice the complex
//! time, and unitary evolution along its imaginary part.

// `!(x > 0.0)` rejects NaN as well as non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod interaction;
pub mod oracle;
pub mod propagator;
pub mod random;
pub mod relational;
pub mod thermo;

pub use error::{Error, Result};
pub use hilbert::{CMatrix, CVector, DensityMatrix, GlobalState, HermitianOperator, SpaceDims, C64};
pub use propagator::ComplexTime;
pub use relational::{ConditioningDensity, EnvironmentModel, SchmidtDecomposition, SystemSpectrumInput};
