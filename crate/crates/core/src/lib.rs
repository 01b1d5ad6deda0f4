//! Fault-tolerant logical gates on chains of 4-qubit decoherence-free blocks
//! with tunable XXZ couplings.
//!
//! The numerical core ([`operators`], [`subspace`], [`device`], [`dynamics`])
//! is generic over the real scalar type through [`Real`]; the aliases below
//! pin the double-precision instantiation used by the compiler, the noise
//! experiments and the command-line runner.
//!
//! Conventions shared by every module: qubit 0 is the most significant tensor
//! factor, `|0>` is the `+1` eigenstate of `sigma^z`, energies are in units of
//! a reference `|J|` and time in units of `1/|J|` with `hbar = 1`.

pub mod device;
pub mod dynamics;
pub mod error;
pub mod gatecomp;
pub mod noise;
pub mod operators;
pub mod scalar;
pub mod schedule;
pub mod subspace;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex amplitude in double precision.
pub type C64 = num_complex::Complex64;

pub type PauliTerm = operators::PauliTerm<f64>;
pub type OperatorExpr = operators::OperatorExpr<f64>;
pub type MatrixOperator = operators::MatrixOperator<f64>;
pub type SparseOperator = operators::SparseOperator<f64>;
pub type StateVector = operators::StateVector<f64>;

pub type GeneratorConstraint = subspace::GeneratorConstraint<f64>;
pub type SubspaceBasis = subspace::SubspaceBasis<f64>;
pub type Projector = subspace::Projector<f64>;

pub type CouplingEdge = device::CouplingEdge<f64>;
pub type BlockSpec = device::BlockSpec<f64>;
pub type ChainSpec = device::ChainSpec<f64>;

pub type EvolutionResult = dynamics::EvolutionResult<f64>;

pub use device::LogicalFrame;
pub use schedule::{Coupling, EdgeKey, PulseSchedule, RampSpec, Segment};
