//! Numerical model of a qubit measurement chain: a measured system, a
//! detector, an observer and an optional decohering environment.
//!
//! The crate builds the chain's states and observables, samples
//! measurement events, computes restriction maps onto the observer, and
//! quantifies how well pure and mixed states can be told apart.

pub mod discrimination;
pub mod ensembles;
pub mod error;
pub mod hilbert;
pub mod model;

pub use error::{Error, Result};
pub use hilbert::{
    CMatrix, DensityMatrix, Observable, QuantumState, SpaceLayout, StateVector, C64,
};
