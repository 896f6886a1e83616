//! Simulation of a double-heralded entangling operation (EO) between two
//! matter qubits, each embedded in a leaky optical cavity, and of the
//! cluster-state growth strategies that such a probabilistic EO enables.
//!
//! The crate is organised bottom-up:
//!
//! * [`fockspace`]: the composite matter ⊗ cavity Hilbert space, operators and states.
//! * [`trajectories`]: non-Hermitian conditional evolution, jump channels,
//!   exact branch enumeration of one detection round and Monte Carlo unraveling.
//! * [`analytic`]: closed-form decay rates, envelopes, success probabilities,
//!   chain-growth costs and error-budget estimates.
//! * [`protocol`]: the two-round EO as an executable procedure, exact or sampled.
//! * [`graphstate`]: cluster states with local-Clifford frames, the chain
//!   extension / shrink / join recipes and a dense state-vector verifier.
//! * [`growth`]: Monte Carlo cost accounting for chain-growth strategies.

pub mod analytic;
pub mod error;
pub mod fockspace;
pub mod graphstate;
pub mod growth;
pub mod linalg;
pub mod protocol;
pub mod rng;
pub mod trajectories;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
