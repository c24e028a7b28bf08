//! Initialization of non-Clifford logical states on rotated surface codes by
//! injecting physical Z-rotations along one or more logical chains, with
//! trajectory post-selection.
//!
//! - [`lattice`]: rotated surface-code geometry, stabilizers, logical chains.
//! - [`analytics`]: closed-form pass probabilities, chain angles with and
//!   without undetectable errors, infidelities, and space-time overhead.
//! - [`engine`]: exact dense statevector simulation with a single reusable
//!   measurement ancilla and sequential stabilizer readout.
//! - [`protocol`]: preparation with trajectory recording, sign inference and
//!   correction, chain injection, two-cycle post-selection, noise injection,
//!   logical-state extraction, and Monte-Carlo overhead estimation.

pub mod analytics;
pub mod engine;
pub mod lattice;
pub mod protocol;
