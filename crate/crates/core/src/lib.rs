//! Desk-scale simulation of bidirectional coherent classical communication
//! through bipartite unitary gates.
//!
//! The crate is organized around the pipeline that turns a two-way classical
//! message protocol into a coherent one:
//!
//! - [`qstate`]: dense statevector engine over named, party-tagged registers.
//! - [`protocol`]: message protocols built from a bipartite gate, the
//!   coherent one-time-pad construction, gamma-branch extraction, and the
//!   operational cobit check.
//! - [`code`]: classical block codes with guaranteed minimum distance,
//!   bounded-distance decoding, and syndrome supports.
//! - [`concentrate`]: entanglement concentration by Schmidt-type sampling.
//! - [`compose`]: the error-corrected composition of many protocol uses,
//!   resource ledgers, and the error/inefficiency accounting.
//! - [`resource`]: exact circuit identities among cbits, cobits, qubits and
//!   ebits, and affine maps between achievable rate regions.

pub mod code;
pub mod compose;
pub mod concentrate;
pub mod error;
pub mod protocol;
pub mod qstate;
pub mod resource;

pub use error::{Error, Result};
