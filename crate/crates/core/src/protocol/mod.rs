//! Message protocols over a bipartite gate and their coherentification.
//!
//! A [`MessageProtocol`] is the interleaving of local isometries with uses of
//! one bipartite gate, declared together with its message registers. The
//! coherentified run copies the messages aside, encrypts them with a coherent
//! one-time pad keyed by shared EPR pairs, runs the bare protocol, decrypts,
//! and decouples the keys, leaving a key-and-ancilla state that depends only
//! on the transmission errors.

mod cobit;
mod gates;
mod message;
mod pprime;

pub use cobit::{verify_cobit, verify_cobit_haar, Direction};
pub use gates::{operator_schmidt_rank, BipartiteGate, LocalGate};
pub use message::{
    run_protocol, GateSpec, LocalOp, MessageProtocol, ProtocolRegister, Round, RESERVED_NAMES,
};
pub use pprime::{
    ancilla_reduction, coherent_copy, enumerate_outputs, extract_gamma, gamma_branch_of_run,
    gamma_layout_names, gamma_of, make_epr, otp, p_prime_state, p_prime_width, project_registers,
    reconstruct_p_prime, run_p_prime, GammaDecomposition, PPrimeOutput, ProtocolOutputs,
};
