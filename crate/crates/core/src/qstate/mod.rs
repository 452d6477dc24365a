//! Dense statevector engine over named, party-tagged registers.
//!
//! States are vectors of 2^W complex amplitudes, W the total register width,
//! indexed by concatenated register bits in layout order (most significant
//! register first). All operations are pure: inputs are never mutated.

mod density;
mod layout;
mod state;

pub use density::{partial_trace, trace_distance_density, trace_distance_to_pure, DensityOperator};
pub use layout::{pack_index, parse_bits, Party, Register, RegisterLayout};
pub use state::{
    amplitude_distance, apply_local, apply_local_with_tolerance, basis_state, basis_state_values,
    check_unitary, permute_registers, schmidt, schmidt_with_threshold, trace_distance, Branch,
    QuantumState, SchmidtDecomposition, ISOMETRY_TOLERANCE, NORM_TOLERANCE, RANK_THRESHOLD,
};
