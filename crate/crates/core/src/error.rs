use thiserror::Error;

/// Errors raised by state construction, protocol execution, coding, and
/// resource-calculus operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),

    #[error("register `{name}` has width {width}, got {got} bits")]
    WidthMismatch {
        name: String,
        width: usize,
        got: usize,
    },

    #[error("state would need {needed} qubits, cap is {cap}")]
    WidthOverflow { needed: usize, cap: usize },

    #[error("matrix is not an isometry (max |U\u{2020}U - I| = {deviation:.3e})")]
    NotIsometric { deviation: f64 },

    #[error("matrix dimension {got} does not match target width {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state norm {norm} outside tolerance {tolerance} of 1")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("layouts differ: {0}")]
    LayoutMismatch(String),

    #[error("cut leaves one side empty")]
    OneSidedCut,

    #[error("keep list is empty")]
    EmptyKeep,

    #[error("not a permutation of the layout registers")]
    NotAPermutation,

    #[error("operation targets registers of more than one party: {0}")]
    CrossParty(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("message `{which}` has {got} bits, protocol declares {expected}")]
    MessageWidth {
        which: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("gamma branches with equal difference keys disagree (fidelity {fidelity})")]
    GammaKeyInconsistent { fidelity: f64 },

    #[error("branch weight {0} too small to normalize")]
    ZeroWeightBranch(f64),

    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),

    #[error("declared entanglement rate inconsistent with measured state: {0}")]
    InconsistentDeclaration(String),

    #[error("unknown region map `{0}`")]
    UnknownMap(String),

    #[error("regions {0} and {1} are not connected by a known map")]
    UnconnectedRegions(String, String),

    #[error("unknown resource identity `{0}`")]
    UnknownIdentity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
