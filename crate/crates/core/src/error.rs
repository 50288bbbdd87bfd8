use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock truncation {fock_dim}: at least 2 levels are required")]
    InvalidDimension { fock_dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock truncation {given} too small: thermal tail needs at least {required} levels")]
    TruncationTooSmall { given: usize, required: usize },

    #[error(
        "truncation violated at step {step} (t = {time:.6e} s): \
         population {population:.3e} in the top Fock levels exceeds {limit:.1e}"
    )]
    TruncationViolation {
        step: usize,
        time: f64,
        population: f64,
        limit: f64,
    },

    #[error("missing Hamiltonian parameter `{0}`")]
    MissingParameter(String),

    #[error(
        "flux bias {flux_quanta} Φ₀ is not within 1e-6 of the integer index n = {n}; \
         use classify_bias for general bias points"
    )]
    NonIntegerFlux { flux_quanta: f64, n: i64 },

    #[error("unphysical input: {0}")]
    Unphysical(String),

    #[error("step refinement exhausted: end-state deviation {deviation:.3e} after {attempts} halvings")]
    StepRefinementExhausted { deviation: f64, attempts: usize },

    #[error("generating-function curve is missing the stencil point κ = {kappa}")]
    MissingStencil { kappa: f64 },

    #[error("empty κ grid")]
    EmptyGrid,

    #[error("variance estimate {var:.6e} is below -{bound:.3e}")]
    NegativeVariance { var: f64, bound: f64 },

    #[error("protocol/closed-form mismatch at {offending:?} (max deviation {max_deviation:.3e})")]
    ProtocolMismatch {
        offending: Vec<(f64, f64)>,
        max_deviation: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
