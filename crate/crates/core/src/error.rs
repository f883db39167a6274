use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid is not uniform (spacing deviation {deviation:e})")]
    NonUniformGrid { deviation: f64 },

    #[error("pole {pole} lies outside the grid range [{min}, {max}]")]
    PoleOutsideRange { pole: f64, min: f64, max: f64 },

    #[error("pole {pole} lies on a grid endpoint")]
    PoleOnEndpoint { pole: f64 },

    #[error("momentum grid is not symmetric about zero")]
    AsymmetricGrid,

    #[error("hermitian symmetry violated (imaginary residue {residue:e})")]
    HermitianViolation { residue: f64 },

    #[error("half-line momentum grid must start at k = 0 (starts at {first})")]
    MissingZeroPoint { first: f64 },

    #[error("momentum must be nonzero")]
    ZeroMomentum,

    #[error("momentum must be non-negative, got {k}")]
    NegativeMomentum { k: f64 },

    #[error("potential has not decayed at the grid edges (margin {margin:e}, max |V| {max_abs:e})")]
    UndecayedPotential { margin: f64, max_abs: f64 },

    #[error("asymptotic matching degenerate at k = {k} (|A| = {amplitude:e})")]
    MatchingDegeneracy { k: f64, amplitude: f64 },

    #[error("bound-state scan could not resolve eigenvalues near kappa = {kappa} (sign changes {found}, node count {expected})")]
    UnresolvedBracket { kappa: f64, found: usize, expected: usize },

    #[error("linear system near-singular (condition estimate {condition:e})")]
    NearSingular { condition: f64 },

    #[error("oscillation bound violated: |{value}| * {spacing} > {bound}")]
    OscillationBound { value: f64, spacing: f64, bound: f64 },

    #[error("point {value} outside the sampled range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("scattering data failed validation: {0}")]
    Validation(String),

    #[error("inadmissible perturbation: {0}")]
    InadmissiblePerturbation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::MatchingDegeneracy { .. }
                | Error::UnresolvedBracket { .. }
                | Error::NearSingular { .. }
        )
    }
}
