//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("root finder did not converge after {iterations} iterations (max residual {max_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        max_residual: f64,
    },
    #[error("Moebius transformation is degenerate (|ad - bc| = {det_modulus:.3e})")]
    DegenerateMoebius { det_modulus: f64 },
    #[error("map degree {degree} is below 2")]
    DegreeTooLow { degree: usize },
    #[error("critical multiplicities sum to {found}, expected {expected}; adjust the clustering tolerance")]
    MultiplicityMismatch { found: usize, expected: usize },
    #[error("orbit reaches infinity at step {step}; conjugate the map away from infinity first")]
    OrbitHitsInfinity { step: usize },
    #[error("Newton continuation of a critical point diverged (last step {last_step:.3e})")]
    NewtonDivergence { last_step: f64 },
    #[error("numerical kernel has dimension {found}, expected {expected}")]
    DimensionMismatch { found: usize, expected: usize },
    #[error("ambiguous orbit collision for rays ({i},{j}): candidates ({m1},{n1}) and ({m2},{n2}) are closer than the tolerance")]
    AmbiguousCollision {
        i: usize,
        j: usize,
        m1: usize,
        n1: usize,
        m2: usize,
        n2: usize,
    },
    #[error("orbit horizon {horizon} exhausted while resolving ray {ray}")]
    HorizonExhausted { ray: usize, horizon: usize },
    #[error("relation ({0}, {1}; {2}, {3}) is not realized by the map at the working tolerance")]
    RelationNotRealized(usize, usize, usize, usize),
    #[error("evaluation point is within {dist:.3e} of a pole")]
    NearPole { dist: f64 },
    #[error(
        "sample point is a critical value of the map (|f'| = {deriv_modulus:.3e} at a preimage)"
    )]
    CriticalValue { deriv_modulus: f64 },
    #[error("a preimage lies within tolerance of a pole of the differential")]
    PreimageAtPoleOfQ,
    #[error("a preimage of the sample point lies at infinity; choose samples away from the value of the map at infinity")]
    PreimageAtInfinity,
    #[error("no decisive singular value gap: ratio {gap:.3e} below threshold {threshold:.3e}")]
    UncertifiableRank { gap: f64, threshold: f64 },
    #[error("periodic point is not repelling (|multiplier| = {multiplier_modulus:.3e})")]
    NonRepelling { multiplier_modulus: f64 },
    #[error("critical-value chart solve failed: {0}")]
    ChartSolveFailure(String),
    #[error("map failed structural validation: {0}")]
    ValidationFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
