//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("group closure exceeded {cap} elements; generators do not generate a finite group at working precision")]
    NotFinite { cap: usize },

    #[error("invalid parameter: {0}")]
    BadDivisor(String),

    #[error("claimed subgroup contains an element outside the ambient group")]
    NotSubgroup,

    #[error("point outside the closed unit ball (norm {norm})")]
    OutsideBall { norm: f64 },

    #[error("kernel evaluation too close to the singular set: |1 - <g.z, w>| = {value:.3e} at group element {index}")]
    SingularPoint { index: usize, value: f64 },

    #[error("jacobian vanishes at the evaluation point but is raised to a negative power (exponent {exponent})")]
    JacobianZero { exponent: f64 },

    #[error("point pair outside the region of validity: {0}")]
    OutsideRegion(String),

    #[error("series did not converge within {limit} terms")]
    NotConverged { limit: usize },

    #[error("value not expressible in the cyclotomic field Q(zeta_{conductor}): {what}")]
    NotCyclotomic { conductor: u32, what: String },

    #[error("linear form is identically zero")]
    ZeroForm,

    #[error("exact division left a nonzero remainder: {0}")]
    DivisionFailed(String),

    #[error("group element {index} is not a reflection")]
    NotReflection { index: usize },

    #[error("quotient g^-1 l is a reflection; the disjointness search requires a non-reflection quotient")]
    IsReflection,

    #[error("quotient g^-1 l is the identity")]
    IsIdentity,

    #[error("group contains no reflections")]
    NoReflections,

    #[error("quadrature did not stabilize: standard error {std_err:.3e} exceeds 10% of the estimate magnitude {magnitude:.3e}")]
    QuadratureUnstable { std_err: f64, magnitude: f64 },

    #[error("sample set is empty: {0}")]
    EmptySample(String),

    #[error("invalid group spec: {0}")]
    BadSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
