// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by geometry construction, solvers and verification batches.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius ordering violated: need 0 < r_F < r_G (got r_F={r_f}, r_G={r_g})")]
    RadiusOrdering { r_f: f64, r_g: f64 },
    #[error("outer set escapes ambient domain")]
    EscapesAmbient,
    #[error("inclusion F ⊂ G violated at a sampled point")]
    NotNested,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("t must be positive (got {0})")]
    NonPositiveAspect(f64),
    #[error("dimension {0} not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("p must exceed 1 (got {0})")]
    ExponentTooSmall(f64),
    #[error("exponents out of range: {0}")]
    ExponentRange(String),
    #[error("p out of admissible range for curve capacity: need {lo} < p <= {hi} (got {p})")]
    CurveExponentRange { p: f64, lo: f64, hi: f64 },
    #[error("sample count {0} below minimum of 100")]
    TooFewSamples(usize),
    #[error("condenser too thin for grid: dist(F, ∂G) < 2h (h={h})")]
    CondenserTooThin { h: f64 },
    #[error("F is not resolved by the grid (no node inside F)")]
    PlateNotResolved,
    #[error("{0} is not connected on the solve grid")]
    Disconnected(&'static str),
    #[error("distance estimate dist(F, ∂G) is not positive")]
    NonPositiveDistance,
    #[error("lower bound requires convex F")]
    RequiresConvex,
    #[error("surface area of ∂F is not available for this set kind")]
    SurfaceAreaUnavailable,
    #[error("mapping is not a homeomorphism: {0}")]
    NotHomeomorphism(String),
    #[error("mapping is not invertible on the region needed by the condenser")]
    NotInvertibleOnRegion,
    #[error("distortion undefined at point: J = 0 but Dφ ≠ 0 (not finite distortion)")]
    DistortionUndefined,
    #[error("q must not exceed p (got p={p}, q={q})")]
    QExceedsP { p: f64, q: f64 },
    #[error("no valid condenser fits inside the region")]
    NoCondenserFits,
    #[error("partition sets overlap")]
    OverlappingPartition,
    #[error("radii must be strictly decreasing")]
    RadiiNotDecreasing,
    #[error("ball escapes the codomain")]
    BallEscapes,
    #[error("curve leaves the domain or violates clearance")]
    ClearanceViolation,
    #[error("no feasible initial curve")]
    NoFeasibleCurve,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
