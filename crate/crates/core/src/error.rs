use thiserror::Error;

use crate::hyp::HalfPlanePoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate isometry: |det - 1| = {residual:e}")]
    DegenerateIsometry { residual: f64 },

    #[error("non-finite integrand value {value} at ({}, {})", .at.x, .at.y)]
    NonFiniteIntegrand { at: HalfPlanePoint, value: f64 },

    #[error("surface construction failed: {what} residual {residual:e}")]
    Construction { what: &'static str, residual: f64 },

    #[error("group ball of radius {radius} exceeds the cap of {cap} elements")]
    BallCapExceeded { radius: f64, cap: usize },

    #[error("point reduction did not terminate after {iterations} steps")]
    ReductionStalled { iterations: usize },

    #[error(
        "bump support radius {support} at ({}, {}) is not below the injectivity radius {injectivity}",
        .center.x, .center.y
    )]
    SupportTooLarge {
        center: HalfPlanePoint,
        support: f64,
        injectivity: f64,
    },

    #[error("bump center ({}, {}) lies outside the fundamental domain", .0.x, .0.y)]
    CenterOutsideDomain(HalfPlanePoint),

    #[error("state outside numeric range: {0}")]
    StateOutOfRange(String),

    #[error("integrator error estimate {estimate:e} exceeds tolerance {tolerance:e} at t = {time}")]
    IntegratorBlowUp {
        time: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("critical value bounds inverted: lower {lower} > upper {upper} + {tolerance:e}")]
    BoundInversion {
        lower: f64,
        upper: f64,
        tolerance: f64,
    },

    #[error("scalar has mean {mean:e} over the surface; a zero-mean function is required")]
    NonZeroMean { mean: f64 },

    #[error("{check} failed: {details}")]
    CheckFailed { check: &'static str, details: String },

    #[error("curve segment {index} has zero duration")]
    DegenerateCurve { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
