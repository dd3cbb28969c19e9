//! Lie-algebra catalogs and path-ordered exponentials of the connection
//! `Γ_μ = θ_μ^a P_a + ½ ω_μ^a_b M^b_a − A^k_μ T_k`.
//!
//! Transport follows `g ↦ exp(−i Γ_μ Δx^μ) g`, so later parts of a curve
//! multiply on the left. The Poincaré factor uses the 5×5 affine
//! representation and is not unitary.

mod algebra;
mod field;
mod phase;
mod transport;

use thiserror::Error;

pub use algebra::{
    bracket_defect, build_group, Block, Factor, Generator, GroupSpec, LieAlgebra, BRACKET_TOL, ETA,
};
pub use field::{
    connection_at, field_strengths, gamma_from_values, ConnectionField, FieldFile, FieldStrengths,
    FieldValues, PlaneStrength, Preset, SampledField, OMEGA_TOL,
};
pub use phase::{
    complex_structure_decompose, u1_loop_integral, u1_phase_factor, winding_number, STRUCTURE_TOL,
};
pub use transport::{
    converged_holonomy, gauge_covariance_check, holonomy, holonomy_of, loop_generator,
    path_ordered, small_loop_check, BoundField, ConnectionSource, Curve, GaugeCovarianceReport,
    GaugeFunction, GaugeTransformed, GroupElement, HolonomyResult, SmallLoopReport, CLOSED_TOL,
    MAX_STEPS, SMALL_LOOP_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error("unsupported factor: {0}")]
    UnsupportedFactor(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("generators violate their brackets by {0:e}")]
    BracketViolation(f64),
    #[error("chart dimension must be 2..4, got {0}")]
    ChartDim(usize),
    #[error("point {0:?} is outside the chart")]
    OutOfChart(Vec<f64>),
    #[error("field is not differentiable at {0:?}")]
    NonDifferentiable(Vec<f64>),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("{0}")]
    PresetMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ω is not antisymmetric under η (defect {0:e})")]
    OmegaNotAntisymmetric(f64),
    #[error("step count must be at least 1")]
    InvalidSteps,
    #[error("curve needs at least 2 vertices, got {0}")]
    CurveTooShort(usize),
    #[error("bad curve: {0}")]
    BadCurve(String),
    #[error("({0}, {1}) is not a coordinate plane of the chart")]
    BadPlane(usize, usize),
    #[error("curve is not closed (endpoint gap {0:e})")]
    NotClosed(f64),
    #[error("X is not a complex structure (|X² + I| = {0:e})")]
    NotComplexStructure(f64),
    #[error("sample {index} does not commute with X (defect {defect:e})")]
    DoesNotCommute { index: usize, defect: f64 },
    #[error("sample {index} is not generated by integer charges")]
    NonIntegerCharge { index: usize },
    #[error("need at least one sample with non-zero angle")]
    NoSamples,
    #[error("field file schema: {0}")]
    Schema(String),
}
