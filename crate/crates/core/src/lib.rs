//! Derived algorithms from equivalent candidates.
//!
//! Given algorithms that compute the same result with different running
//! times, the derived algorithm runs them one after another, abandoning each
//! after a budget. This crate models the joint running-time density, computes
//! the expected derived time `ET(τ)`, chooses budgets, fits step densities to
//! measured timings and executes real portfolios.
//!
//! The step-density path (`et_box`, `optimize_box`, `fit_k`, `et_empirical`)
//! is generic over [`Scalar`] and runs on `f32`, `f64` or exact rationals.
//! The closed forms are generic over `num_traits::Float`.

pub mod density;
pub mod error;
pub mod executor;
pub mod expected_time;
pub mod io;
pub mod mle;
pub mod optimizer;
pub mod quadrature;
pub mod scalar;
pub mod schedule;

pub use density::{
    Axis, BoxDensity, Expectation, ExpPolyDensity, GridDensity, GridGenerator, JointDensity, ProductDensity,
    RationalSeriesDensity, Rect, StepBox, UnivariateDensity, ValidationReport,
};
pub use error::{Error, Result};
pub use expected_time::{et_box, expected_time, EtEvaluator, EtMethod, EtResult};
pub use mle::{auto_partition, et_empirical, fit_k, BoxCounts, BoxPartition, PartitionStrategy, TimingSamples};
pub use optimizer::{dominance_check, optimize, optimize_box, OptimizationReport, ScanConfig};
pub use quadrature::QuadConfig;
pub use scalar::Scalar;
pub use schedule::{derived_time, DerivedOutcome, Schedule};

/// Exact rational arithmetic for step densities.
pub type Exact = num_rational::Rational64;

pub type BoxDensityF64 = BoxDensity<f64>;
pub type BoxDensityF32 = BoxDensity<f32>;
pub type ExactBoxDensity = BoxDensity<Exact>;
pub type ExactBoxPartition = BoxPartition<Exact>;
pub type ExactTimingSamples = TimingSamples<Exact>;
