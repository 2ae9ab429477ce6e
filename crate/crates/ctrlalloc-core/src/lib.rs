//! Constrained control allocation for over-actuated vehicles.
//!
//! Maps a virtual moment demand onto redundant effectors under asymmetric,
//! possibly time-varying magnitude and rate limits. Six allocators share
//! one interface: the min-norm pseudoinverse, its saturated variant, the
//! redistributed pseudoinverse and its scaled form, box-constrained
//! weighted least squares, and an iterative dynamic allocator built on an
//! explicit weighted-filter solution.
//!
//! The crate is `no_std` (with `alloc`); all operations are pure functions
//! over immutable values and safe to call concurrently. IO, scenario
//! configuration, and the benchmark harness live in the companion CLI
//! crate.

#![no_std]
// Index loops mirror the componentwise update equations; allocator
// signatures carry the full operation contracts.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]
// !(x > 0.0) rejects NaN; x <= 0.0 would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod actuator;
pub mod allocators;
pub mod ams;
pub mod linalg;
pub mod steady_state;
pub mod weighting;

pub use actuator::{
    effective_bounds, is_feasible, saturate, saturate_rate, ActuatorLimits, ActuatorState,
    EffectiveBounds, EffectivenessMatrix, VirtualCommand,
};
pub use allocators::{
    idca, pica, qpca, qpca_generic_ref, rpica, rspica, saturated_pica, AllocationResult,
    IdcaConfig, QpWeight,
};
pub use ams::{contains, moment_set, MomentSet};
pub use linalg::{filter_gains, pinv, LinearFilterGains, Mat};
pub use steady_state::{conditionalize, steady_state_target, ConditionalizedMap};
pub use weighting::{
    magnitude_weights, rate_weights, DragModel, WeightingConfig, WeightingMatrices,
};

/// Default relative cutoff below the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Default feasibility tolerance in degrees.
pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

/// Errors reported by constructors and allocators.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A value that must be finite was NaN or infinite.
    NonFinite(&'static str),
    /// `u_min[i] > u_max[i]`.
    BoundsOrder { index: usize },
    /// Rate bounds must bracket zero so holding position stays feasible.
    RateBracket { index: usize },
    /// A combined weight diagonal entry was zero or negative.
    DegenerateWeights { index: usize },
    /// A magnitude or rate limit left a weighting formula undefined.
    DegenerateLimits { index: usize },
    /// Operation requires different matrix or vector dimensions.
    Dimension { what: &'static str },
    /// The active-set solver tripped its anti-cycling pivot guard.
    PivotLimit { pivots: usize },
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::BoundsOrder { index } => {
                write!(f, "u_min exceeds u_max for effector {index}")
            }
            Error::RateBracket { index } => {
                write!(f, "rate bounds of effector {index} do not bracket zero")
            }
            Error::DegenerateWeights { index } => {
                write!(f, "combined weight for effector {index} is not positive")
            }
            Error::DegenerateLimits { index } => {
                write!(f, "degenerate limit for effector {index}")
            }
            Error::Dimension { what } => write!(f, "dimension mismatch: {what}"),
            Error::PivotLimit { pivots } => {
                write!(f, "active-set solver exceeded {pivots} pivots")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
