//! Geometry of stochastic-optimizer trajectories.
//!
//! The crate estimates the normalized Fernique–Talagrand functional of a
//! finite set of iterates ([`ft`]), lower tail exponents of an optimizer's
//! transition kernel ([`exponents`]), spatial diagnostics such as Ripley's
//! K-function and covering numbers ([`spatial`]), and evaluates the
//! generalization-bound formulas built on these quantities ([`bounds`]).
//! Seeded process generators ([`simulate`]) and the simulation studies in
//! [`experiments`] provide ground truth for the estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod ft;
pub mod grid;
pub mod quadrature;
pub mod seed;
pub mod simulate;
pub mod spatial;
pub mod stats;
pub mod trajectory;
pub mod weights;

pub use error::{Error, Result};
pub use exponents::{BallMassCurve, StableIndexResult, TailFitResult};
pub use ft::{FtEstimate, FtMethod, FtOptions, TruncatedGram};
pub use grid::RadiusGrid;
pub use seed::Seed;
pub use simulate::{ProcessKind, ProcessSpec};
pub use spatial::{CoveringProfile, KFunctionCurve};
pub use trajectory::{IncrementSeries, StdConvention, Trajectory};
pub use weights::SimplexWeights;
