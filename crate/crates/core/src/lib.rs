//! Generalized maximum-entropy inference.
//!
//! The crate covers the one-parameter UJK entropy family (Shannon, Rényi,
//! Tsallis and Hill numbers), the classical Gibbs/MaxEnt dual solve, a
//! correlated bit chain whose phase space grows as a power of its length,
//! the q-exponential distribution over that chain, maximum-likelihood
//! learning of the entropic index `q`, and a classifier for phase-space
//! growth.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The aliases at the crate root fix the
//! scalar to `f64`, which is what the CLI and the tolerances quoted in the
//! tests assume.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod entropy;
mod error;
pub mod io;
pub mod maxent;
pub mod mle;
pub mod optim;
pub mod qexp;
pub mod scalar;
pub mod scaling;

pub use error::{Error, Result};
pub use scalar::Real;

pub use chain::{ChainSpec, ChainState, PhaseSpaceVolume, SumStatistic};
pub use entropy::UjkVariant;
pub use qexp::{DegeneracyPolicy, DegeneracySource};
pub use scaling::{GrowthModel, Recommendation};

/// Probability vector over a finite state space, in `f64`.
pub type Distribution = entropy::ProbabilityDistribution<f64>;
/// Entropic index `q > 0`, in `f64`.
pub type Order = entropy::EntropicOrder<f64>;
/// Joint distribution over paired states, in `f64`.
pub type Joint = entropy::JointDistribution<f64>;
/// Constraint set for the classical MaxEnt solve, in `f64`.
pub type Constraints = maxent::ConstraintSet<f64>;
/// Solved Gibbs distribution, in `f64`.
pub type Gibbs = maxent::GibbsDistribution<f64>;
/// q-exponential model over chain configurations, in `f64`.
pub type QModel = qexp::QExponentialModel<f64>;
/// Degeneracy table `ln Ω(M)`, in `f64`.
pub type Degeneracy = qexp::Degeneracies<f64>;
/// Outcome of the two-step likelihood fit, in `f64`.
pub type Fit = mle::FitResult<f64>;
/// Re-centred log-likelihood grid, in `f64`.
pub type Surface = mle::LikelihoodSurface<f64>;
/// Tabulated phase-space volumes `W(N)`, in `f64`.
pub type Series = scaling::ScalingSeries<f64>;
/// Growth classification, in `f64`.
pub type Verdict = scaling::ScalingVerdict<f64>;
