use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("entropic order must be a finite q > 0, got {0}")]
    InvalidOrder(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("divergence is infinite: p[{index}] > 0 where the reference has zero mass")]
    DivergenceInfinite { index: usize },
    #[error("mutual information {i_ab} outside [0, min(h_a, h_b)] = [0, {max}]")]
    InvalidMutualInformation { i_ab: f64, max: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid constraint set: {0}")]
    InvalidConstraints(String),
    #[error("target {index} = {target} is not strictly inside the observable range [{min}, {max}]")]
    InfeasibleTargets { index: usize, target: f64, min: f64, max: f64 },
    #[error("dual solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid chain spec: n = {n}, d = {d} (need n >= 2 and d <= n - 1)")]
    InvalidChainSpec { n: usize, d: usize },
    #[error("invalid chain state: {0}")]
    InvalidChainState(String),
    #[error("enumeration of C({n_minus_one}, {d}) flip sets exceeds the limit of {limit}")]
    TooLarge { n_minus_one: usize, d: usize, limit: u64 },
    #[error("asymptotic count is undefined for d = {0}")]
    UnsupportedD(usize),
    #[error("no configuration of the chain has sum M = {0}")]
    EmptyStratum(usize),

    #[error("every configuration has zero weight (q = {q}, psi = {psi})")]
    DegenerateSupport { q: f64, psi: f64 },
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),
    #[error("log-likelihood has no interior maximum in psi on [{lo}, {hi}] at q = {q}")]
    NoInteriorMaximum { q: f64, lo: f64, hi: f64 },
    #[error("no q grid point admitted an interior maximum in psi")]
    AllPointsFailed,

    #[error("scaling series needs at least 4 distinct sizes, got {0}")]
    InsufficientPoints(usize),
    #[error("invalid scaling series: {0}")]
    InvalidSeries(String),

    #[error("parse error: {0}")]
    Parse(String),
}
