//! q-exponential distribution over chain configurations.
//!
//! A configuration `c` gets weight `(1 − (1−q)ψM(c))_+^{1/(1−q)}`, which is
//! the Gibbs factor `e^{−ψM}` at `q = 1`. Because the weight depends on `c`
//! only through `M`, every quantity here is computed over the `n + 1` values
//! of `M` with degeneracies `Ω(M)`.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainSpec, SumStatistic};
use crate::entropy::{EntropicOrder, ProbabilityDistribution};
use crate::scalar::{log_sum_exp, Real};
use crate::{Error, Result};

/// Exact degeneracies are used while `C(n−1, d)` stays at or below this.
pub const EXACT_DEGENERACY_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneracySource {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneracyPolicy {
    /// Exact when `C(n−1, d) ≤ 10^7`, asymptotic otherwise.
    #[default]
    Auto,
    Exact,
    Asymptotic,
}

/// `ln Ω(M)` for `M = 0..=n`, with `-∞` where no configuration exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Degeneracies<T> {
    spec: ChainSpec,
    source: DegeneracySource,
    log_counts: Vec<T>,
}

impl<T: Real> Degeneracies<T> {
    pub fn new(spec: ChainSpec, policy: DegeneracyPolicy) -> Result<Self> {
        let source = match policy {
            DegeneracyPolicy::Exact => DegeneracySource::Exact,
            DegeneracyPolicy::Asymptotic => DegeneracySource::Asymptotic,
            DegeneracyPolicy::Auto => {
                // The closed form has no d = 0 case; exact counts are trivial there.
                if spec.d() == 0 || spec.flip_sets() <= BigUint::from(EXACT_DEGENERACY_LIMIT) {
                    DegeneracySource::Exact
                } else {
                    DegeneracySource::Asymptotic
                }
            }
        };
        let log_counts = match source {
            DegeneracySource::Exact => chain::exact_counts(&spec)
                .iter()
                .map(|c| T::lit(chain::ln_biguint(c)))
                .collect(),
            DegeneracySource::Asymptotic => (0..=spec.n())
                .map(|m| chain::omega_asymptotic::<T>(&spec, m).map(|v| v.ln()))
                .collect::<Result<Vec<T>>>()?,
        };
        Ok(Self {
            spec,
            source,
            log_counts,
        })
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn source(&self) -> DegeneracySource {
        self.source
    }

    /// `ln Ω(M)`; `-∞` for sums no configuration attains.
    pub fn log_counts(&self) -> &[T] {
        &self.log_counts
    }
}

/// `ln` of the q-deformed weight, or `None` when the weight is zero.
pub fn log_q_weight<T: Real>(q: EntropicOrder<T>, psi: T, m: SumStatistic) -> Option<T> {
    let m = T::from_usize_lossy(m);
    if q.is_shannon() {
        return Some(-psi * m);
    }
    let one_minus_q = T::one() - q.get();
    let x = -one_minus_q * psi * m;
    // base = 1 + x
    if x <= -T::one() {
        return None;
    }
    Some(x.ln_1p() / one_minus_q)
}

/// `(1 − (1−q)ψm)_+^{1/(1−q)}`, or `exp(−ψm)` in the Shannon limit.
pub fn q_deformed_weight<T: Real>(q: EntropicOrder<T>, psi: T, m: SumStatistic) -> T {
    log_q_weight(q, psi, m).map_or(T::zero(), T::exp)
}

/// Model parameters as they appear in JSON: `{"n", "d", "q", "psi"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub d: usize,
    pub q: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QExponentialModel<T> {
    degeneracies: Degeneracies<T>,
    q: EntropicOrder<T>,
    psi: T,
    /// `ln(Ω(M) w(M))`, `-∞` where the product is zero.
    log_terms: Vec<T>,
    log_z: T,
}

impl<T: Real> QExponentialModel<T> {
    pub fn new(spec: ChainSpec, q: EntropicOrder<T>, psi: T) -> Result<Self> {
        Self::with_policy(spec, q, psi, DegeneracyPolicy::Auto)
    }

    pub fn with_policy(spec: ChainSpec, q: EntropicOrder<T>, psi: T, policy: DegeneracyPolicy) -> Result<Self> {
        Self::from_degeneracies(Degeneracies::new(spec, policy)?, q, psi)
    }

    /// Builds a model over precomputed degeneracies. Fails with
    /// `DegenerateSupport` if every configuration has zero weight.
    pub fn from_degeneracies(degeneracies: Degeneracies<T>, q: EntropicOrder<T>, psi: T) -> Result<Self> {
        if !(psi > T::zero()) || !psi.is_finite() {
            return Err(Error::InvalidModel(format!("psi must be finite and > 0, got {psi}")));
        }
        let log_terms: Vec<T> = degeneracies
            .log_counts
            .iter()
            .enumerate()
            .map(|(m, &lc)| match log_q_weight(q, psi, m) {
                Some(lw) if lc > T::neg_infinity() => lc + lw,
                _ => T::neg_infinity(),
            })
            .collect();
        let log_z = log_sum_exp(log_terms.iter().copied());
        if !(log_z > T::neg_infinity()) {
            return Err(Error::DegenerateSupport {
                q: q.get().to_f64_lossy(),
                psi: psi.to_f64_lossy(),
            });
        }
        Ok(Self {
            degeneracies,
            q,
            psi,
            log_terms,
            log_z,
        })
    }

    pub fn from_params(params: &ModelParams, policy: DegeneracyPolicy) -> Result<Self> {
        let spec = ChainSpec::new(params.n, params.d)?;
        Self::with_policy(spec, EntropicOrder::new(T::lit(params.q))?, T::lit(params.psi), policy)
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            n: self.spec().n(),
            d: self.spec().d(),
            q: self.q.get().to_f64_lossy(),
            psi: self.psi.to_f64_lossy(),
        }
    }

    pub fn spec(&self) -> &ChainSpec {
        self.degeneracies.spec()
    }

    pub fn q(&self) -> EntropicOrder<T> {
        self.q
    }

    pub fn psi(&self) -> T {
        self.psi
    }

    pub fn degeneracy_source(&self) -> DegeneracySource {
        self.degeneracies.source
    }

    pub fn degeneracies(&self) -> &Degeneracies<T> {
        &self.degeneracies
    }

    pub fn log_partition_function(&self) -> T {
        self.log_z
    }

    /// `ln p(c)` for a single configuration with sum `m`; `-∞` when no such
    /// configuration exists or its weight is zero.
    pub fn log_configuration_probability(&self, m: SumStatistic) -> T {
        let attainable = self.degeneracies.log_counts.get(m).is_some_and(|&lc| lc > T::neg_infinity());
        match log_q_weight(self.q, self.psi, m) {
            Some(lw) if attainable => lw - self.log_z,
            _ => T::neg_infinity(),
        }
    }

    /// Probability of `M = m` (summed over its configurations).
    pub fn log_pmf_at(&self, m: SumStatistic) -> T {
        self.log_terms.get(m).map_or(T::neg_infinity(), |&t| t - self.log_z)
    }
}

/// `Z_q(ψ) = Σ_M Ω(M) (1 − (1−q)ψM)_+^{1/(1−q)}`.
pub fn partition_function<T: Real>(model: &QExponentialModel<T>) -> T {
    model.log_z.exp()
}

/// Distribution of `M` over `0..=n`.
pub fn pmf_over_m<T: Real>(model: &QExponentialModel<T>) -> ProbabilityDistribution<T> {
    let probs = model.log_terms.iter().map(|&t| (t - model.log_z).exp()).collect();
    ProbabilityDistribution::from_weights(probs).expect("model has positive partition function")
}

pub fn mean_m<T: Real>(model: &QExponentialModel<T>) -> T {
    pmf_over_m(model)
        .probs()
        .iter()
        .enumerate()
        .map(|(m, &p)| T::from_usize_lossy(m) * p)
        .sum()
}

/// Inverse-CDF draws of `M`, deterministic per seed.
pub fn sample_m<T: Real>(model: &QExponentialModel<T>, count: usize, seed: u64) -> Vec<SumStatistic> {
    let pmf = pmf_over_m(model);
    let mut cdf: Vec<f64> = pmf
        .probs()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p.to_f64_lossy();
            Some(*acc)
        })
        .collect();
    // Pin the top of the last non-empty bin to 1 so rounding cannot fall through.
    if let Some(last) = pmf.probs().iter().rposition(|&p| p > T::zero()) {
        for c in &mut cdf[last..] {
            *c = 1.0;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            cdf.partition_point(|&c| c <= u)
        })
        .collect()
}
