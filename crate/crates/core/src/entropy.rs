//! Entropy functionals of the UJK family, divergences, Hill numbers and
//! joint-distribution information measures.
//!
//! Everything is in nats. `0 · ln 0` and `0^q` (for `q > 0`) are taken as 0,
//! and orders within [`SHANNON_BAND`] of 1 use the Shannon limit directly.

use serde::{Deserialize, Serialize};

use crate::scalar::{compensated_sum, log_sum_exp, Real};
use crate::{Error, Result};

/// Orders with `|q − 1|` below this use the Shannon limit.
pub const SHANNON_BAND: f64 = 1e-8;

/// Inputs whose total mass is within this band of 1 are renormalized.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntropicOrder<T>(T);

impl<T: Real> EntropicOrder<T> {
    pub fn new(q: T) -> Result<Self> {
        if q.is_finite() && q > T::zero() {
            Ok(Self(q))
        } else {
            Err(Error::InvalidOrder(q.to_f64_lossy()))
        }
    }

    pub fn shannon() -> Self {
        Self(T::one())
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    /// True when the order is close enough to 1 to use the Shannon branch.
    #[inline]
    pub fn is_shannon(self) -> bool {
        (self.0 - T::one()).abs() < T::lit(SHANNON_BAND)
    }
}

/// Finite probability vector. Entries are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityDistribution<T> {
    probs: Vec<T>,
}

impl<T: Real> ProbabilityDistribution<T> {
    /// Validates and renormalizes. Mass outside `1 ± 1e-9` is rejected.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < T::zero())
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} = {p} is negative or not finite"
            )));
        }
        let mass: T = probs.iter().copied().sum();
        let band = T::lit(MASS_TOLERANCE).max(T::rounding_slack() * T::from_usize_lossy(probs.len()));
        if (mass - T::one()).abs() > band {
            return Err(Error::InvalidDistribution(format!(
                "total mass {mass} deviates from 1"
            )));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p / mass).collect(),
        })
    }

    /// Normalizes arbitrary non-negative weights (at least one positive).
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() || weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidDistribution(
                "weights must be non-negative with a positive finite total".into(),
            ));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        let p = T::one() / T::from_usize_lossy(n);
        Ok(Self { probs: vec![p; n] })
    }

    #[inline]
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    /// Distribution of independent pairs, flattened row-major.
    pub fn product(&self, other: &Self) -> Self {
        let probs = self
            .probs
            .iter()
            .flat_map(|&a| other.probs.iter().map(move |&b| a * b))
            .collect();
        Self { probs }
    }
}

/// Joint distribution over `rows × cols` paired states, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution<T> {
    rows: usize,
    cols: usize,
    probs: Vec<T>,
}

impl<T: Real> JointDistribution<T> {
    pub fn new(table: Vec<Vec<T>>) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDistribution("empty joint table".into()));
        }
        if let Some(r) = table.iter().position(|row| row.len() != cols) {
            return Err(Error::InvalidDistribution(format!(
                "row {r} has {} entries, expected {cols}",
                table[r].len()
            )));
        }
        let flat = ProbabilityDistribution::new(table.into_iter().flatten().collect())?;
        Ok(Self {
            rows,
            cols,
            probs: flat.into_vec(),
        })
    }

    /// Joint of two independent marginals.
    pub fn independent(a: &ProbabilityDistribution<T>, b: &ProbabilityDistribution<T>) -> Self {
        Self {
            rows: a.len(),
            cols: b.len(),
            probs: a.product(b).into_vec(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.probs[i * self.cols + j]
    }

    pub fn row_marginal(&self) -> ProbabilityDistribution<T> {
        let probs = self
            .probs
            .chunks(self.cols)
            .map(|row| row.iter().copied().sum())
            .collect();
        ProbabilityDistribution { probs }
    }

    pub fn col_marginal(&self) -> ProbabilityDistribution<T> {
        let probs = (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect();
        ProbabilityDistribution { probs }
    }

    pub fn flatten(&self) -> ProbabilityDistribution<T> {
        ProbabilityDistribution {
            probs: self.probs.clone(),
        }
    }
}

/// Choice of the increasing map `f` applied to the power-sum root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UjkVariant {
    /// `f(x) = x`: the Hill number of order q.
    PowerSumRoot,
    /// `f(x) = ln x`: Rényi entropy.
    Logarithmic,
    /// `f(x) = ln_q x`: Tsallis entropy.
    QLogarithmic,
}

#[inline]
fn xlnx<T: Real>(p: T) -> T {
    if p > T::zero() {
        p * p.ln()
    } else {
        T::zero()
    }
}

/// `Σ p_i^q − 1`, accurate when `q` is close to 1.
fn power_sum_minus_one<T: Real>(p: &ProbabilityDistribution<T>, q: T) -> T {
    let qm1 = q - T::one();
    compensated_sum(
        p.probs
            .iter()
            .filter(|&&pi| pi > T::zero())
            .map(|&pi| pi * (qm1 * pi.ln()).exp_m1()),
    )
}

pub fn shannon_entropy<T: Real>(p: &ProbabilityDistribution<T>) -> T {
    let h = -compensated_sum(p.probs.iter().map(|&pi| xlnx(pi)));
    h.max(T::zero())
}

/// Relative entropy `D(p‖r) = Σ p_i ln(p_i / r_i)`.
pub fn kl_divergence<T: Real>(p: &ProbabilityDistribution<T>, r: &ProbabilityDistribution<T>) -> Result<T> {
    if p.len() != r.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: r.len(),
        });
    }
    let mut total = T::zero();
    for (i, (&pi, &ri)) in p.probs.iter().zip(&r.probs).enumerate() {
        if pi > T::zero() {
            if ri <= T::zero() {
                return Err(Error::DivergenceInfinite { index: i });
            }
            total = total + pi * (pi / ri).ln();
        }
    }
    Ok(total.max(T::zero()))
}

/// `R_q = ln(Σ p_i^q) / (1 − q)`.
pub fn renyi_entropy<T: Real>(p: &ProbabilityDistribution<T>, q: EntropicOrder<T>) -> T {
    if q.is_shannon() {
        return shannon_entropy(p);
    }
    let q = q.get();
    let s_minus_one = power_sum_minus_one(p, q);
    // ln_1p is only an advantage while the power sum stays near 1.
    let log_sum = if s_minus_one.abs() < T::lit(0.5) {
        s_minus_one.ln_1p()
    } else {
        log_sum_exp(p.probs.iter().filter(|&&pi| pi > T::zero()).map(|&pi| q * pi.ln()))
    };
    log_sum / (T::one() - q)
}

/// `T_q = (1 − Σ p_i^q) / (q − 1)`.
pub fn tsallis_entropy<T: Real>(p: &ProbabilityDistribution<T>, q: EntropicOrder<T>) -> T {
    if q.is_shannon() {
        return shannon_entropy(p);
    }
    let q = q.get();
    -power_sum_minus_one(p, q) / (q - T::one())
}

/// `ln_q x = (x^{1−q} − 1) / (1 − q)`, `ln x` at `q = 1`.
pub fn q_logarithm<T: Real>(x: T, q: EntropicOrder<T>) -> T {
    if q.is_shannon() {
        return x.ln();
    }
    let one_minus_q = T::one() - q.get();
    (one_minus_q * x.ln()).exp_m1() / one_minus_q
}

/// `𝒰_q(P) = (Σ p_i^q)^{1/(1−q)}`; `exp(H)` in the Shannon limit.
pub fn power_sum_root<T: Real>(p: &ProbabilityDistribution<T>, q: EntropicOrder<T>) -> T {
    renyi_entropy(p, q).exp()
}

pub fn ujk_entropy<T: Real>(p: &ProbabilityDistribution<T>, q: EntropicOrder<T>, variant: UjkVariant) -> T {
    match variant {
        UjkVariant::PowerSumRoot => power_sum_root(p, q),
        UjkVariant::Logarithmic => renyi_entropy(p, q),
        // ln_q(𝒰_q) collapses to the Tsallis form; use it directly for accuracy.
        UjkVariant::QLogarithmic => tsallis_entropy(p, q),
    }
}

/// Effective number of species of order q.
pub fn hill_number<T: Real>(p: &ProbabilityDistribution<T>, q: EntropicOrder<T>) -> T {
    renyi_entropy(p, q).exp()
}

/// Hill numbers over a grid of orders, as `(q, D_q)` pairs.
pub fn diversity_profile<T: Real>(
    p: &ProbabilityDistribution<T>,
    q_grid: &[EntropicOrder<T>],
) -> Result<Vec<(T, T)>> {
    if q_grid.is_empty() {
        return Err(Error::InvalidArgument("diversity profile needs at least one order".into()));
    }
    Ok(q_grid.iter().map(|&q| (q.get(), hill_number(p, q))).collect())
}

/// Shannon entropies of the row and column marginals.
pub fn marginal_entropies<T: Real>(j: &JointDistribution<T>) -> (T, T) {
    (shannon_entropy(&j.row_marginal()), shannon_entropy(&j.col_marginal()))
}

pub fn joint_entropy<T: Real>(j: &JointDistribution<T>) -> T {
    shannon_entropy(&j.flatten())
}

/// `I(A;B) = Σ P(i,j) ln(P(i,j) / (P(i) P(j)))`.
pub fn mutual_information<T: Real>(j: &JointDistribution<T>) -> T {
    let a = j.row_marginal();
    let b = j.col_marginal();
    let mut total = T::zero();
    for (i, &pa) in a.probs.iter().enumerate() {
        for (k, &pb) in b.probs.iter().enumerate() {
            let pij = j.get(i, k);
            if pij > T::zero() {
                total = total + pij * (pij / (pa * pb)).ln();
            }
        }
    }
    total.max(T::zero())
}

/// Number of equally common species in the union of two plots, discounting
/// the shared information: `exp(h_a + h_b − i_ab)`.
pub fn effective_species_corrected<T: Real>(h_a: T, h_b: T, i_ab: T) -> Result<T> {
    if !(h_a >= T::zero() && h_b >= T::zero()) || !h_a.is_finite() || !h_b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "marginal entropies must be finite and non-negative, got {h_a}, {h_b}"
        )));
    }
    let max = h_a.min(h_b);
    if !(i_ab >= T::zero() && i_ab <= max) {
        return Err(Error::InvalidMutualInformation {
            i_ab: i_ab.to_f64_lossy(),
            max: max.to_f64_lossy(),
        });
    }
    Ok((h_a + h_b - i_ab).exp())
}
