//! Maximum-likelihood learning of the entropic index `q` and multiplier `ψ`
//! from observed chain sums.
//!
//! The fit is two-step: for each trial `q` the likelihood is maximized over
//! `ψ`, and `q*` is the maximizer of the resulting profile. At an inner
//! optimum the q-mean matching rule holds, which in terms of the chain sum
//! reads `E_p[M / b(M)] = mean_k[M_k / b(M_k)]` with `b(M) = 1 − (1−q)ψM`.
//!
//! The likelihood is built from configuration-level probabilities
//! `p(c) = w(M(c)) / Z`, not from the distribution of `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, SumStatistic};
use crate::entropy::EntropicOrder;
use crate::optim::{brent_maximize, newton_bisect_decreasing};
use crate::qexp::{log_q_weight, Degeneracies, DegeneracyPolicy, DegeneracySource};
use crate::scalar::{log_sum_exp, Real};
use crate::{Error, Result};

/// Observed sums `M*_k` of a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    spec: ChainSpec,
    values: Vec<SumStatistic>,
}

impl SampleSet {
    pub fn new(spec: ChainSpec, values: Vec<SumStatistic>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSamples("no samples".into()));
        }
        if let Some((i, &m)) = values.iter().enumerate().find(|(_, &m)| m > spec.n()) {
            return Err(Error::InvalidSamples(format!(
                "sample {i} = {m} exceeds the chain length {}",
                spec.n()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn values(&self) -> &[SumStatistic] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Occurrences of each `M` in `0..=n`.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.spec.n() + 1];
        for &m in &self.values {
            h[m] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    /// Points of the log-spaced outer grid over `q`.
    pub q_points: usize,
    /// Points of the log-spaced scan used to bracket the inner maximum.
    pub psi_scan_points: usize,
    pub psi_min: T,
    /// Upper end of the `ψ` bracket when the support does not bound it.
    pub psi_max: T,
    pub psi_width: T,
    pub q_width: T,
    pub policy: DegeneracyPolicy,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            q_points: 60,
            psi_scan_points: 241,
            psi_min: T::lit(1e-4),
            psi_max: T::lit(1e3),
            psi_width: T::lit(1e-8),
            q_width: T::lit(1e-4),
            policy: DegeneracyPolicy::Auto,
        }
    }
}

/// Outcome of the inner `ψ` maximization at one `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerSolve<T> {
    pub q: T,
    pub psi: T,
    /// Total log-likelihood `ℓ_q^max` in nats.
    pub log_likelihood: T,
    /// Relative violation of the q-mean matching rule at `psi`.
    pub matching_residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFailure {
    pub q: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub q_star: T,
    pub psi_star: T,
    pub log_likelihood: T,
    pub samples: usize,
    pub degeneracy_source: DegeneracySource,
    /// Every successful inner solve, grid points first, then refinement.
    pub inner_solves: Vec<InnerSolve<T>>,
    pub failures: Vec<GridFailure>,
    /// True when the matching rule holds within `MATCHING_TOLERANCE` at the optimum.
    pub converged: bool,
}

/// Re-centred log-likelihood over a `(q, ψ)` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodSurface<T> {
    pub q_grid: Vec<T>,
    pub psi_grid: Vec<T>,
    /// `deltas[i][j] = ℓ_max − ℓ(q_i, ψ_j)`; `None` outside the support.
    pub deltas: Vec<Vec<Option<T>>>,
    /// Grid point attaining the largest likelihood.
    pub best_q: T,
    pub best_psi: T,
    pub best_log_likelihood: T,
}

/// Required relative accuracy of the matching rule at an inner optimum.
pub const MATCHING_TOLERANCE: f64 = 1e-8;

/// Data and degeneracies prepared for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct Likelihood<T> {
    degeneracies: Degeneracies<T>,
    /// `(M, count)` for every observed `M`.
    observed: Vec<(SumStatistic, usize)>,
    total: usize,
    max_m: SumStatistic,
}

/// Moments of `g(M) = M / b(M)` and `g'(M) = (1−q) M² / b(M)²`.
struct Moments<T> {
    model_g: T,
    model_g2: T,
    model_dg: T,
    data_g: T,
    data_dg: T,
}

impl<T: Real> Likelihood<T> {
    pub fn new(samples: &SampleSet, policy: DegeneracyPolicy) -> Result<Self> {
        let degeneracies = Degeneracies::new(*samples.spec(), policy)?;
        Ok(Self::with_degeneracies(samples, degeneracies))
    }

    pub fn with_degeneracies(samples: &SampleSet, degeneracies: Degeneracies<T>) -> Self {
        let observed: Vec<_> = samples
            .histogram()
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .collect();
        let max_m = observed.last().map_or(0, |&(m, _)| m);
        Self {
            degeneracies,
            observed,
            total: samples.len(),
            max_m,
        }
    }

    pub fn degeneracy_source(&self) -> DegeneracySource {
        self.degeneracies.source()
    }

    fn log_z(&self, q: EntropicOrder<T>, psi: T) -> T {
        let terms = self
            .degeneracies
            .log_counts()
            .iter()
            .enumerate()
            .map(|(m, &lc)| match log_q_weight(q, psi, m) {
                Some(lw) if lc > T::neg_infinity() => lc + lw,
                _ => T::neg_infinity(),
            });
        log_sum_exp(terms.collect::<Vec<_>>())
    }

    /// `Σ_k ln p(c_k | q, ψ)`; `-∞` when a sample has zero probability.
    pub fn log_likelihood(&self, q: T, psi: T) -> T {
        let Ok(q) = EntropicOrder::new(q) else {
            return T::nan();
        };
        if !(psi > T::zero()) {
            return T::nan();
        }
        let counts = self.degeneracies.log_counts();
        let mut data = T::zero();
        for &(m, c) in &self.observed {
            if counts[m] == T::neg_infinity() {
                return T::neg_infinity();
            }
            match log_q_weight(q, psi, m) {
                Some(lw) => data = data + T::from_usize_lossy(c) * lw,
                None => return T::neg_infinity(),
            }
        }
        let log_z = self.log_z(q, psi);
        if log_z == T::neg_infinity() {
            return T::neg_infinity();
        }
        data - T::from_usize_lossy(self.total) * log_z
    }

    fn moments(&self, q: EntropicOrder<T>, psi: T) -> Moments<T> {
        let one_minus_q = if q.is_shannon() { T::zero() } else { T::one() - q.get() };
        let parts = |m: SumStatistic| {
            let mf = T::from_usize_lossy(m);
            let base = T::one() - one_minus_q * psi * mf;
            (mf / base, one_minus_q * mf * mf / (base * base))
        };
        let log_z = self.log_z(q, psi);
        let (mut g, mut g2, mut dg) = (T::zero(), T::zero(), T::zero());
        for (m, &lc) in self.degeneracies.log_counts().iter().enumerate() {
            if lc == T::neg_infinity() {
                continue;
            }
            let Some(lw) = log_q_weight(q, psi, m) else { continue };
            let p = (lc + lw - log_z).exp();
            if p == T::zero() {
                continue;
            }
            let (gm, dgm) = parts(m);
            g = g + p * gm;
            g2 = g2 + p * gm * gm;
            dg = dg + p * dgm;
        }
        let k = T::from_usize_lossy(self.total);
        let (mut data_g, mut data_dg) = (T::zero(), T::zero());
        for &(m, c) in &self.observed {
            let (gm, dgm) = parts(m);
            let c = T::from_usize_lossy(c);
            data_g = data_g + c * gm;
            data_dg = data_dg + c * dgm;
        }
        Moments {
            model_g: g,
            model_g2: g2,
            model_dg: dg,
            data_g: data_g / k,
            data_dg: data_dg / k,
        }
    }

    /// `(∂ℓ/∂ψ, ∂²ℓ/∂ψ²)` at `(q, ψ)`.
    pub fn psi_derivatives(&self, q: T, psi: T) -> Result<(T, T)> {
        let q = EntropicOrder::new(q)?;
        let mo = self.moments(q, psi);
        let k = T::from_usize_lossy(self.total);
        let first = k * (mo.model_g - mo.data_g);
        let variance = mo.model_g2 - mo.model_g * mo.model_g;
        let second = k * (mo.model_dg - variance - mo.data_dg);
        Ok((first, second))
    }

    /// Both sides of the matching rule after dividing by `Z^{1−q}`:
    /// `(Σ_x M(x) p^q(x), (1/K) Σ_k M_k p^{q−1}(x_k))` scaled to
    /// `(E_p[M/b], mean_k[M_k/b_k])`.
    pub fn matching_sides(&self, q: T, psi: T) -> Result<(T, T)> {
        let q = EntropicOrder::new(q)?;
        let mo = self.moments(q, psi);
        Ok((mo.model_g, mo.data_g))
    }

    /// `|model − data| / max(|model|, |data|)`, 0 when both sides vanish.
    pub fn matching_residual(&self, q: T, psi: T) -> Result<T> {
        let (a, b) = self.matching_sides(q, psi)?;
        let scale = a.abs().max(b.abs());
        Ok(if scale > T::zero() { (a - b).abs() / scale } else { T::zero() })
    }

    fn psi_upper(&self, q: EntropicOrder<T>, opts: &FitOptions<T>) -> T {
        if q.is_shannon() || q.get() > T::one() || self.max_m == 0 {
            return opts.psi_max;
        }
        let edge = T::one() / ((T::one() - q.get()) * T::from_usize_lossy(self.max_m));
        (edge * (T::one() - T::lit(1e-9))).min(opts.psi_max)
    }

    /// Inner step: maximize `ℓ(q, ·)` over `ψ`.
    pub fn fit_psi(&self, q: T, opts: &FitOptions<T>) -> Result<InnerSolve<T>> {
        let order = EntropicOrder::new(q)?;
        let lo = opts.psi_min;
        let hi = self.psi_upper(order, opts);
        let no_max = || Error::NoInteriorMaximum {
            q: q.to_f64_lossy(),
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        };
        if !(hi > lo) || opts.psi_scan_points < 3 {
            return Err(no_max());
        }

        let n = opts.psi_scan_points;
        let ratio = (hi / lo).ln();
        let grid: Vec<T> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo * (ratio * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)).exp()
                }
            })
            .collect();
        let values: Vec<T> = grid.iter().map(|&psi| self.log_likelihood(q, psi)).collect();
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
        }
        // A plateau reaching either end counts as a boundary maximum.
        let flat_end = values[0] >= values[best] || values[n - 1] >= values[best];
        if !(values[best] > T::neg_infinity()) || best == 0 || best == n - 1 || flat_end {
            return Err(no_max());
        }

        let (a, b) = (grid[best - 1], grid[best + 1]);
        let coarse = brent_maximize(|psi| self.log_likelihood(q, psi), a, b, opts.psi_width, 500);
        let mut psi = coarse.x;
        let mut ell = coarse.value;
        // Polish on the stationarity condition itself.
        let score = |x: T| self.psi_derivatives(q, x).unwrap_or((T::nan(), T::nan()));
        if let Some(root) = newton_bisect_decreasing(score, a, b, psi, T::lit(1e-15), 200) {
            let at_root = self.log_likelihood(q, root);
            if at_root >= ell - T::rounding_slack() * ell.abs().max(T::one()) {
                psi = root;
                ell = at_root;
            }
        }
        Ok(InnerSolve {
            q,
            psi,
            log_likelihood: ell,
            matching_residual: self.matching_residual(q, psi)?,
        })
    }

    /// Two-step fit over `q ∈ [q_min, q_max]`.
    pub fn fit(&self, q_min: T, q_max: T, opts: &FitOptions<T>) -> Result<FitResult<T>> {
        if !(q_min > T::zero() && q_max > q_min) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < q_min < q_max, got [{q_min}, {q_max}]"
            )));
        }
        if opts.q_points < 2 {
            return Err(Error::InvalidArgument("q grid needs at least 2 points".into()));
        }
        let grid = log_grid(q_min, q_max, opts.q_points);
        let outcomes: Vec<Result<InnerSolve<T>>> = grid.par_iter().map(|&q| self.fit_psi(q, opts)).collect();

        let mut solves: Vec<(usize, InnerSolve<T>)> = Vec::new();
        let mut failures = Vec::new();
        let mut best_grid: Option<usize> = None;
        for (i, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(s) => {
                    if best_grid.is_none_or(|b: usize| prefer(&s, &solves[b].1)) {
                        best_grid = Some(solves.len());
                    }
                    solves.push((i, s));
                }
                Err(e) => failures.push(GridFailure {
                    q: grid[i].to_f64_lossy(),
                    reason: e.to_string(),
                }),
            }
        }
        let Some(best) = best_grid else {
            return Err(Error::AllPointsFailed);
        };
        let centre = solves[best].0;
        let a = grid[centre.saturating_sub(1)];
        let b = grid[(centre + 1).min(grid.len() - 1)];

        let mut records: Vec<InnerSolve<T>> = solves.into_iter().map(|(_, s)| s).collect();
        let mut refined = Vec::new();
        brent_maximize(
            |q| match self.fit_psi(q, opts) {
                Ok(s) => {
                    refined.push(s);
                    s.log_likelihood
                }
                Err(_) => T::neg_infinity(),
            },
            a,
            b,
            opts.q_width,
            200,
        );
        records.extend(refined);

        let top = records
            .iter()
            .copied()
            .reduce(|acc, s| if prefer(&s, &acc) { s } else { acc })
            .expect("at least one successful solve");
        Ok(FitResult {
            q_star: top.q,
            psi_star: top.psi,
            log_likelihood: top.log_likelihood,
            samples: self.total,
            degeneracy_source: self.degeneracy_source(),
            inner_solves: records,
            failures,
            converged: top.matching_residual < T::lit(MATCHING_TOLERANCE),
        })
    }

    /// Evaluates `ℓ` on every grid point and re-centres on the largest value.
    pub fn surface(&self, q_grid: &[T], psi_grid: &[T]) -> Result<LikelihoodSurface<T>> {
        if q_grid.is_empty() || psi_grid.is_empty() {
            return Err(Error::InvalidArgument("surface grids must be non-empty".into()));
        }
        if q_grid.iter().chain(psi_grid).any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("surface grids must be positive and finite".into()));
        }
        let values: Vec<Vec<T>> = q_grid
            .par_iter()
            .map(|&q| psi_grid.iter().map(|&psi| self.log_likelihood(q, psi)).collect())
            .collect();
        let mut best = (0, 0);
        let mut best_value = T::neg_infinity();
        for (i, row) in values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best_value {
                    best_value = v;
                    best = (i, j);
                }
            }
        }
        let deltas = values
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| if v > T::neg_infinity() { Some(best_value - v) } else { None })
                    .collect()
            })
            .collect();
        Ok(LikelihoodSurface {
            q_grid: q_grid.to_vec(),
            psi_grid: psi_grid.to_vec(),
            deltas,
            best_q: q_grid[best.0],
            best_psi: psi_grid[best.1],
            best_log_likelihood: best_value,
        })
    }
}

/// Higher likelihood wins; exact ties go to the `q` nearer 1.
fn prefer<T: Real>(candidate: &InnerSolve<T>, incumbent: &InnerSolve<T>) -> bool {
    if candidate.log_likelihood != incumbent.log_likelihood {
        return candidate.log_likelihood > incumbent.log_likelihood;
    }
    (candidate.q - T::one()).abs() < (incumbent.q - T::one()).abs()
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    if points == 1 {
        return vec![lo];
    }
    let span = (hi / lo).ln();
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo * (span * T::from_usize_lossy(i) / T::from_usize_lossy(points - 1)).exp()
            }
        })
        .collect()
}

/// Evenly spaced grid of odd length whose middle entry is exactly `centre`,
/// truncated below at `floor`.
pub fn centred_grid<T: Real>(centre: T, half_width: T, points: usize, floor: T) -> Vec<T> {
    let half = points / 2;
    if half == 0 {
        return vec![centre];
    }
    let step = half_width / T::from_usize_lossy(half);
    (0..=2 * half)
        .map(|i| {
            if i == half {
                centre
            } else {
                centre + step * (T::from_usize_lossy(i) - T::from_usize_lossy(half))
            }
        })
        .filter(|&v| v >= floor)
        .collect()
}

pub fn log_likelihood<T: Real>(samples: &SampleSet, q: T, psi: T) -> Result<T> {
    Ok(Likelihood::new(samples, DegeneracyPolicy::Auto)?.log_likelihood(q, psi))
}

pub fn fit_psi_for_q<T: Real>(samples: &SampleSet, q: T) -> Result<InnerSolve<T>> {
    Likelihood::new(samples, DegeneracyPolicy::Auto)?.fit_psi(q, &FitOptions::default())
}

pub fn fit<T: Real>(samples: &SampleSet, q_min: T, q_max: T) -> Result<FitResult<T>> {
    Likelihood::new(samples, DegeneracyPolicy::Auto)?.fit(q_min, q_max, &FitOptions::default())
}

pub fn likelihood_surface<T: Real>(samples: &SampleSet, q_grid: &[T], psi_grid: &[T]) -> Result<LikelihoodSurface<T>> {
    Likelihood::new(samples, DegeneracyPolicy::Auto)?.surface(q_grid, psi_grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub n: usize,
    pub d: usize,
    pub samples: Vec<SumStatistic>,
}
